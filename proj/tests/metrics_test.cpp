/*
 * Copyright 2026 The opsrec Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>

#include "metrics_oracle.h"

namespace opsrec {
namespace {

using testing::act;
using testing::demo_catalog;
using testing::Oracle;
using testing::RecordGen;

TEST(ExactMatchTest, Examples) {
  const auto a = act("bedroom", "AC", "temperature", 24.0);
  EXPECT_TRUE(exact_match(a, a));
  EXPECT_FALSE(exact_match(a, act("study", "AC", "temperature", 24.0)));
  EXPECT_FALSE(exact_match(a, act("bedroom", "AC", "temperature", 25.0)));
}

TEST(LooseMatchTest, Examples) {
  const auto& cat = demo_catalog();
  EXPECT_TRUE(loose_match(act("bedroom", "AC", "temperature", 24.0),
                          act("bedroom", "AC", "temperature", 26.0), cat));
  EXPECT_TRUE(loose_match(act("bedroom", "AC", "mode", "comfort"),
                          act("bedroom", "AC", "switch", "on"), cat));
  EXPECT_FALSE(loose_match(act("bedroom", "AC", "temperature", 30.0),
                           act("bedroom", "AC", "temperature", 20.0), cat));
  EXPECT_FALSE(loose_match(act("study", "AC", "mode", "comfort"),
                           act("bedroom", "AC", "switch", "on"), cat));
  EXPECT_FALSE(loose_match(act("bedroom", "AC", "mode", "cool"),
                           act("bedroom", "AC", "switch", "on"), cat));
  EXPECT_FALSE(loose_match(act("bedroom", "AC", "switch", "off"),
                           act("bedroom", "AC", "switch", "on"), cat));
  EXPECT_TRUE(loose_match(act("bedroom", "light", "brightness", 40.0),
                          act("bedroom", "light", "switch", "on"), cat));
}

TEST(LooseMatchTest, ExactImpliesLoose) {
  Oracle oracle;
  RecordGen gen(91);
  for (int i = 0; i < 2000; ++i) {
    const Action a = gen.random_action();
    EXPECT_TRUE(loose_match(a, a, demo_catalog()));
  }
}

TEST(LmF1Test, Examples) {
  const auto on = act("bedroom", "AC", "switch", "on");
  const auto off = act("bedroom", "AC", "switch", "off");
  const auto t24 = act("bedroom", "AC", "temperature", 24.0);
  EXPECT_DOUBLE_EQ(lm_f1({{{on, t24}, {on, t24}}}, demo_catalog()), 1.0);
  // precision 1/2, recall 1/2
  const auto c = lm_counts({{{on, off}, {on, t24}}}, demo_catalog());
  EXPECT_EQ(c.matched, 1u);
  EXPECT_DOUBLE_EQ(c.precision(), 0.5);
  EXPECT_DOUBLE_EQ(c.recall(), 0.5);
  EXPECT_DOUBLE_EQ(c.f1(), 0.5);
  EXPECT_DOUBLE_EQ(lm_f1({{{off}, {on}}}, demo_catalog()), 0.0);
  EXPECT_THROW(lm_f1({}, demo_catalog()), InvalidArgument);
}

TEST(LmF1Test, MatchingIsOneToOne) {
  // Both predictions loosely match the single label; only one may count.
  const auto label = act("bedroom", "AC", "temperature", 25.0);
  const std::vector<Action> pred = {act("bedroom", "AC", "temperature", 24.0),
                                    act("bedroom", "AC", "temperature", 26.0)};
  EXPECT_EQ(loose_matching_size(pred, {label}, demo_catalog()), 1u);
}

TEST(LmF1Test, MaximumMatchingBeatsGreedyOrder) {
  // The first prediction could take either label; a greedy first pick of
  // the switch label would strand the second prediction.
  const std::vector<Action> pred = {act("bedroom", "AC", "mode", "comfort"),
                                    act("bedroom", "AC", "switch", "on")};
  const std::vector<Action> label = {act("bedroom", "AC", "switch", "on"),
                                     act("bedroom", "AC", "temperature", 24.0)};
  EXPECT_EQ(loose_matching_size(pred, label, demo_catalog()), 2u);
}

TEST(RuleTest, PiecewiseCases) {
  const auto& cat = demo_catalog();
  const auto on = act("bedroom", "AC", "switch", "on");
  const auto off = act("bedroom", "AC", "switch", "off");
  const auto lon = act("study", "light", "switch", "on");
  const auto loff = act("study", "light", "switch", "off");
  const auto cur = act("bedroom", "curtain", "switch", "close");
  EXPECT_EQ(rule_score({on}, {on}, cat), 1.0);
  EXPECT_EQ(rule_case({on}, {on}, cat), RuleCase::kIdentical);
  EXPECT_EQ(rule_score({off}, {on}, cat), -0.1);
  EXPECT_EQ(rule_score({off, loff}, {on, lon}, cat), -0.1);
  EXPECT_EQ(rule_score({on, lon}, {on}, cat), 0.9);
  EXPECT_EQ(rule_case({on, lon}, {on}, cat), RuleCase::kContaining);
  EXPECT_EQ(rule_score({on, lon, loff}, {on, lon, cur}, cat), 0.5);
  EXPECT_EQ(rule_case({on, lon, loff}, {on, lon, cur}, cat), RuleCase::kIntersecting);
  EXPECT_EQ(rule_score({cur}, {on}, cat), 0.0);
  EXPECT_EQ(rule_case({cur}, {on}, cat), RuleCase::kDisjoint);
  // Order and duplicates do not matter for the set comparison.
  EXPECT_EQ(rule_score({lon, on, on}, {on, lon}, cat), 1.0);
  // A partial flip is not the opposite case.
  EXPECT_EQ(rule_score({off}, {on, lon}, cat), 0.0);
  EXPECT_THROW(rule_score({}, {on}, cat), InvalidArgument);
}

TEST(EmTest, OrderedLists) {
  const auto on = act("bedroom", "AC", "switch", "on");
  const auto t24 = act("bedroom", "AC", "temperature", 24.0);
  EXPECT_TRUE(record_exact_match({{on, t24}, {on, t24}}));
  EXPECT_FALSE(record_exact_match({{t24, on}, {on, t24}}));
  EXPECT_FALSE(record_exact_match({{on}, {on, t24}}));
  EXPECT_DOUBLE_EQ(em_accuracy({{{on}, {on}}, {{t24}, {on}}}), 0.5);
}

TEST(OracleTest, ThousandRandomRecords) {
  Oracle oracle;
  RecordGen gen(92);
  std::vector<EvalRecord> records;
  for (int i = 0; i < 1000; ++i) records.push_back(gen.record(oracle));

  std::size_t em = 0, matched = 0, np = 0, nl = 0;
  double rule_num = 0, rule_den = 0;
  std::set<RuleCase> seen;
  for (const auto& r : records) {
    ASSERT_LE(r.predicted.size(), 4u);
    ASSERT_LE(r.label.size(), 4u);
    EXPECT_EQ(record_exact_match(r), Oracle::em(r.predicted, r.label));
    em += Oracle::em(r.predicted, r.label);
    const std::size_t m = oracle.matching(r.predicted, r.label);
    EXPECT_EQ(loose_matching_size(r.predicted, r.label, demo_catalog()), m);
    matched += m;
    np += r.predicted.size();
    nl += r.label.size();
    const double s = oracle.rule(r.predicted, r.label);
    EXPECT_EQ(rule_score(r.predicted, r.label, demo_catalog()), s);
    seen.insert(rule_case(r.predicted, r.label, demo_catalog()));
    rule_num += r.predicted.size() * s;
    rule_den += r.predicted.size();
  }
  EXPECT_EQ(seen.size(), 5u);  // every case is exercised
  EXPECT_EQ(em_accuracy(records), static_cast<double>(em) / records.size());
  const auto c = lm_counts(records, demo_catalog());
  EXPECT_EQ(c.matched, matched);
  EXPECT_EQ(c.predicted, np);
  EXPECT_EQ(c.labels, nl);
  const double p = static_cast<double>(matched) / np, r = static_cast<double>(matched) / nl;
  EXPECT_DOUBLE_EQ(lm_f1(records, demo_catalog()), 2 * p * r / (p + r));
  EXPECT_DOUBLE_EQ(corpus_rule_score(records, demo_catalog()), rule_num / rule_den);
}

class EvaluateTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto pop = testing::simulate(93, 10, 14);
    const auto split = make_splits(pop.data, PopulationConfig::default_start() + 10 * kMinutesPerDay,
                                   demo_catalog());
    split_ = new LabeledSplit(split.test);
  }
  static void TearDownTestSuite() { delete split_; }
  static LabeledSplit* split_;
};

LabeledSplit* EvaluateTest::split_ = nullptr;

TEST_F(EvaluateTest, PerfectPredictionsScoreOne) {
  std::vector<std::vector<Action>> preds;
  for (const auto& li : split_->instances) preds.push_back(li.instance.target_actions);
  const auto rep = evaluate(preds, *split_, demo_catalog());
  const auto& w = rep.whole();
  EXPECT_EQ(w.group, "Whole");
  EXPECT_EQ(w.records, split_->instances.size());
  EXPECT_DOUBLE_EQ(w.em, 1.0);
  EXPECT_DOUBLE_EQ(w.lm_f1, 1.0);
  EXPECT_DOUBLE_EQ(w.rule, 1.0);
  for (const auto& g : rep.groups) {
    if (g.records > 0) EXPECT_DOUBLE_EQ(g.em, 1.0) << g.group;
  }
  EXPECT_EQ(rep.groups.front().group, "1-5");
  EXPECT_NE(rep.to_csv().find("Whole,"), std::string::npos);
  EXPECT_NE(rep.to_table("FT").find("Whole"), std::string::npos);
}

TEST_F(EvaluateTest, AllOppositePredictionsScoreMinusTenth) {
  LabeledSplit flippable;
  std::vector<std::vector<Action>> preds;
  for (const auto& li : split_->instances) {
    std::vector<Action> flipped;
    for (const auto& a : li.instance.target_actions) {
      if (auto o = opposite_action(a, demo_catalog())) flipped.push_back(*o);
    }
    if (flipped.size() != li.instance.target_actions.size()) continue;
    flippable.instances.push_back(li);
    preds.push_back(flipped);
  }
  ASSERT_GT(flippable.instances.size(), 20u);
  const auto rep = evaluate(preds, flippable, demo_catalog());
  EXPECT_NEAR(rep.whole().rule, -0.1, 1e-12);
  EXPECT_DOUBLE_EQ(rep.whole().em, 0.0);
}

TEST_F(EvaluateTest, RejectsMisalignedPredictions) {
  EXPECT_THROW(evaluate({}, *split_, demo_catalog()), InvalidArgument);
}

}  // namespace
}  // namespace opsrec
