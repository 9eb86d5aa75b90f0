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

#include <algorithm>

#include "opsrec/corpus.h"
#include "test_util.h"

namespace opsrec {
namespace {

using testing::act;
using testing::at;
using testing::demo_catalog;

History toy_history(int n) {
  History h;
  h.user_id = "u0001";
  h.devices = {{"bedroom", "AC"}, {"bedroom", "light"}, {"living_room", "curtain"}};
  for (int i = 0; i < n; ++i) {
    const char* v = i % 2 ? "off" : "on";
    h.operations.push_back(testing::op(at(0, 6, 0) + i * 17, {act("bedroom", "light", "switch", v)}));
  }
  return h;
}

TEST(CorpusTest, PromptUsesOperationsBeforeCutoff) {
  const History h = toy_history(5);
  const Prompt p = build_prompt(h, 4, demo_catalog());
  ASSERT_EQ(p.history.size(), 4u);
  EXPECT_EQ(p.history.back(), h.operations[3]);
  EXPECT_EQ(p.time, h.operations[4].timestamp);
}

TEST(CorpusTest, PromptKeepsLastHOperations) {
  const History h = toy_history(40);
  const Prompt p = build_prompt(h, 39, demo_catalog(), 20);
  ASSERT_EQ(p.history.size(), 20u);
  EXPECT_EQ(p.history.front(), h.operations[19]);
  EXPECT_EQ(p.history.back(), h.operations[38]);
}

TEST(CorpusTest, CandidatesAreTheFullDeviceList) {
  const History h = toy_history(5);
  const Prompt p = build_prompt(h, 2, demo_catalog());
  auto expected = h.devices;
  auto got = p.candidates;
  std::sort(expected.begin(), expected.end());
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, expected);
}

TEST(CorpusTest, CutoffOutOfRangeRejected) {
  const History h = toy_history(5);
  EXPECT_THROW(build_prompt(h, 0, demo_catalog()), InvalidArgument);
  EXPECT_THROW(build_prompt(h, 5, demo_catalog()), InvalidArgument);
}

TEST(CorpusTest, MissingDescriptionIsSynthesized) {
  History h = toy_history(3);
  h.operations[2].description.reset();
  const auto inst = build_finetune_instance(h, demo_catalog());
  EXPECT_EQ(inst.target_description, describe(h.operations[2].actions.front(), demo_catalog()));
}

TEST(CorpusTest, InstanceTokenRoundTrip) {
  const History h = toy_history(8);
  const auto inst = build_finetune_instance_at(h, 6, demo_catalog());
  const auto back = parse_instance(serialize_instance(inst, demo_catalog()), demo_catalog());
  EXPECT_EQ(back.prompt, inst.prompt);
  EXPECT_EQ(back.target_actions, inst.target_actions);
  EXPECT_EQ(back.target_description, inst.target_description);
}

std::size_t count(const std::vector<PretrainWindow>& ws, WindowKind k) {
  return static_cast<std::size_t>(
      std::count_if(ws.begin(), ws.end(), [&](const auto& w) { return w.kind == k; }));
}

TEST(CorpusTest, PretrainMixingRatio) {
  const auto pop = testing::simulate(5, 4, 14);
  FillerCorpus filler(16, 5);
  CorpusConfig cfg;
  cfg.max_len = 512;
  const auto mixed = build_pretrain_stream(pop.data, filler, cfg, demo_catalog(), 5);
  const std::size_t ops = count(mixed, WindowKind::kOperations);
  ASSERT_GE(ops, 10u);
  EXPECT_EQ(count(mixed, WindowKind::kFiller), ops);
  for (const auto& w : mixed) EXPECT_EQ(w.tokens.size(), 512u);

  cfg.mix_filler = 0;
  const auto pure = build_pretrain_stream(pop.data, filler, cfg, demo_catalog(), 5);
  EXPECT_EQ(count(pure, WindowKind::kFiller), 0u);
  EXPECT_EQ(count(pure, WindowKind::kOperations), ops);
}

TEST(CorpusTest, TenOperationWindowsGetTenFillerWindows) {
  const auto pop = testing::simulate(5, 1, 70);
  FillerCorpus filler(16, 5);
  CorpusConfig cfg;
  cfg.max_len = 256;
  Dataset data = {pop.data.front()};
  auto ops_windows = [&] {
    return count(build_pretrain_stream(data, filler, cfg, demo_catalog(), 5),
                 WindowKind::kOperations);
  };
  ASSERT_GT(ops_windows(), 10u);
  // Each dropped operation removes at most one window.
  while (ops_windows() > 10) data.front().operations.pop_back();
  const auto ws = build_pretrain_stream(data, filler, cfg, demo_catalog(), 5);
  ASSERT_EQ(count(ws, WindowKind::kOperations), 10u);
  EXPECT_EQ(count(ws, WindowKind::kFiller), 10u);
}

TEST(CorpusTest, PretrainStreamIsDeterministic) {
  const auto pop = testing::simulate(5, 3, 7);
  FillerCorpus f1(16, 9), f2(16, 9);
  CorpusConfig cfg;
  cfg.max_len = 256;
  const auto a = build_pretrain_stream(pop.data, f1, cfg, demo_catalog(), 11);
  const auto b = build_pretrain_stream(pop.data, f2, cfg, demo_catalog(), 11);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].tokens, b[i].tokens);
}

TEST(CorpusTest, OperationWindowsParseBack) {
  const auto pop = testing::simulate(5, 2, 5);
  FillerCorpus filler(16, 1);
  CorpusConfig cfg;
  cfg.max_len = 4096;
  cfg.mix_filler = 0;
  const auto ws = build_pretrain_stream(pop.data, filler, cfg, demo_catalog(), 1);
  std::size_t parsed = 0;
  for (const auto& w : ws) {
    for (const auto& seg : parse_operation_window(w.tokens, demo_catalog())) parsed += seg.size();
  }
  std::size_t total = 0;
  for (const auto& h : pop.data) total += h.operations.size();
  EXPECT_EQ(parsed, total);
}

TEST(CorpusTest, FillerRowsAreDistributions) {
  FillerCorpus f(8, 3);
  for (int prev = 0; prev < 8; ++prev) {
    double sum = 0;
    for (int next = 0; next < 8; ++next) sum += f.transition(prev, next);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(CorpusTest, VocabularyCoversSerializedSymbols) {
  const auto vocab = Vocabulary::for_catalog(demo_catalog(), 16);
  const History h = toy_history(4);
  const auto inst = build_finetune_instance(h, demo_catalog());
  const auto tokens = serialize_instance(inst, demo_catalog());
  EXPECT_EQ(vocab.decode(vocab.encode(tokens)), tokens);
}

}  // namespace
}  // namespace opsrec
