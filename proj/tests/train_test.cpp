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
#include <limits>

#include "model_util.h"
#include "opsrec/preference.h"
#include "opsrec/train.h"

namespace opsrec {
namespace {

using testing::demo_catalog;

std::vector<EncodedInstance> encode_all(const FeatureSpace& space,
                                        const std::vector<FinetuneInstance>& xs) {
  std::vector<EncodedInstance> out;
  for (const auto& x : xs) out.push_back(encode_instance(space, x));
  return out;
}

double mean_factorized(const ReferenceModel& m, const std::vector<EncodedInstance>& xs) {
  double s = 0;
  for (const auto& x : xs) s += factorized_loss(m, x);
  return s / xs.size();
}

TEST(TrainConfigTest, ValidateRejectsBadValues) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.learning_rate = -1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.epochs = -1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.beta = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(TrainConfigTest, EnumNamesRoundTrip) {
  for (auto o : {Objective::kPretrain, Objective::kJoint, Objective::kFactorized,
                 Objective::kTextFirst, Objective::kDpo}) {
    EXPECT_EQ(parse_objective(to_string(o)), o);
  }
  for (auto s : {DecodeStrategy::kActionFirst, DecodeStrategy::kTextFirst}) {
    EXPECT_EQ(parse_decode_strategy(to_string(s)), s);
  }
  EXPECT_THROW(parse_objective("sft"), InvalidArgument);
}

TEST(TrainTest, PretrainLowersHeldOutLoss) {
  const auto pop = testing::simulate(31, 6, 14);
  FillerCorpus filler(16, 2);
  CorpusConfig cc;
  cc.max_len = 256;
  const auto windows = build_pretrain_stream(pop.data, filler, cc, demo_catalog(), 3);
  ReferenceModel m(demo_catalog(), {}, 16);
  std::vector<EncodedWindow> train, held;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    (i % 5 == 0 ? held : train).push_back(encode_window(m.space(), windows[i], 16));
  }
  ASSERT_FALSE(held.empty());
  auto held_loss = [&] {
    double s = 0;
    for (const auto& w : held) s += pretrain_loss(m, w);
    return s;
  };
  const double before = held_loss();
  TrainConfig tc;
  tc.learning_rate = 0.02;
  tc.epochs = 1;
  tc.objective = Objective::kPretrain;
  const auto rep = train_pretrain(m, train, tc);
  EXPECT_EQ(rep.epoch_loss.size(), 1u);
  EXPECT_LT(held_loss(), before);
}

TEST(TrainTest, FinetuneLowersHeldOutLoss) {
  ReferenceModel m(demo_catalog(), {}, 8);
  const auto train = encode_all(m.space(), testing::sample_instances(41, 300, 8, 14));
  const auto held = encode_all(m.space(), testing::sample_instances(42, 60, 4, 14));
  const double before = mean_factorized(m, held);
  TrainConfig tc;
  tc.learning_rate = 0.05;
  tc.epochs = 3;
  const auto rep = train_finetune(m, train, tc);
  ASSERT_EQ(rep.epoch_loss.size(), 3u);
  EXPECT_LT(rep.epoch_loss.back(), rep.epoch_loss.front());
  EXPECT_LT(mean_factorized(m, held), before);
}

TEST(TrainTest, ZeroLearningRateKeepsParameters) {
  ReferenceModel m(demo_catalog(), {}, 8);
  testing::randomize(m, 5);
  std::vector<double> before(m.num_parameters());
  for (std::size_t k = 0; k < before.size(); ++k) before[k] = m.parameter(k);
  TrainConfig tc;
  tc.learning_rate = 0;
  train_finetune(m, encode_all(m.space(), testing::sample_instances(43, 20)), tc);
  for (std::size_t k = 0; k < before.size(); ++k) ASSERT_EQ(m.parameter(k), before[k]);
}

TEST(TrainTest, SameSeedSameModel) {
  const auto xs = testing::sample_instances(44, 50);
  ReferenceModel a(demo_catalog(), {}, 8), b(demo_catalog(), {}, 8);
  TrainConfig tc;
  tc.seed = 9;
  train_finetune(a, encode_all(a.space(), xs), tc);
  train_finetune(b, encode_all(b.space(), xs), tc);
  for (std::size_t k = 0; k < a.num_parameters(); ++k) ASSERT_EQ(a.parameter(k), b.parameter(k));
}

TEST(TrainTest, NonFiniteParametersRaiseDivergence) {
  ReferenceModel m(demo_catalog(), {}, 8);
  const auto xs = encode_all(m.space(), testing::sample_instances(45, 10));
  for (std::size_t k = 0; k < m.num_parameters(); ++k) {
    m.parameter(k) = std::numeric_limits<double>::quiet_NaN();
  }
  EXPECT_THROW(train_finetune(m, xs, {}), DivergenceError);
}

TEST(TrainTest, HugeStepRaisesDivergence) {
  ReferenceModel m(demo_catalog(), {}, 8);
  const auto xs = encode_all(m.space(), testing::sample_instances(46, 50));
  TrainConfig tc;
  tc.learning_rate = 1e308;
  EXPECT_THROW(train_finetune(m, xs, tc), DivergenceError);
}

TEST(TrainTest, DpoMarginIncreasesEveryEpoch) {
  const auto pop = testing::simulate(47, 8, 21);
  PreferenceConfig pc;
  auto pairs = build_dpo_dataset(pop.data, demo_catalog(), pc);
  ASSERT_GT(pairs.size(), 200u);
  pairs.resize(200);
  ReferenceModel ref(demo_catalog(), {}, 8);
  TrainConfig ft;
  ft.learning_rate = 0.05;
  train_finetune(ref, encode_all(ref.space(), testing::sample_instances(48, 200, 8, 21)), ft);
  std::vector<EncodedPair> enc;
  for (const auto& p : pairs) enc.push_back(encode_pair(ref.space(), p));

  ReferenceModel m = ref;
  TrainConfig tc;
  tc.objective = Objective::kDpo;
  tc.learning_rate = 0.003;
  tc.epochs = 3;
  const auto rep = train_dpo(m, ref, enc, tc);
  ASSERT_EQ(rep.epoch_margin.size(), 4u);
  EXPECT_NEAR(rep.epoch_margin[0], mean_margin(ref, enc), 1e-12);
  for (std::size_t e = 1; e < rep.epoch_margin.size(); ++e) {
    EXPECT_GT(rep.epoch_margin[e], rep.epoch_margin[e - 1]);
  }
  ASSERT_EQ(rep.epoch_loss.size(), 3u);
  EXPECT_LT(rep.epoch_loss.front(), std::log(2.0) + 1e-9);
}

}  // namespace
}  // namespace opsrec
