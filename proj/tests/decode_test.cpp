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

#include "model_util.h"
#include "opsrec/decode.h"

namespace opsrec {
namespace {

using testing::act;
using testing::demo_catalog;

Prompt evening_prompt(std::vector<DeviceRef> candidates) {
  Prompt p;
  p.time = testing::at(1, 20, 30);
  p.history = {testing::op(testing::at(1, 20, 0), {act("living_room", "light", "switch", "on")})};
  p.candidates = std::move(candidates);
  return p;
}

TEST(DecodeTest, SingleCandidateSaturatesDevice) {
  ReferenceModel m(demo_catalog(), {}, 8);
  testing::randomize(m, 61);
  const auto rec = decode_recommendation(m, evening_prompt({{"bedroom", "curtain"}}),
                                         DecodeStrategy::kActionFirst);
  ASSERT_FALSE(rec.actions.empty());
  for (const auto& a : rec.actions) {
    EXPECT_EQ(a.action.room, "bedroom");
    EXPECT_EQ(a.action.device, "curtain");
    EXPECT_DOUBLE_EQ(a.device.prob, 1.0);
    EXPECT_EQ(a.device.support, 1);
    EXPECT_EQ(a.field.support, 1);  // curtains only have a switch
    EXPECT_EQ(a.value.support, 2);
  }
  EXPECT_DOUBLE_EQ(rec.first_token(), 1.0);
}

TEST(DecodeTest, ActionFirstDescribesFirstAction) {
  ReferenceModel m(demo_catalog(), {}, 8);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    testing::randomize(m, seed);
    const auto rec = decode_recommendation(
        m, evening_prompt({{"bedroom", "AC"}, {"study", "light"}, {"kitchen", "switch"}}),
        DecodeStrategy::kActionFirst);
    ASSERT_FALSE(rec.actions.empty());
    EXPECT_EQ(rec.description, describe(rec.actions.front().action, demo_catalog()));
    for (const auto& a : rec.actions) EXPECT_TRUE(validate_action(a.action, demo_catalog()));
  }
}

TEST(DecodeTest, UntrainedModelDecodesSameActionsEitherWay) {
  ReferenceModel m(demo_catalog(), {}, 8);
  const auto p = evening_prompt({{"bedroom", "AC"}, {"study", "light"}});
  const auto a = decode_recommendation(m, p, DecodeStrategy::kActionFirst);
  const auto b = decode_recommendation(m, p, DecodeStrategy::kTextFirst);
  EXPECT_EQ(a.plain_actions(), b.plain_actions());
}

TEST(DecodeTest, MockModelReproducesItsTarget) {
  FeatureConfig cfg;
  const std::vector<Action> target = {act("bedroom", "AC", "switch", "on"),
                                      act("bedroom", "AC", "temperature", 24.0)};
  const auto desc = describe(target.front(), demo_catalog());
  testing::MockModel mock(demo_catalog(), cfg, encode_actions(target, demo_catalog()),
                          encode_description(desc, demo_catalog()));
  for (int s = 0; s < kNumSlots; ++s) mock.set_hit(static_cast<Slot>(s), 0.9);
  const auto p = evening_prompt({{"bedroom", "AC"}, {"study", "light"}});
  for (auto strategy : {DecodeStrategy::kActionFirst, DecodeStrategy::kTextFirst}) {
    const auto rec = decode_recommendation(mock, p, strategy);
    EXPECT_EQ(rec.plain_actions(), target);
    EXPECT_EQ(rec.description, desc);
    EXPECT_EQ(rec.time, p.time);
    EXPECT_DOUBLE_EQ(rec.actions[1].value.prob, 0.9);
    EXPECT_TRUE(rec.actions[1].value.numeric);
    EXPECT_FALSE(rec.actions[0].value.numeric);
  }
}

TEST(DecodeTest, RejectsPromptWithoutCandidates) {
  ReferenceModel m(demo_catalog(), {}, 8);
  EXPECT_THROW(decode_recommendation(m, evening_prompt({}), DecodeStrategy::kActionFirst),
               InvalidArgument);
}

TEST(DecodeTest, RecommendationJsonRoundTrip) {
  ReferenceModel m(demo_catalog(), {}, 8);
  testing::randomize(m, 62);
  auto rec = decode_recommendation(m, evening_prompt({{"bedroom", "AC"}}),
                                   DecodeStrategy::kTextFirst);
  rec.user_id = "u0007";
  const auto back = Recommendation::from_json(rec.to_json());
  EXPECT_EQ(back.to_json(), rec.to_json());
  EXPECT_EQ(back.plain_actions(), rec.plain_actions());
}

TEST(DecodeTest, FirstTokenNeedsAnAction) {
  Recommendation r;
  EXPECT_THROW(r.first_token(), InvalidArgument);
}

}  // namespace
}  // namespace opsrec
