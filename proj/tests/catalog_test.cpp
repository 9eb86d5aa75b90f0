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

#include "test_util.h"

namespace opsrec {
namespace {

using testing::act;
using testing::demo_catalog;

TEST(CatalogTest, ValidActionPasses) {
  EXPECT_TRUE(validate_action(act("bedroom", "AC", "temperature", 24.0), demo_catalog()));
}

TEST(CatalogTest, FieldNotOnDeviceIsUnknownField) {
  const auto r = validate_action(act("bedroom", "light", "temperature", 24.0), demo_catalog());
  EXPECT_EQ(r.violation, Violation::kUnknownField);
}

TEST(CatalogTest, ValueOutsideRangeIsOutOfDomain) {
  const auto r = validate_action(act("bedroom", "AC", "temperature", 99.0), demo_catalog());
  EXPECT_EQ(r.violation, Violation::kOutOfDomain);
}

TEST(CatalogTest, UnknownRoomAndDevice) {
  EXPECT_EQ(validate_action(act("attic", "AC", "switch", "on"), demo_catalog()).violation,
            Violation::kUnknownRoom);
  EXPECT_EQ(validate_action(act("bedroom", "oven", "switch", "on"), demo_catalog()).violation,
            Violation::kUnknownDevice);
  // Kitchens have no AC in the demo catalog.
  EXPECT_FALSE(validate_action(act("kitchen", "AC", "switch", "on"), demo_catalog()));
}

TEST(CatalogTest, SymbolOutsideDomainRejected) {
  EXPECT_EQ(validate_action(act("bedroom", "AC", "mode", "turbo"), demo_catalog()).violation,
            Violation::kOutOfDomain);
}

TEST(CatalogTest, OppositeOfBinaryActions) {
  const auto& cat = demo_catalog();
  EXPECT_EQ(opposite_action(act("bedroom", "AC", "switch", "on"), cat),
            act("bedroom", "AC", "switch", "off"));
  EXPECT_EQ(opposite_action(act("bedroom", "AC", "switch", "off"), cat),
            act("bedroom", "AC", "switch", "on"));
  EXPECT_EQ(opposite_action(act("living_room", "light", "switch", "off"), cat),
            act("living_room", "light", "switch", "on"));
  EXPECT_EQ(opposite_action(act("bedroom", "curtain", "switch", "open"), cat),
            act("bedroom", "curtain", "switch", "close"));
}

TEST(CatalogTest, NonBinaryFieldHasNoOpposite) {
  EXPECT_FALSE(opposite_action(act("bedroom", "AC", "temperature", 24.0), demo_catalog()));
  EXPECT_FALSE(opposite_action(act("bedroom", "AC", "mode", "cool"), demo_catalog()));
}

TEST(CatalogTest, ActionIdsRoundTrip) {
  const auto& cat = demo_catalog();
  for (int id = 0; id < cat.num_actions(); ++id) {
    const Action a = cat.action_at(id);
    const auto ref = cat.resolve(a);
    ASSERT_TRUE(ref.has_value()) << to_string(a);
    EXPECT_EQ(ref->action_id, id);
    EXPECT_EQ(cat.action_id(ref->instance, ref->field_pos, ref->value_pos), id);
  }
}

TEST(CatalogTest, NumericBucketsResolve) {
  const auto ref = demo_catalog().resolve(act("bedroom", "AC", "temperature", 24.0));
  ASSERT_TRUE(ref.has_value());
  EXPECT_EQ(ref->value_pos, 24 - 16);
  EXPECT_FALSE(demo_catalog().resolve(act("bedroom", "AC", "temperature", 24.5)));
}

TEST(CatalogTest, EquivalenceClasses) {
  const auto& cat = demo_catalog();
  const auto on = cat.equivalence_class_of(act("bedroom", "AC", "switch", "on"));
  const auto comfort = cat.equivalence_class_of(act("bedroom", "AC", "mode", "comfort"));
  ASSERT_TRUE(on && comfort);
  EXPECT_EQ(*on, *comfort);
  EXPECT_EQ(cat.equivalence_class_of(act("bedroom", "AC", "temperature", 22.0)), on);
  EXPECT_FALSE(cat.equivalence_class_of(act("bedroom", "AC", "switch", "off")));
}

TEST(CatalogTest, DescriptionsRender) {
  const Description d = describe(act("living_room", "light", "switch", "on"), demo_catalog());
  EXPECT_EQ(d.template_id, "turn_on");
  EXPECT_EQ(render(d), "Turn on the living room light");
  const Description t = describe(act("bedroom", "AC", "temperature", 24.0), demo_catalog());
  EXPECT_EQ(t.template_id, "set_temperature");
}

TEST(CatalogTest, JsonRoundTripKeepsFingerprint) {
  const auto& cat = demo_catalog();
  const DeviceCatalog copy = DeviceCatalog::from_json(cat.to_json());
  EXPECT_EQ(copy.fingerprint(), cat.fingerprint());
  EXPECT_EQ(copy.num_actions(), cat.num_actions());
}

TEST(CatalogTest, MalformedCatalogRejected) {
  nlohmann::json j = demo_catalog().to_json();
  j["rooms"]["attic"] = {"oven"};
  EXPECT_THROW(DeviceCatalog::from_json(j), CatalogError);
}

}  // namespace
}  // namespace opsrec
