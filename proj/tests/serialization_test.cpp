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

#include <filesystem>

#include "opsrec/serialization.h"
#include "test_util.h"

namespace opsrec {
namespace {

using testing::act;
using testing::demo_catalog;

std::vector<Operation> simulated_ops(std::size_t n) {
  const auto pop = testing::simulate(7, 6, 21);
  std::vector<Operation> ops;
  for (const auto& h : pop.data) {
    for (const auto& o : h.operations) {
      if (ops.size() < n) ops.push_back(o);
    }
  }
  return ops;
}

TEST(SerializationTest, JsonRoundTripOnSimulatedOperations) {
  const auto ops = simulated_ops(1000);
  ASSERT_EQ(ops.size(), 1000u);
  for (const auto& o : ops) {
    EXPECT_EQ(operation_from_json(to_json(o)), o);
  }
}

TEST(SerializationTest, TokenRoundTripOnSimulatedOperations) {
  const auto ops = simulated_ops(1000);
  for (const auto& o : ops) {
    const auto tokens = serialize_operation(o, SerializeMode::kHistory, demo_catalog());
    Operation back = parse_operation(tokens, demo_catalog());
    Operation expected = o;
    expected.description.reset();  // history mode carries no description
    EXPECT_EQ(back, expected);
  }
}

TEST(SerializationTest, TargetModeKeepsDescription) {
  Operation o = testing::op(testing::at(0, 7, 30), {act("bedroom", "AC", "switch", "on")});
  o.description = Description{"turn_on", "bedroom", "AC"};
  const auto tokens = serialize_operation(o, SerializeMode::kTarget, demo_catalog());
  EXPECT_EQ(parse_operation(tokens, demo_catalog()), o);
}

TEST(SerializationTest, NumericValuesSurviveJson) {
  const Action a = act("bedroom", "AC", "temperature", 24.0);
  const Action back = action_from_json(to_json(a));
  EXPECT_EQ(back, a);
  EXPECT_TRUE(back.value.is_numeric());
  EXPECT_DOUBLE_EQ(back.value.number(), 24.0);
}

TEST(SerializationTest, JsonlHeaderAndRecords) {
  const auto dir = std::filesystem::temp_directory_path() / "opsrec_serialization_test";
  std::filesystem::create_directories(dir);
  const ArtifactHeader h{"simulate", "abc", 9, 1};
  write_jsonl(dir / "x.jsonl", h, {nlohmann::json{{"a", 1}}, nlohmann::json{{"a", 2}}});
  const JsonlFile f = read_jsonl(dir / "x.jsonl");
  EXPECT_EQ(f.header, h);
  ASSERT_EQ(f.records.size(), 2u);
  EXPECT_EQ(f.records[1].at("a"), 2);
  std::filesystem::remove_all(dir);
}

TEST(SerializationTest, HistoriesRoundTrip) {
  const auto pop = testing::simulate(3, 3, 5);
  const Dataset back = histories_from_records(histories_to_records(pop.data));
  ASSERT_EQ(back.size(), pop.data.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].user_id, pop.data[i].user_id);
    EXPECT_EQ(back[i].devices, pop.data[i].devices);
    EXPECT_EQ(back[i].operations, pop.data[i].operations);
  }
}

}  // namespace
}  // namespace opsrec
