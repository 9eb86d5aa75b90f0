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
#include <fstream>

#include "opsrec/config.h"

namespace opsrec {
namespace {

namespace fs = std::filesystem;

const fs::path kDemo = fs::path(OPSREC_CONFIG_DIR) / "demo.json";

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ConfigTest, LoadsDemoConfig) {
  const auto c = PipelineConfig::load(kDemo);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(c.simulation.households, 50);
  EXPECT_EQ(c.corpus.history_limit, 40);
  EXPECT_EQ(c.finetune.objective, Objective::kFactorized);
  EXPECT_DOUBLE_EQ(c.dpo.beta, 0.1);
  EXPECT_DOUBLE_EQ(c.exposure.tau, 0.7);
  EXPECT_TRUE(fs::exists(c.catalog)) << c.catalog;
  EXPECT_NO_THROW(c.validate());
}

TEST(ConfigTest, JsonRoundTrip) {
  const auto c = PipelineConfig::load(kDemo);
  const auto back = PipelineConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
}

TEST(ConfigTest, DottedOverrides) {
  auto c = PipelineConfig::load(kDemo);
  c.apply_overrides({"dpo.beta=0.25", "finetune.objective=joint", "simulation.households=3",
                     "seed=7", "out=/tmp/x"});
  EXPECT_DOUBLE_EQ(c.dpo.beta, 0.25);
  EXPECT_EQ(c.finetune.objective, Objective::kJoint);
  EXPECT_EQ(c.simulation.households, 3);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.out, "/tmp/x");
}

TEST(ConfigTest, BadOverridesAreConfigErrors) {
  auto c = PipelineConfig::load(kDemo);
  EXPECT_THROW(c.apply_overrides({"dpo.gamma=1"}), ConfigError);
  EXPECT_THROW(c.apply_overrides({"nonsense"}), ConfigError);
  EXPECT_THROW(c.apply_overrides({"simulation.households=many"}), ConfigError);
}

TEST(ConfigTest, UnknownKeysAndTypesAreAllReported) {
  auto j = PipelineConfig{}.to_json();
  j["extra"] = 1;
  j["dpo"]["betta"] = 0.1;
  j["exposure"]["tau"] = "high";
  const std::string msg = error_of([&] { PipelineConfig::from_json(j); });
  EXPECT_NE(msg.find("extra"), std::string::npos) << msg;
  EXPECT_NE(msg.find("betta"), std::string::npos) << msg;
  EXPECT_NE(msg.find("tau"), std::string::npos) << msg;
}

TEST(ConfigTest, ValidateListsEveryProblem) {
  PipelineConfig c;
  c.simulation.households = 0;
  c.exposure.tau = 2;
  c.dpo.beta = -1;
  const std::string msg = error_of([&] { c.validate(); });
  EXPECT_NE(msg.find("households"), std::string::npos) << msg;
  EXPECT_NE(msg.find("tau"), std::string::npos) << msg;
  EXPECT_NE(msg.find("beta"), std::string::npos) << msg;
}

TEST(ConfigTest, SplitMustLeaveBothSides) {
  PipelineConfig c;
  c.simulation.split_day = c.simulation.days;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ConfigTest, MissingOrMalformedFile) {
  EXPECT_THROW(PipelineConfig::load("/nonexistent/config.json"), ConfigError);
  const fs::path bad = fs::temp_directory_path() / "opsrec_bad_config.json";
  std::ofstream(bad) << "{ not json";
  EXPECT_THROW(PipelineConfig::load(bad), ConfigError);
  fs::remove(bad);
}

TEST(ConfigTest, HashIgnoresOutputLocation) {
  PipelineConfig a, b;
  b.out = "elsewhere";
  b.catalog = "/other/catalog.json";
  EXPECT_EQ(a.hash(), b.hash());
  b.seed = 2;
  EXPECT_NE(a.hash(), b.hash());
  PipelineConfig d;
  d.dpo.beta = 0.2;
  EXPECT_NE(a.hash(), d.hash());
  EXPECT_EQ(a.hash(), PipelineConfig{}.hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

}  // namespace
}  // namespace opsrec
