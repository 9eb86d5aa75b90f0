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

#pragma once

// Pipeline configuration: JSON load, dotted-key overrides, validation.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "opsrec/corpus.h"
#include "opsrec/exposure.h"
#include "opsrec/features.h"
#include "opsrec/preference.h"
#include "opsrec/simulator.h"
#include "opsrec/train.h"

namespace opsrec {

/// Invalid or unreadable configuration; carries every problem found.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct SimulationSettings {
  int households = 50;
  int days = 35;
  double noise_rate = 0.1;
  int split_day = 28;     // test operations start this many days in
  int test_stride = 2;    // keep every n-th test operation per user
};

struct FinetuneSettings {
  int per_user = 20;            // sampled cutoffs per training history
  std::size_t min_history = 5;  // earliest cutoff index
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  std::string catalog = "data/demo_catalog.json";  // relative to the config file
  std::string out = "out";
  SimulationSettings simulation;
  CorpusConfig corpus;
  FeatureConfig features;
  FinetuneSettings finetune_data;
  TrainConfig pretrain;
  TrainConfig finetune;
  PreferenceConfig preference;
  int dpo_window_days = 14;  // pairs come from the last days before the split
  TrainConfig dpo;
  ExposureConfig exposure;
  int acceptance_conflict_minutes = 10;

  PipelineConfig();

  nlohmann::json to_json() const;
  /// Unknown keys and type mismatches raise ConfigError.
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::filesystem::path& path);

  /// Applies `key=value` overrides with dotted keys (`dpo.beta=0.2`).
  /// Values parse as JSON when possible and as strings otherwise.
  void apply_overrides(const std::vector<std::string>& overrides);

  /// Throws ConfigError listing every violated constraint at once.
  void validate() const;

  /// Hash of every setting except the output directory and catalog path.
  std::string hash() const;
};

}  // namespace opsrec
