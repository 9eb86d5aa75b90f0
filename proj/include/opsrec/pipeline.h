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

// File-based pipeline stages. Each stage reads the artifacts of earlier
// stages from the output directory and writes its own, every artifact
// carrying the config hash and seed.

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "opsrec/catalog.h"
#include "opsrec/config.h"
#include "opsrec/decode.h"
#include "opsrec/exposure.h"
#include "opsrec/metrics.h"
#include "opsrec/model.h"
#include "opsrec/serialization.h"

namespace opsrec {

/// An upstream artifact is absent; `stage()` names the stage producing it.
class MissingArtifact : public Error {
 public:
  MissingArtifact(std::string stage, const std::filesystem::path& path);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Artifacts produced under different configurations were mixed.
class ArtifactMismatch : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct VariantReport {
  std::string variant;
  EvalReport report;
};

struct DpoSummary {
  std::size_t pairs = 0;
  std::size_t heldout_pairs = 0;
  std::vector<double> margin;  // per epoch, index 0 before training
  double heldout_accuracy_before = 0;
  double heldout_accuracy_after = 0;
};

class Pipeline {
 public:
  /// Loads the catalog; throws ConfigError when the config is invalid.
  explicit Pipeline(PipelineConfig cfg);

  const PipelineConfig& config() const { return cfg_; }
  const DeviceCatalog& catalog() const { return catalog_; }
  std::filesystem::path path(const std::string& name) const;

  void simulate();
  void build_corpus();
  void pretrain();
  void finetune();
  void mine_pairs();
  DpoSummary dpo();
  void recommend();
  void gate();
  std::vector<VariantReport> evaluate();
  std::vector<SweepRow> sweep();
  std::vector<VariantReport> ablate();
  /// Every stage in order; returns the evaluation report.
  std::vector<VariantReport> all();

  /// A model artifact such as "model_dpo.json".
  ReferenceModel load_model(const std::string& file) const;
  /// Mined pairs (training window, or held out past the split) with their
  /// prompts rebuilt from the histories.
  std::vector<PreferencePair> load_pairs(bool heldout) const;

  /// Runs a stage by its CLI name.
  void run(const std::string& stage);
  static const std::vector<std::string>& stage_names();

  /// Progress lines go here; silent by default.
  void set_log(std::function<void(const std::string&)> log) { log_ = std::move(log); }

 private:
  ArtifactHeader header(const std::string& stage) const;
  JsonlFile read_artifact(const std::string& file, const std::string& stage) const;
  nlohmann::json read_json_artifact(const std::string& file, const std::string& stage) const;
  void write_model(const std::string& file, const std::string& stage,
                   const ReferenceModel& model) const;
  ReferenceModel read_model(const std::string& file, const std::string& stage) const;
  ReferenceModel fresh_model() const;

  Dataset histories() const;
  Dataset training_histories(const Dataset& full) const;
  LabeledSplit test_split(const Dataset& full) const;
  std::vector<FinetuneInstance> finetune_instances(const Dataset& full) const;
  std::vector<std::vector<Action>> predict(const NextActionModel& model, const LabeledSplit& split,
                                           DecodeStrategy strategy) const;
  std::vector<Recommendation> read_recommendations() const;
  std::vector<bool> acceptance(const std::vector<Recommendation>& recs,
                               const LabeledSplit& split) const;
  Timestamp split_time() const;
  std::uint64_t stage_seed(const std::string& stage) const;
  void log(const std::string& msg) const;

  PipelineConfig cfg_;
  std::string hash_;
  DeviceCatalog catalog_;
  std::function<void(const std::string&)> log_;
};

std::string variant_reports_to_csv(const std::vector<VariantReport>& reports);
std::string variant_reports_to_text(const std::vector<VariantReport>& reports,
                                    const std::string& title);

}  // namespace opsrec
