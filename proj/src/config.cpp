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

#include "opsrec/config.h"

#include <fstream>

#include "opsrec/hash.h"

namespace opsrec {

using nlohmann::json;

PipelineConfig::PipelineConfig() {
#ifdef OPSREC_DATA_DIR
  catalog = std::string(OPSREC_DATA_DIR) + "/demo_catalog.json";
#endif
  corpus.history_limit = 40;
  pretrain.objective = Objective::kPretrain;
  pretrain.learning_rate = 0.02;
  pretrain.epochs = 1;
  finetune.objective = Objective::kFactorized;
  finetune.learning_rate = 0.05;
  finetune.epochs = 3;
  dpo.objective = Objective::kDpo;
  dpo.learning_rate = 0.003;
  dpo.epochs = 1;
  dpo.beta = 0.1;
  preference.history_limit = corpus.history_limit;
}

namespace {

json train_to_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"epochs", t.epochs},
          {"beta", t.beta},                   {"objective", to_string(t.objective)},
          {"decode", to_string(t.decode)},    {"batch_size", t.batch_size}};
}

// Reads `j[key]` into `out` when present; records type errors.
template <typename T>
void read(const json& j, const std::string& path, const char* key, T& out,
          std::vector<std::string>& errors) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    errors.push_back(path + key + ": wrong type");
  }
}

void check_keys(const json& j, const std::string& path, const json& reference,
                std::vector<std::string>& errors) {
  if (!j.is_object()) {
    errors.push_back((path.empty() ? "config" : path) + ": expected an object");
    return;
  }
  for (const auto& [k, v] : j.items()) {
    if (!reference.contains(k)) {
      errors.push_back("unknown key " + path + k);
    } else if (reference.at(k).is_object()) {
      check_keys(v, path + k + ".", reference.at(k), errors);
    }
  }
}

void train_from_json(const json& j, const std::string& path, TrainConfig& t,
                     std::vector<std::string>& errors) {
  read(j, path, "learning_rate", t.learning_rate, errors);
  read(j, path, "epochs", t.epochs, errors);
  read(j, path, "beta", t.beta, errors);
  read(j, path, "batch_size", t.batch_size, errors);
  std::string s;
  if (j.contains("objective")) {
    read(j, path, "objective", s, errors);
    try {
      t.objective = parse_objective(s);
    } catch (const Error& e) {
      errors.push_back(path + "objective: " + e.what());
    }
  }
  if (j.contains("decode")) {
    read(j, path, "decode", s, errors);
    try {
      t.decode = parse_decode_strategy(s);
    } catch (const Error& e) {
      errors.push_back(path + "decode: " + e.what());
    }
  }
}

}  // namespace

json PipelineConfig::to_json() const {
  return {
      {"seed", seed},
      {"catalog", catalog},
      {"out", out},
      {"simulation",
       {{"households", simulation.households},
        {"days", simulation.days},
        {"noise_rate", simulation.noise_rate},
        {"split_day", simulation.split_day},
        {"test_stride", simulation.test_stride}}},
      {"corpus",
       {{"history_limit", corpus.history_limit},
        {"max_len", corpus.max_len},
        {"mix_operations", corpus.mix_operations},
        {"mix_filler", corpus.mix_filler},
        {"filler_vocab", corpus.filler_vocab}}},
      {"features",
       {{"last_k", features.last_k},
        {"max_actions", features.max_actions},
        {"near_minutes", features.near_minutes},
        {"recent_minutes", features.recent_minutes},
        {"lately_minutes", features.lately_minutes}}},
      {"finetune_data",
       {{"per_user", finetune_data.per_user}, {"min_history", finetune_data.min_history}}},
      {"pretrain", train_to_json(pretrain)},
      {"finetune", train_to_json(finetune)},
      {"preference",
       {{"window_minutes", preference.window_minutes},
        {"lookback_days", preference.lookback_days},
        {"conflict_minutes", preference.conflict_minutes},
        {"hf_conflict_minutes", preference.hf_conflict_minutes},
        {"hf_actions_per_day", preference.hf_actions_per_day},
        {"include_new_devices", preference.include_new_devices},
        {"min_history", preference.min_history},
        {"max_pairs_per_cutoff", preference.max_pairs_per_cutoff},
        {"window_days", dpo_window_days}}},
      {"dpo", train_to_json(dpo)},
      {"exposure",
       {{"alpha_device", exposure.alpha_device},
        {"alpha_field", exposure.alpha_field},
        {"alpha_value", exposure.alpha_value},
        {"tau", exposure.tau},
        {"discount", exposure.discount},
        {"pool_cutoff", exposure.pool_cutoff},
        {"lambda", exposure.lambda}}},
      {"acceptance", {{"conflict_minutes", acceptance_conflict_minutes}}},
  };
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  std::vector<std::string> errors;
  check_keys(j, "", c.to_json(), errors);
  if (!j.is_object()) throw ConfigError("invalid configuration: expected an object");
  read(j, "", "seed", c.seed, errors);
  read(j, "", "catalog", c.catalog, errors);
  read(j, "", "out", c.out, errors);
  const json empty = json::object();
  auto section = [&](const char* k) -> const json& {
    return j.contains(k) && j.at(k).is_object() ? j.at(k) : empty;
  };

  const json& sim = section("simulation");
  read(sim, "simulation.", "households", c.simulation.households, errors);
  read(sim, "simulation.", "days", c.simulation.days, errors);
  read(sim, "simulation.", "noise_rate", c.simulation.noise_rate, errors);
  read(sim, "simulation.", "split_day", c.simulation.split_day, errors);
  read(sim, "simulation.", "test_stride", c.simulation.test_stride, errors);

  const json& cor = section("corpus");
  read(cor, "corpus.", "history_limit", c.corpus.history_limit, errors);
  read(cor, "corpus.", "max_len", c.corpus.max_len, errors);
  read(cor, "corpus.", "mix_operations", c.corpus.mix_operations, errors);
  read(cor, "corpus.", "mix_filler", c.corpus.mix_filler, errors);
  read(cor, "corpus.", "filler_vocab", c.corpus.filler_vocab, errors);

  const json& fea = section("features");
  read(fea, "features.", "last_k", c.features.last_k, errors);
  read(fea, "features.", "max_actions", c.features.max_actions, errors);
  read(fea, "features.", "near_minutes", c.features.near_minutes, errors);
  read(fea, "features.", "recent_minutes", c.features.recent_minutes, errors);
  read(fea, "features.", "lately_minutes", c.features.lately_minutes, errors);

  const json& fd = section("finetune_data");
  read(fd, "finetune_data.", "per_user", c.finetune_data.per_user, errors);
  read(fd, "finetune_data.", "min_history", c.finetune_data.min_history, errors);

  train_from_json(section("pretrain"), "pretrain.", c.pretrain, errors);
  train_from_json(section("finetune"), "finetune.", c.finetune, errors);
  train_from_json(section("dpo"), "dpo.", c.dpo, errors);

  const json& pr = section("preference");
  read(pr, "preference.", "window_minutes", c.preference.window_minutes, errors);
  read(pr, "preference.", "lookback_days", c.preference.lookback_days, errors);
  read(pr, "preference.", "conflict_minutes", c.preference.conflict_minutes, errors);
  read(pr, "preference.", "hf_conflict_minutes", c.preference.hf_conflict_minutes, errors);
  read(pr, "preference.", "hf_actions_per_day", c.preference.hf_actions_per_day, errors);
  read(pr, "preference.", "include_new_devices", c.preference.include_new_devices, errors);
  read(pr, "preference.", "min_history", c.preference.min_history, errors);
  read(pr, "preference.", "max_pairs_per_cutoff", c.preference.max_pairs_per_cutoff, errors);
  read(pr, "preference.", "window_days", c.dpo_window_days, errors);

  const json& ex = section("exposure");
  read(ex, "exposure.", "alpha_device", c.exposure.alpha_device, errors);
  read(ex, "exposure.", "alpha_field", c.exposure.alpha_field, errors);
  read(ex, "exposure.", "alpha_value", c.exposure.alpha_value, errors);
  read(ex, "exposure.", "tau", c.exposure.tau, errors);
  read(ex, "exposure.", "discount", c.exposure.discount, errors);
  read(ex, "exposure.", "pool_cutoff", c.exposure.pool_cutoff, errors);
  read(ex, "exposure.", "lambda", c.exposure.lambda, errors);

  read(section("acceptance"), "acceptance.", "conflict_minutes",
       c.acceptance_conflict_minutes, errors);

  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  c.preference.history_limit = c.corpus.history_limit;
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  PipelineConfig c = from_json(j);
  if (j.contains("catalog") && std::filesystem::path(c.catalog).is_relative()) {
    c.catalog = (path.parent_path() / c.catalog).lexically_normal().string();
  }
  return c;
}

void PipelineConfig::apply_overrides(const std::vector<std::string>& overrides) {
  json j = to_json();
  std::vector<std::string> errors;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      errors.push_back("override '" + o + "' is not key=value");
      continue;
    }
    const std::string key = o.substr(0, eq);
    const std::string raw = o.substr(eq + 1);
    json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) value = raw;
    json* node = &j;
    std::size_t start = 0;
    bool ok = true;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot - start);
      if (!node->is_object() || !node->contains(part)) {
        errors.push_back("unknown key " + key);
        ok = false;
        break;
      }
      node = &(*node)[part];
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    if (ok) *node = value;
  }
  if (!errors.empty()) {
    std::string msg = "invalid overrides:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  *this = from_json(j);
}

void PipelineConfig::validate() const {
  std::vector<std::string> errors;
  auto collect = [&](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      errors.push_back(std::string(section) + ": " + e.what());
    }
  };
  if (catalog.empty()) errors.push_back("catalog path is empty");
  if (out.empty()) errors.push_back("out directory is empty");
  if (simulation.households < 1) errors.push_back("simulation.households must be >= 1");
  if (simulation.days < 2) errors.push_back("simulation.days must be >= 2");
  if (!(simulation.noise_rate >= 0 && simulation.noise_rate <= 1)) {
    errors.push_back("simulation.noise_rate must lie in [0, 1]");
  }
  if (simulation.split_day < 1 || simulation.split_day >= simulation.days) {
    errors.push_back("simulation.split_day must lie in [1, days)");
  }
  if (simulation.test_stride < 1) errors.push_back("simulation.test_stride must be >= 1");
  if (corpus.history_limit < 1) errors.push_back("corpus.history_limit must be >= 1");
  if (corpus.max_len < 64) errors.push_back("corpus.max_len must be >= 64");
  if (corpus.mix_operations < 1 || corpus.mix_filler < 0) {
    errors.push_back("corpus mixing ratio must be operations >= 1, filler >= 0");
  }
  if (corpus.filler_vocab < 2) errors.push_back("corpus.filler_vocab must be >= 2");
  if (features.max_actions < 1) errors.push_back("features.max_actions must be >= 1");
  if (features.last_k < 0) errors.push_back("features.last_k must be >= 0");
  if (finetune_data.per_user < 1) errors.push_back("finetune_data.per_user must be >= 1");
  if (finetune_data.min_history < 1) errors.push_back("finetune_data.min_history must be >= 1");
  collect("pretrain", [&] { pretrain.validate(); });
  collect("finetune", [&] { finetune.validate(); });
  collect("dpo", [&] { dpo.validate(); });
  if (pretrain.objective != Objective::kPretrain) {
    errors.push_back("pretrain.objective must be pretrain");
  }
  if (finetune.objective == Objective::kPretrain || finetune.objective == Objective::kDpo) {
    errors.push_back("finetune.objective must be joint, factorized or text_first");
  }
  if (dpo.objective != Objective::kDpo) errors.push_back("dpo.objective must be dpo");
  collect("preference", [&] { preference.validate(); });
  if (dpo_window_days < 1) errors.push_back("preference.window_days must be >= 1");
  collect("exposure", [&] { exposure.validate(); });
  if (acceptance_conflict_minutes < 0) {
    errors.push_back("acceptance.conflict_minutes must be >= 0");
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
}

std::string PipelineConfig::hash() const {
  json j = to_json();
  j.erase("out");
  j.erase("catalog");
  return hex64(fnv1a64(j.dump()));
}

}  // namespace opsrec
