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

// Command-line entry point: one subcommand per pipeline stage.

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "opsrec/config.h"
#include "opsrec/pipeline.h"
#include "opsrec/train.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissingArtifact = 3;
constexpr int kExitDivergence = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"opsrec: next-operation recommendation pipeline for smart-home devices"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
  bool quiet = false;
  app.add_option("--config", config_path, "pipeline config JSON");
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--out", out, "output directory (overrides the config)");
  app.add_option("--set", overrides, "override a config key, e.g. --set dpo.beta=0.2")
      ->take_all();
  app.add_flag("-q,--quiet", quiet, "suppress progress output");
  app.fallthrough();

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"simulate", "simulate households and write histories"},
      {"build-corpus", "write the test split, fine-tuning sample and pre-training windows"},
      {"pretrain", "train on the mixed pre-training stream"},
      {"finetune", "fine-tune with the configured objective"},
      {"mine-pairs", "mine preference pairs"},
      {"dpo", "preference-optimize the fine-tuned model"},
      {"recommend", "decode recommendations for the test split"},
      {"gate", "apply exposure control to the recommendations"},
      {"evaluate", "write the evaluation report"},
      {"sweep", "sweep the confidence threshold"},
      {"ablate", "compare action-first and text-first generation"},
      {"all", "run every stage"},
  };
  for (const auto& [name, help] : stages) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string stage = app.get_subcommands().front()->get_name();

  try {
    opsrec::PipelineConfig cfg =
        config_path.empty() ? opsrec::PipelineConfig() : opsrec::PipelineConfig::load(config_path);
    cfg.apply_overrides(overrides);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.out = out;
    opsrec::Pipeline pipeline(cfg);
    if (!quiet) {
      pipeline.set_log([](const std::string& msg) { fmt::print(stderr, "{}\n", msg); });
    }
    const auto t0 = std::chrono::steady_clock::now();
    pipeline.run(stage);
    if (!quiet) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      fmt::print(stderr, "{} finished in {:.1f} s\n", stage, secs);
    }
  } catch (const opsrec::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const opsrec::MissingArtifact& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitMissingArtifact;
  } catch (const opsrec::DivergenceError& e) {
    fmt::print(stderr, "numeric divergence: {}\n", e.what());
    return kExitDivergence;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFailure;
  }
  return kExitOk;
}
