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

// Confidence scoring and expose/suppress gating of recommendations.

#include <cstddef>
#include <string>
#include <vector>

#include "opsrec/recommendation.h"

namespace opsrec {

struct ExposureConfig {
  double alpha_device = 0.5;
  double alpha_field = 0.3;
  double alpha_value = 0.2;
  double tau = 0.7;
  double discount = 0.9;
  int pool_cutoff = 10;  // support sizes above this count as large pools
  double lambda = 0.5;   // weight of the average confidence in the fusion

  /// Throws InvalidArgument listing every violated constraint.
  void validate() const;
};

enum class Attribute { kDevice, kField, kValue };
std::string to_string(Attribute a);

/// Weighted device/field/value probability averaged over the actions.
double confidence_score(const Recommendation& rec, const ExposureConfig& cfg);

/// `tau`, discounted once when the attribute is numeric or its support
/// exceeds the pool cutoff.
double adaptive_threshold(double tau, const AttributeScore& score, const ExposureConfig& cfg);

double fused_confidence(double avg, double first_token, double lambda);

enum class GateReason { kNone, kDevice, kField, kValue, kFused };
std::string to_string(GateReason r);

struct GateDecision {
  bool exposed = false;
  GateReason reason = GateReason::kNone;
  int action_index = -1;  // failing action for attribute suppressions
  double confidence = 0;  // filled only when every attribute passed
  double fused = 0;
  /// Every attribute read, in order, as (action index, attribute).
  std::vector<std::pair<int, Attribute>> inspected;
};

/// Checks device, field, value of each action against adaptive thresholds
/// derived from `tau`, stopping at the first failure; then exposes iff the
/// fused confidence reaches `tau`.
GateDecision cascade_gate(const Recommendation& rec, const ExposureConfig& cfg, double tau);
inline GateDecision cascade_gate(const Recommendation& rec, const ExposureConfig& cfg) {
  return cascade_gate(rec, cfg, cfg.tau);
}

struct SweepRow {
  double tau = 0;
  std::size_t total = 0;
  std::size_t exposed = 0;
  std::size_t accepted = 0;
  double exposure_rate = 0;
  /// accepted / exposed; NaN when nothing is exposed.
  double acceptance_rate = 0;
};

/// 0, 0.05, ..., 1.0.
std::vector<double> default_tau_grid();

/// One row per threshold. `accepted[i]` is the simulated verdict on recs[i].
std::vector<SweepRow> threshold_sweep(const std::vector<Recommendation>& recs,
                                      const std::vector<bool>& accepted,
                                      const ExposureConfig& cfg,
                                      const std::vector<double>& grid = default_tau_grid());

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace opsrec
