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

#include "opsrec/exposure.h"

#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace opsrec {

void ExposureConfig::validate() const {
  std::vector<std::string> errors;
  if (!(alpha_device > 0 && alpha_field > 0 && alpha_value > 0)) {
    errors.push_back("exposure weights must be positive");
  }
  if (std::abs(alpha_device + alpha_field + alpha_value - 1.0) > 1e-9) {
    errors.push_back("exposure weights must sum to 1");
  }
  if (!(tau >= 0 && tau <= 1)) errors.push_back("tau must lie in [0, 1]");
  if (!(discount > 0 && discount <= 1)) errors.push_back("discount must lie in (0, 1]");
  if (pool_cutoff < 0) errors.push_back("pool_cutoff must be >= 0");
  if (!(lambda >= 0 && lambda <= 1)) errors.push_back("lambda must lie in [0, 1]");
  if (!errors.empty()) {
    std::string msg = "invalid exposure config:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw InvalidArgument(msg);
  }
}

std::string to_string(Attribute a) {
  switch (a) {
    case Attribute::kDevice: return "device";
    case Attribute::kField: return "field";
    case Attribute::kValue: return "value";
  }
  return "?";
}

std::string to_string(GateReason r) {
  switch (r) {
    case GateReason::kNone: return "none";
    case GateReason::kDevice: return "device";
    case GateReason::kField: return "field";
    case GateReason::kValue: return "value";
    case GateReason::kFused: return "fused";
  }
  return "?";
}

namespace {

void check(const Recommendation& rec) {
  if (rec.actions.empty()) throw InvalidArgument("recommendation without actions");
  for (const auto& a : rec.actions) {
    for (double p : {a.device.prob, a.field.prob, a.value.prob}) {
      if (!(p > 0 && p <= 1)) throw InvalidArgument("attribute probability outside (0, 1]");
    }
  }
}

}  // namespace

double confidence_score(const Recommendation& rec, const ExposureConfig& cfg) {
  check(rec);
  double sum = 0;
  for (const auto& a : rec.actions) {
    sum += cfg.alpha_device * a.device.prob + cfg.alpha_field * a.field.prob +
           cfg.alpha_value * a.value.prob;
  }
  return sum / static_cast<double>(rec.actions.size());
}

double adaptive_threshold(double tau, const AttributeScore& score, const ExposureConfig& cfg) {
  const bool large_pool = score.support > cfg.pool_cutoff;
  return (large_pool || score.numeric) ? tau * cfg.discount : tau;
}

double fused_confidence(double avg, double first_token, double lambda) {
  return lambda * avg + (1 - lambda) * first_token;
}

GateDecision cascade_gate(const Recommendation& rec, const ExposureConfig& cfg, double tau) {
  check(rec);
  GateDecision d;
  for (std::size_t j = 0; j < rec.actions.size(); ++j) {
    const ScoredAction& a = rec.actions[j];
    const std::pair<Attribute, const AttributeScore*> order[] = {
        {Attribute::kDevice, &a.device}, {Attribute::kField, &a.field},
        {Attribute::kValue, &a.value}};
    for (const auto& [attr, score] : order) {
      d.inspected.emplace_back(static_cast<int>(j), attr);
      if (score->prob < adaptive_threshold(tau, *score, cfg)) {
        d.reason = attr == Attribute::kDevice  ? GateReason::kDevice
                   : attr == Attribute::kField ? GateReason::kField
                                               : GateReason::kValue;
        d.action_index = static_cast<int>(j);
        return d;
      }
    }
  }
  d.confidence = confidence_score(rec, cfg);
  d.fused = fused_confidence(d.confidence, rec.first_token(), cfg.lambda);
  d.exposed = d.fused >= tau;
  if (!d.exposed) d.reason = GateReason::kFused;
  return d;
}

std::vector<double> default_tau_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

std::vector<SweepRow> threshold_sweep(const std::vector<Recommendation>& recs,
                                      const std::vector<bool>& accepted,
                                      const ExposureConfig& cfg,
                                      const std::vector<double>& grid) {
  if (recs.empty()) throw InvalidArgument("threshold sweep over no recommendations");
  if (recs.size() != accepted.size()) {
    throw InvalidArgument("acceptance labels do not align with recommendations");
  }
  std::vector<SweepRow> rows;
  for (double tau : grid) {
    SweepRow row;
    row.tau = tau;
    row.total = recs.size();
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (!cascade_gate(recs[i], cfg, tau).exposed) continue;
      ++row.exposed;
      if (accepted[i]) ++row.accepted;
    }
    row.exposure_rate = static_cast<double>(row.exposed) / static_cast<double>(row.total);
    row.acceptance_rate = row.exposed == 0
                              ? std::numeric_limits<double>::quiet_NaN()
                              : static_cast<double>(row.accepted) /
                                    static_cast<double>(row.exposed);
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "tau,total,exposed,accepted,exposure_rate,acceptance_rate\n";
  for (const auto& r : rows) {
    out += fmt::format("{:.2f},{},{},{},{:.6f},{}\n", r.tau, r.total, r.exposed, r.accepted,
                       r.exposure_rate,
                       std::isnan(r.acceptance_rate) ? std::string("")
                                                     : fmt::format("{:.6f}", r.acceptance_rate));
  }
  return out;
}

}  // namespace opsrec
