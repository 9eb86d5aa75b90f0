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

#include <cmath>
#include <random>
#include <vector>

#include "opsrec/model.h"
#include "opsrec/objectives.h"
#include "test_util.h"

namespace opsrec::testing {

/// One room with four device types, each with a binary switch and a
/// four-valued mode.
inline const DeviceCatalog& toy_catalog() {
  static const DeviceCatalog catalog = [] {
    nlohmann::json type = {
        {"category", "Toy"},
        {"fields",
         {{"switch", {{"values", {"on", "off"}}, {"opposite", true}}},
          {"mode", {{"values", {"a", "b", "c", "d"}}}}}}};
    nlohmann::json j = {
        {"indicators", {{"presence", {{"values", {"occupied", "empty"}}}}}},
        {"device_types", {{"d1", type}, {"d2", type}, {"d3", type}, {"d4", type}}},
        {"rooms", {{"only", {"d1", "d2", "d3", "d4"}}}},
        {"equivalence_classes", nlohmann::json::array()}};
    return DeviceCatalog::from_json(j);
  }();
  return catalog;
}

inline void randomize(ReferenceModel& m, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  for (std::size_t k = 0; k < m.num_parameters(); ++k) m.parameter(k) = n(rng);
}

/// Head probabilities recomputed from the raw parameters.
inline Distribution oracle_distribution(const ReferenceModel& m, const PromptContext& ctx,
                                        const Query& q) {
  const FeatureSpace& space = m.space();
  const auto& head = m.head(q.slot);
  Distribution d;
  d.slot = q.slot;
  d.classes = space.support(ctx, q);
  const auto phi = space.class_features(ctx, q, d.classes);
  const auto feats = space.features(ctx, q);
  std::vector<double> z(d.classes.size());
  double zmax = -1e300;
  for (std::size_t k = 0; k < d.classes.size(); ++k) {
    const int c = d.classes[k];
    double v = head.b(c);
    for (int f : feats) v += head.W(f, c);
    for (int j = 0; j < phi.cols(); ++j) v += head.u(j) * phi(static_cast<int>(k), j);
    z[k] = v;
    zmax = std::max(zmax, v);
  }
  double sum = 0;
  for (double& v : z) sum += (v = std::exp(v - zmax));
  const double n = static_cast<double>(z.size());
  for (double v : z) d.probs.push_back((1 - n * kProbFloor) * v / sum + kProbFloor);
  return d;
}

inline double oracle_nll(const ReferenceModel& m, const PromptContext& ctx,
                         const std::vector<Term>& terms) {
  double total = 0;
  for (const auto& t : terms) total -= std::log(oracle_distribution(m, ctx, t.query).prob_of(t.target));
  return total;
}

/// Puts `p_hit[slot]` on the reference class of every query and spreads the
/// rest uniformly.
class MockModel : public NextActionModel {
 public:
  MockModel(const DeviceCatalog& cat, FeatureConfig cfg, std::vector<ActionRef> actions,
            DescCode desc)
      : space_(cat, cfg), actions_(std::move(actions)), desc_(desc) {
    hit_.fill(1.0);
  }

  void set_hit(Slot s, double p) { hit_[static_cast<int>(s)] = p; }

  const FeatureSpace& space() const override { return space_; }
  int filler_vocab() const override { return 2; }
  std::vector<double> filler_distribution(int) const override { return {0.5, 0.5}; }

  Distribution distribution(const PromptContext& ctx, const Query& q) const override {
    Distribution d;
    d.slot = q.slot;
    d.classes = space_.support(ctx, q);
    int target;
    if (is_action_slot(q.slot)) {
      const std::size_t j = q.done.size();
      target = j < actions_.size() ? space_.target_class(q, actions_[j]) : space_.stop_class();
    } else {
      target = space_.target_class(q.slot, desc_);
    }
    const double hit = d.classes.size() == 1 ? 1.0 : hit_[static_cast<int>(q.slot)];
    const double miss = d.classes.size() == 1 ? 0.0 : (1 - hit) / (d.classes.size() - 1);
    for (int c : d.classes) d.probs.push_back(c == target ? hit : miss);
    return d;
  }

 private:
  FeatureSpace space_;
  std::vector<ActionRef> actions_;
  DescCode desc_;
  std::array<double, kNumSlots> hit_;
};

/// Fine-tuning instances from a small simulated population.
inline std::vector<FinetuneInstance> sample_instances(std::uint64_t seed, std::size_t n,
                                                      int households = 4, int days = 10) {
  const auto pop = simulate(seed, households, days);
  std::mt19937_64 rng(seed);
  std::vector<FinetuneInstance> out;
  while (out.size() < n) {
    const auto& h = pop.data[rng() % pop.data.size()];
    if (h.operations.size() < 3) continue;
    const std::size_t i = 1 + rng() % (h.operations.size() - 1);
    out.push_back(build_finetune_instance_at(h, i, demo_catalog(), 20));
  }
  return out;
}

}  // namespace opsrec::testing
