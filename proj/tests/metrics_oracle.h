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
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>

#include "opsrec/metrics.h"
#include "test_util.h"

namespace opsrec::testing {

// Brute-force reference metrics that read the catalog file directly.
class Oracle {
 public:
  Oracle() {
    std::ifstream in(std::string(OPSREC_DATA_DIR) + "/demo_catalog.json");
    raw_ = nlohmann::json::parse(in);
  }

  static std::string key(const Action& a) {
    return a.room + "|" + a.device + "|" + a.field + "|" + a.value.symbol();
  }

  bool numeric(const Action& a) const {
    return raw_["device_types"][a.device]["fields"][a.field].contains("numeric");
  }

  int eq_class(const Action& a) const {
    const auto& classes = raw_["equivalence_classes"];
    for (std::size_t c = 0; c < classes.size(); ++c) {
      for (const auto& m : classes[c]) {
        if (m["device"] != a.device || m["field"] != a.field) continue;
        if (m["value"] == "*" || m["value"] == a.value.symbol()) return static_cast<int>(c);
      }
    }
    return -1;
  }

  std::optional<std::string> opposite_key(const Action& a) const {
    const auto& f = raw_["device_types"][a.device]["fields"][a.field];
    if (!f.value("opposite", false)) return std::nullopt;
    const auto& v = f["values"];
    const std::string s = a.value.symbol();
    const std::string o = v[0] == s ? v[1] : v[0];
    return a.room + "|" + a.device + "|" + a.field + "|" + o;
  }

  bool loose(const Action& p, const Action& l) const {
    if (key(p) == key(l)) return true;
    if (p.room != l.room || p.device != l.device) return false;
    if (p.field == l.field) {
      if (!numeric(p) || l.value.number() == 0) return false;
      return std::abs(p.value.number() - l.value.number()) / std::abs(l.value.number()) <= 0.2;
    }
    const int c = eq_class(p);
    return c >= 0 && c == eq_class(l);
  }

  // Tries every partial injective assignment.
  std::size_t matching(const std::vector<Action>& pred, const std::vector<Action>& label) const {
    std::vector<bool> used(label.size(), false);
    std::function<std::size_t(std::size_t)> go = [&](std::size_t i) -> std::size_t {
      if (i == pred.size()) return 0;
      std::size_t best = go(i + 1);
      for (std::size_t j = 0; j < label.size(); ++j) {
        if (used[j] || !loose(pred[i], label[j])) continue;
        used[j] = true;
        best = std::max(best, 1 + go(i + 1));
        used[j] = false;
      }
      return best;
    };
    return go(0);
  }

  double rule(const std::vector<Action>& pred, const std::vector<Action>& label) const {
    std::set<std::string> y, truth;
    for (const auto& a : pred) y.insert(key(a));
    for (const auto& a : label) truth.insert(key(a));
    if (y == truth) return 1.0;
    std::set<std::string> neg;
    bool flips = true;
    for (const auto& a : label) {
      const auto o = opposite_key(a);
      if (!o) flips = false;
      else neg.insert(*o);
    }
    if (flips && neg == y) return -0.1;
    std::size_t common = 0;
    for (const auto& k : truth) common += y.count(k);
    if (common == truth.size()) return 0.9;
    return common ? 1.0 / common : 0.0;
  }

  static bool em(const std::vector<Action>& pred, const std::vector<Action>& label) {
    if (pred.size() != label.size()) return false;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (key(pred[i]) != key(label[i])) return false;
    }
    return true;
  }

 private:
  nlohmann::json raw_;
};

// Random actions concentrated on a few devices so matches are common.
class RecordGen {
 public:
  explicit RecordGen(std::uint64_t seed) : rng_(seed) {}

  Action random_action() {
    static const std::vector<std::pair<std::string, std::string>> devs = {
        {"bedroom", "AC"}, {"bedroom", "light"}, {"study", "AC"},
        {"bathroom", "warmer"}, {"bedroom", "curtain"}};
    const auto& [room, dev] = devs[rng_() % devs.size()];
    if (dev == "curtain") return act(room, dev, "switch", rng_() % 2 ? "open" : "close");
    switch (rng_() % 3) {
      case 0: return act(room, dev, "switch", rng_() % 2 ? "on" : "off");
      case 1:
        if (dev == "AC") return act(room, dev, "temperature", 16.0 + rng_() % 15);
        if (dev == "light") return act(room, dev, "brightness", 10.0 * (1 + rng_() % 10));
        return act(room, dev, "level", 1.0 + rng_() % 3);
      default:
        if (dev == "AC") {
          static const char* modes[] = {"cool", "heat", "dry", "comfort"};
          return act(room, dev, "mode", modes[rng_() % 4]);
        }
        return act(room, dev, "switch", "on");
    }
  }

  Action perturb(const Action& a, const Oracle& oracle) {
    switch (rng_() % 4) {
      case 0: return a;
      case 1: {
        auto o = opposite_action(a, demo_catalog());
        return o ? *o : a;
      }
      case 2:
        if (oracle.numeric(a)) {
          const auto& f = *demo_catalog().type(*demo_catalog().type_index(a.device)).field(a.field);
          const double step = f.domain.range->step * (1 + rng_() % 3);
          const double v = a.value.number() + (rng_() % 2 ? step : -step);
          if (f.domain.range->index_of(v)) return act(a.room, a.device, a.field, v);
        }
        return a;
      default: return random_action();
    }
  }

  EvalRecord record(const Oracle& oracle) {
    EvalRecord r;
    const std::size_t nl = 1 + rng_() % 4, np = 1 + rng_() % 4;
    for (std::size_t i = 0; i < nl; ++i) r.label.push_back(random_action());
    for (std::size_t i = 0; i < np; ++i) {
      r.predicted.push_back(i < nl && rng_() % 3 ? perturb(r.label[i], oracle) : random_action());
    }
    if (rng_() % 4 == 0) r.predicted = r.label;
    return r;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace opsrec::testing
