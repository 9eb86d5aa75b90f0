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

#include "opsrec/preference.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "opsrec/hash.h"
#include "opsrec/serialization.h"
#include "opsrec/timeutil.h"

namespace opsrec {

using nlohmann::json;

std::string to_string(RuleTag t) {
  return t == RuleTag::kConflicting ? "conflicting" : "time_sensitive";
}

RuleTag parse_rule_tag(const std::string& s) {
  if (s == "conflicting") return RuleTag::kConflicting;
  if (s == "time_sensitive") return RuleTag::kTimeSensitive;
  throw InvalidArgument("unknown rule tag '" + s + "'");
}

json PreferencePair::to_json() const {
  json pos = json::array();
  for (const auto& a : positive) pos.push_back(opsrec::to_json(a));
  json neg = json::array();
  for (const auto& a : negative) neg.push_back(opsrec::to_json(a));
  return {{"user_id", user_id},
          {"op_index", op_index},
          {"time", prompt.time},
          {"prompt_hash", hex64(prompt_hash)},
          {"tag", to_string(tag)},
          {"positive", pos},
          {"negative", neg}};
}

PreferencePair PreferencePair::from_json(const json& j) {
  PreferencePair p;
  p.user_id = j.at("user_id").get<std::string>();
  p.op_index = j.at("op_index").get<std::size_t>();
  p.prompt.time = j.value("time", Timestamp{0});
  p.prompt_hash = std::stoull(j.value("prompt_hash", std::string("0")), nullptr, 16);
  p.tag = parse_rule_tag(j.at("tag").get<std::string>());
  for (const auto& a : j.at("positive")) p.positive.push_back(action_from_json(a));
  for (const auto& a : j.at("negative")) p.negative.push_back(action_from_json(a));
  return p;
}

void PreferenceConfig::validate() const {
  std::vector<std::string> errors;
  if (window_minutes < 0 || window_minutes > 720) errors.push_back("window_minutes in [0, 720]");
  if (lookback_days < 1) errors.push_back("lookback_days >= 1");
  if (conflict_minutes < 0 || hf_conflict_minutes < 0) errors.push_back("conflict windows >= 0");
  if (!(hf_actions_per_day > 0)) errors.push_back("hf_actions_per_day > 0");
  if (history_limit < 1) errors.push_back("history_limit >= 1");
  if (max_pairs_per_cutoff < 0) errors.push_back("max_pairs_per_cutoff >= 0");
  if (!errors.empty()) {
    std::string msg = "invalid preference config:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw InvalidArgument(msg);
  }
}

namespace {

void check_index(const History& h, std::size_t at) {
  if (at >= h.operations.size()) throw InvalidArgument("cutoff index out of range");
}

// First operation index inside the lookback of `at`.
std::size_t lookback_begin(const History& h, std::size_t at, const PreferenceConfig& cfg) {
  const Timestamp lo = h.operations[at].timestamp -
                       static_cast<Timestamp>(cfg.lookback_days) * kMinutesPerDay;
  std::size_t j = at;
  while (j > 0 && h.operations[j - 1].timestamp >= lo) --j;
  return j;
}

bool owns(const History& h, const Action& a) {
  if (h.devices.empty()) return true;
  return std::find(h.devices.begin(), h.devices.end(), DeviceRef{a.room, a.device}) !=
         h.devices.end();
}

bool same_target(const Action& a, const Action& b) {
  return a.room == b.room && a.device == b.device && a.field == b.field;
}

}  // namespace

bool is_high_frequency(const History& history, std::size_t at_index, const Action& a,
                       const DeviceCatalog& catalog, const PreferenceConfig& cfg) {
  check_index(history, at_index);
  auto type = catalog.type_index(a.device);
  if (!type) throw InvalidArgument("unknown device " + a.device);
  const FieldSpec* f = catalog.type(*type).field(a.field);
  if (!f) throw InvalidArgument("unknown field " + a.field);
  if (f->high_frequency) return true;
  const std::size_t lo = lookback_begin(history, at_index, cfg);
  if (lo == at_index) return false;
  double count = 0;
  for (std::size_t j = lo; j < at_index; ++j) {
    for (const auto& b : history.operations[j].actions) {
      if (same_target(a, b)) count += 1;
    }
  }
  const Timestamp t = history.operations[at_index].timestamp;
  const double span_days =
      static_cast<double>(t - history.operations[lo].timestamp) / kMinutesPerDay;
  const double days = std::clamp(std::ceil(span_days), 1.0,
                                 static_cast<double>(cfg.lookback_days));
  return count / days >= cfg.hf_actions_per_day;
}

std::vector<Action> mine_time_sensitive_negatives(const History& history,
                                                  std::size_t at_index,
                                                  const DeviceCatalog& catalog,
                                                  const PreferenceConfig& cfg) {
  check_index(history, at_index);
  const Timestamp t = history.operations[at_index].timestamp;
  const int minute = minute_of_day(t);
  std::map<Action, bool> repertoire;  // action -> performed near this time
  for (std::size_t j = lookback_begin(history, at_index, cfg); j < at_index; ++j) {
    const auto& op = history.operations[j];
    const bool near =
        circular_minute_distance(minute_of_day(op.timestamp), minute) <= cfg.window_minutes;
    for (const auto& a : op.actions) {
      if (!owns(history, a)) continue;
      repertoire[a] = repertoire[a] || near;
    }
  }
  std::vector<Action> out;
  for (const auto& [a, near] : repertoire) {
    if (!near) out.push_back(a);
  }
  if (cfg.include_new_devices) {
    std::set<DeviceRef> seen;
    for (std::size_t j = 0; j < at_index; ++j) {
      for (const auto& a : history.operations[j].actions) seen.insert({a.room, a.device});
    }
    for (const auto& d : history.devices) {
      if (seen.count(d)) continue;
      auto type = catalog.type_index(d.device);
      if (!type) continue;
      for (const auto& f : catalog.type(*type).fields) {
        for (std::size_t v = 0; v < f.domain.size(); ++v) {
          out.push_back({d.room, d.device, f.name, f.domain.at(v)});
        }
      }
    }
  }
  return out;
}

std::vector<Action> mine_conflicting_negatives(const History& history,
                                               std::size_t at_index,
                                               const DeviceCatalog& catalog,
                                               const PreferenceConfig& cfg) {
  check_index(history, at_index);
  const Timestamp t = history.operations[at_index].timestamp;
  const int widest = std::max(cfg.conflict_minutes, cfg.hf_conflict_minutes);
  std::vector<Action> out;
  for (std::size_t j = at_index; j-- > 0;) {
    const auto& op = history.operations[j];
    const Timestamp age = t - op.timestamp;
    if (age > widest) break;
    for (const auto& a : op.actions) {
      const int window = is_high_frequency(history, at_index, a, catalog, cfg)
                             ? cfg.hf_conflict_minutes
                             : cfg.conflict_minutes;
      if (age > window) continue;
      auto opp = opposite_action(a, catalog);
      if (opp && std::find(out.begin(), out.end(), *opp) == out.end()) out.push_back(*opp);
    }
  }
  return out;
}

std::uint64_t prompt_hash(const Prompt& p) {
  std::uint64_t h = fnv1a64(std::to_string(p.time));
  for (const auto& op : p.history) {
    h = fnv1a64(std::to_string(op.timestamp), h);
    for (const auto& a : op.actions) h = fnv1a64(to_string(a), h);
  }
  for (const auto& e : p.env) h = fnv1a64(e.room + e.indicator + e.value.symbol(), h);
  for (const auto& c : p.candidates) h = fnv1a64(c.room + "/" + c.device, h);
  return h;
}

std::vector<PreferencePair> build_dpo_dataset(const Dataset& data,
                                              const DeviceCatalog& catalog,
                                              const PreferenceConfig& cfg, Timestamp from,
                                              Timestamp to) {
  cfg.validate();
  std::vector<PreferencePair> out;
  std::set<std::pair<std::uint64_t, std::string>> seen;
  for (const auto& h : data) {
    const std::size_t first = std::max<std::size_t>(cfg.min_history, 1);
    for (std::size_t i = first; i < h.operations.size(); ++i) {
      const Timestamp t = h.operations[i].timestamp;
      if (t < from || t >= to) continue;
      const auto& positive = h.operations[i].actions;

      std::vector<std::pair<Action, RuleTag>> mined;
      for (auto& a : mine_conflicting_negatives(h, i, catalog, cfg)) {
        mined.emplace_back(std::move(a), RuleTag::kConflicting);
      }
      std::vector<std::pair<Action, RuleTag>> timed;
      for (auto& a : mine_time_sensitive_negatives(h, i, catalog, cfg)) {
        const bool dup = std::any_of(mined.begin(), mined.end(),
                                     [&](const auto& m) { return m.first == a; });
        if (!dup) timed.emplace_back(std::move(a), RuleTag::kTimeSensitive);
      }
      if (cfg.max_pairs_per_cutoff > 0) {
        std::mt19937_64 rng(mix_seed(cfg.seed, fnv1a64(h.user_id) + i));
        std::shuffle(timed.begin(), timed.end(), rng);
      }
      mined.insert(mined.end(), timed.begin(), timed.end());
      if (mined.empty()) continue;

      Prompt prompt = build_prompt(h, i, catalog, cfg.history_limit);
      const std::uint64_t ph = prompt_hash(prompt);
      int kept = 0;
      for (const auto& [neg, tag] : mined) {
        if (cfg.max_pairs_per_cutoff > 0 && kept >= cfg.max_pairs_per_cutoff) break;
        if (std::find(positive.begin(), positive.end(), neg) != positive.end()) continue;
        if (std::find(prompt.candidates.begin(), prompt.candidates.end(),
                      DeviceRef{neg.room, neg.device}) == prompt.candidates.end()) {
          continue;
        }
        if (!validate_action(neg, catalog)) continue;
        if (!seen.insert({ph, to_string(neg)}).second) continue;
        PreferencePair p;
        p.user_id = h.user_id;
        p.op_index = i;
        p.prompt = prompt;
        p.positive = positive;
        p.negative = {neg};
        p.tag = tag;
        p.prompt_hash = ph;
        out.push_back(std::move(p));
        ++kept;
      }
    }
  }
  return out;
}

EncodedPair encode_pair(const FeatureSpace& space, const PreferencePair& p) {
  EncodedPair e;
  e.ctx = space.context(p.prompt, /*restrict_candidates=*/true);
  e.positive = encode_actions(p.positive, space.catalog());
  e.negative = encode_actions(p.negative, space.catalog());
  return e;
}

}  // namespace opsrec
