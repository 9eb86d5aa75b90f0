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

// Preference-pair mining for DPO: the executed operation is preferred over
// actions the user would reject at that moment.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "opsrec/catalog.h"
#include "opsrec/corpus.h"
#include "opsrec/objectives.h"

namespace opsrec {

enum class RuleTag { kTimeSensitive, kConflicting };

std::string to_string(RuleTag t);
RuleTag parse_rule_tag(const std::string& s);

struct PreferencePair {
  std::string user_id;
  std::size_t op_index = 0;  // the prompt is build_prompt(history, op_index)
  Prompt prompt;
  std::vector<Action> positive;
  std::vector<Action> negative;
  RuleTag tag = RuleTag::kTimeSensitive;
  std::uint64_t prompt_hash = 0;

  /// The prompt itself is not stored; it is rebuilt from the histories.
  nlohmann::json to_json() const;
  static PreferencePair from_json(const nlohmann::json& j);
};

struct PreferenceConfig {
  int window_minutes = 60;          // time-sensitive +- window
  int lookback_days = 14;
  int conflict_minutes = 10;
  int hf_conflict_minutes = 2;
  double hf_actions_per_day = 5.0;  // frequency that makes a field high-frequency
  bool include_new_devices = false;
  std::size_t min_history = 5;      // earliest eligible cutoff index
  int history_limit = 20;
  /// 0 keeps every mined negative; otherwise conflicting negatives first,
  /// then a seeded sample of time-sensitive ones.
  int max_pairs_per_cutoff = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Actions over the user's devices that were never performed within
/// +-window_minutes (time of day) of operation `at_index` during the
/// lookback. Only actions the user performed somewhere in the lookback are
/// considered, unless include_new_devices adds every action of devices with
/// no history at all.
std::vector<Action> mine_time_sensitive_negatives(const History& history,
                                                  std::size_t at_index,
                                                  const DeviceCatalog& catalog,
                                                  const PreferenceConfig& cfg = {});

/// Opposites of binary actions performed shortly before operation
/// `at_index` (conflict_minutes, or hf_conflict_minutes for high-frequency
/// fields).
std::vector<Action> mine_conflicting_negatives(const History& history,
                                               std::size_t at_index,
                                               const DeviceCatalog& catalog,
                                               const PreferenceConfig& cfg = {});

/// Catalog flag, or at least hf_actions_per_day actions per day on this
/// (room, device, field) averaged over the lookback before `at_index`.
bool is_high_frequency(const History& history, std::size_t at_index, const Action& a,
                       const DeviceCatalog& catalog, const PreferenceConfig& cfg);

/// Hash identifying a prompt's content.
std::uint64_t prompt_hash(const Prompt& p);

/// Pairs for every eligible cutoff whose timestamp lies in [from, to).
std::vector<PreferencePair> build_dpo_dataset(
    const Dataset& data, const DeviceCatalog& catalog, const PreferenceConfig& cfg,
    Timestamp from = std::numeric_limits<Timestamp>::min(),
    Timestamp to = std::numeric_limits<Timestamp>::max());

/// Resolves a pair against the feature space.
EncodedPair encode_pair(const FeatureSpace& space, const PreferencePair& p);

}  // namespace opsrec
