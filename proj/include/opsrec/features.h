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

// Context featurization and legal-support computation shared by every
// model head.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "opsrec/catalog.h"
#include "opsrec/corpus.h"

namespace opsrec {

/// Output heads. Actions decode room -> device -> field -> value; the room
/// head also carries the stop class. Descriptions decode template -> room ->
/// device type.
enum class Slot {
  kRoom = 0,
  kDevice,
  kField,
  kValue,
  kDescTemplate,
  kDescRoom,
  kDescDevice,
};
inline constexpr int kNumSlots = 7;

const char* slot_name(Slot s);
inline bool is_action_slot(Slot s) { return static_cast<int>(s) < 4; }

/// Integer form of a description.
struct DescCode {
  int tpl = -1;
  int room = -1;
  int type = -1;

  friend bool operator==(const DescCode&, const DescCode&) = default;
};

DescCode encode_description(const Description& d, const DeviceCatalog& catalog);
Description decode_description(const DescCode& d, const DeviceCatalog& catalog);

/// Resolves every action; throws InvalidArgument on the first invalid one.
std::vector<ActionRef> encode_actions(const std::vector<Action>& actions,
                                      const DeviceCatalog& catalog);

struct FeatureConfig {
  int last_k = 3;
  int max_actions = 3;
  int near_minutes = 60;    // time-of-day neighbourhood for history counts
  int recent_minutes = 10;  // "just happened" window
  int lately_minutes = 180;  // separates today's activity from earlier days
};

/// Per-class history statistics, looked up by (kind, key).
struct ClassStat {
  double count = 0;
  double near = 0;        // within near_minutes of the prompt's time of day
  double near_prior = 0;  // same, restricted to operations older than lately_minutes
  bool recent = false;
  bool lately = false;
};

/// Everything the heads need from one prompt, computed once.
struct PromptContext {
  std::vector<int> base;            // prompt-level active features
  std::vector<char> allowed;        // per instance
  std::unordered_map<std::int64_t, ClassStat> stats;
  std::unordered_map<std::int64_t, int> state;  // (instance, field) -> value_pos
  /// Habitual actions not yet in effect, aggregated per room / instance /
  /// (instance, field): summed near_prior counts.
  std::unordered_map<std::int64_t, double> pending;
};

/// One conditional distribution request.
struct Query {
  Slot slot = Slot::kRoom;
  /// Actions already emitted for the operation being decoded.
  std::vector<ActionRef> done;
  /// Current action prefix, filled in slot order.
  ActionRef partial;
  /// Action slots: conditioning description (text-first), unset when tpl < 0.
  /// Description slots: the description prefix decoded so far.
  DescCode desc;
  /// Description slots: conditioning actions (action-first), may be empty.
  std::vector<ActionRef> given;
};

class FeatureSpace {
 public:
  /// Class-conditional history features per class.
  static constexpr int kClassFeatures = 7;

  FeatureSpace(const DeviceCatalog& catalog, FeatureConfig cfg);

  const DeviceCatalog& catalog() const { return *catalog_; }
  const FeatureConfig& config() const { return cfg_; }
  int num_features() const { return num_features_; }
  int num_classes(Slot s) const { return classes_[static_cast<int>(s)]; }
  int stop_class() const { return static_cast<int>(catalog_->rooms().size()); }

  /// With `restrict_candidates` false every catalog instance is allowed
  /// (operation pre-training has no candidate list).
  PromptContext context(const Prompt& p, bool restrict_candidates) const;

  std::vector<int> features(const PromptContext& ctx, const Query& q) const;
  /// Sorted legal classes; empty when nothing is legal.
  std::vector<int> support(const PromptContext& ctx, const Query& q) const;
  /// |support| x kClassFeatures matrix.
  Eigen::MatrixXd class_features(const PromptContext& ctx, const Query& q,
                                 const std::vector<int>& support) const;

  std::string class_symbol(Slot s, int cls) const;
  /// Inverse of class_symbol given the query's prefix; -1 when unknown.
  int class_of_symbol(const Query& q, const std::string& symbol) const;

  /// Class a ground-truth action / description takes at a slot.
  int target_class(const Query& q, const ActionRef& a) const;
  int target_class(Slot s, const DescCode& d) const;

  /// Feature group offsets, exposed for tests that zero specific groups.
  struct Layout {
    int hour = 0, weekday = 0, hour_weekend = 0, env = 0, last = 0,
        elapsed = 0, elapsed_last = 0, position = 0, prev = 0,
        prefix_room = 0, prefix_instance = 0, prefix_field = 0,
        desc_tpl = 0, desc_room = 0, desc_type = 0,
        act_first = 0, act_tpl = 0, act_room = 0, act_type = 0, end = 0;
  };
  const Layout& layout() const { return layout_; }

 private:
  static std::int64_t stat_key(int kind, std::int64_t key) {
    return (static_cast<std::int64_t>(kind) << 40) | key;
  }
  std::int64_t field_key(int instance, int field_pos) const {
    return static_cast<std::int64_t>(instance) * max_fields_ + field_pos;
  }
  bool instance_has_free_field(int instance,
                               const std::vector<ActionRef>& done) const;

  const DeviceCatalog* catalog_;
  FeatureConfig cfg_;
  std::vector<std::vector<int>> room_instances_;
  Layout layout_;
  int num_features_ = 0;
  int classes_[kNumSlots] = {};
  int max_fields_ = 1;
  int max_buckets_ = 1;
  std::vector<int> opposite_;        // action id -> opposite action id or -1
  std::vector<int> action_template_; // action id -> template index
};

}  // namespace opsrec
