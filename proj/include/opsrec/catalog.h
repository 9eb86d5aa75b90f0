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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "opsrec/domain.h"

namespace opsrec {

class CatalogError : public Error {
 public:
  using Error::Error;
};

/// Evenly spaced numeric buckets [min, max] with width `step`.
struct NumericRange {
  double min = 0;
  double max = 0;
  double step = 1;

  std::size_t bucket_count() const;
  double at(std::size_t i) const;
  /// Index of the bucket `v` sits on, if it lies on the grid.
  std::optional<std::size_t> index_of(double v) const;
};

/// Closed symbol set, or a numeric range expanded into bucket symbols.
struct ValueDomain {
  std::vector<std::string> symbols;
  std::optional<NumericRange> range;

  bool numeric() const { return range.has_value(); }
  std::size_t size() const { return symbols.size(); }
  std::optional<std::size_t> index_of(const Value& v) const;
  Value at(std::size_t i) const;
};

struct FieldSpec {
  std::string name;
  ValueDomain domain;
  /// Binary-opposite field; domain.symbols holds exactly {on, off}.
  bool opposite = false;
  bool high_frequency = false;
  /// Description template used when realizing actions on this field.
  /// Empty means the default (`turn_<value>` for binary, `set_<field>`
  /// otherwise).
  std::map<std::string, std::string> templates;

  int field_class = -1;
  int first_value_class = -1;

  bool numeric() const { return domain.numeric(); }
};

struct DeviceType {
  std::string name;
  std::string category;
  std::vector<FieldSpec> fields;

  const FieldSpec* field(std::string_view name) const;
  int field_position(std::string_view name) const;
};

struct IndicatorSpec {
  std::string name;
  ValueDomain domain;
  /// Edges splitting numeric readings into coarse model feature buckets.
  std::vector<double> feature_edges;

  int feature_bucket(const Value& v) const;
  int feature_bucket_count() const;
};

/// One member of an equivalence class; an empty value is a wildcard.
struct EquivalencePattern {
  std::string device;
  std::string field;
  std::optional<std::string> value;
};

/// A (room, device type) pair that exists in the catalog.
struct DeviceInstance {
  int room = -1;
  int type = -1;
};

/// Integer coordinates of a catalog-valid action.
struct ActionRef {
  int room = -1;
  int type = -1;
  int instance = -1;
  int field_pos = -1;     // position within the device type
  int field_class = -1;   // global (type, field)
  int value_pos = -1;     // position within the field domain
  int value_class = -1;   // global (type, field, value)
  int action_id = -1;     // global (room, type, field, value)
};

enum class Violation {
  kNone,
  kUnknownRoom,
  kUnknownDevice,
  kUnknownField,
  kOutOfDomain,
};

struct ValidationResult {
  Violation violation = Violation::kNone;
  std::string message;

  bool ok() const { return violation == Violation::kNone; }
  explicit operator bool() const { return ok(); }
};

class DeviceCatalog {
 public:
  static DeviceCatalog from_json(const nlohmann::json& j);
  static DeviceCatalog load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  const std::vector<std::string>& rooms() const { return rooms_; }
  const std::vector<DeviceType>& device_types() const { return types_; }
  const std::vector<IndicatorSpec>& indicators() const { return indicators_; }
  const std::vector<DeviceInstance>& instances() const { return instances_; }
  const std::vector<std::vector<EquivalencePattern>>& equivalence_classes()
      const {
    return equivalence_;
  }

  std::optional<int> room_index(std::string_view room) const;
  std::optional<int> type_index(std::string_view device) const;
  std::optional<int> indicator_index(std::string_view indicator) const;
  std::optional<int> instance_index(int room, int type) const;
  std::optional<int> instance_index(std::string_view room,
                                    std::string_view device) const;

  const DeviceType& type(int i) const { return types_.at(i); }
  const FieldSpec& field(int type, int field_pos) const {
    return types_.at(type).fields.at(field_pos);
  }

  int num_field_classes() const { return num_field_classes_; }
  int num_value_classes() const { return num_value_classes_; }
  int num_actions() const { return static_cast<int>(action_table_.size()); }

  /// Resolves a valid action to integer coordinates.
  std::optional<ActionRef> resolve(const Action& a) const;
  const ActionRef& action_ref(int action_id) const {
    return action_table_.at(action_id);
  }
  Action action_at(int action_id) const;
  /// Global action id from coordinates.
  int action_id(int instance, int field_pos, int value_pos) const;

  /// (type, field_pos) owning a field class, and (type, field_pos,
  /// value_pos) owning a value class.
  std::pair<int, int> field_class_owner(int field_class) const;
  std::tuple<int, int, int> value_class_owner(int value_class) const;

  /// Equivalence class index containing the action's (device, field, value).
  std::optional<int> equivalence_class_of(const Action& a) const;

  /// Sorted set of all description template ids.
  const std::vector<std::string>& templates() const { return templates_; }
  std::optional<int> template_index(std::string_view id) const;
  std::string template_for(const Action& a) const;

  /// Stable 64-bit fingerprint of the catalog contents.
  std::uint64_t fingerprint() const;

 private:
  void finalize();

  std::vector<std::string> rooms_;
  std::vector<DeviceType> types_;
  std::vector<IndicatorSpec> indicators_;
  std::vector<std::vector<int>> room_types_;
  std::vector<DeviceInstance> instances_;
  std::vector<std::vector<int>> instance_lookup_;  // [room][type] -> id / -1
  std::vector<std::vector<EquivalencePattern>> equivalence_;
  std::vector<ActionRef> action_table_;
  std::vector<int> instance_action_offset_;
  std::vector<std::pair<int, int>> field_class_owner_;
  std::vector<std::tuple<int, int, int>> value_class_owner_;
  std::vector<std::string> templates_;
  int num_field_classes_ = 0;
  int num_value_classes_ = 0;
};

/// Checks an action against the catalog, naming the first violated
/// constraint.
ValidationResult validate_action(const Action& action,
                                 const DeviceCatalog& catalog);

/// Validates a whole operation: positive timestamp, non-empty actions, valid
/// env readings and actions, no two actions setting one field differently.
ValidationResult validate_operation(const Operation& op,
                                    const DeviceCatalog& catalog);

/// Same quadruple with the other value for binary-opposite fields; nullopt
/// for numeric and multi-valued fields. Throws InvalidArgument on an invalid
/// action.
std::optional<Action> opposite_action(const Action& action,
                                      const DeviceCatalog& catalog);

/// Default description realized from an operation's first action.
Description describe(const Action& action, const DeviceCatalog& catalog);

/// Human-readable text for a description.
std::string render(const Description& d);

}  // namespace opsrec
