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

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace opsrec {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Minutes since 1970-01-01 00:00 (local household time, no time zones).
using Timestamp = std::int64_t;

/// A field or indicator value: either a closed-set symbol or a number.
/// Numbers compare through their canonical bucket symbol.
class Value {
 public:
  Value() = default;
  explicit Value(std::string symbol);
  explicit Value(double number);

  bool is_numeric() const { return number_.has_value(); }
  double number() const;
  const std::string& symbol() const { return symbol_; }

  friend bool operator==(const Value& a, const Value& b) {
    return a.symbol_ == b.symbol_;
  }
  friend auto operator<=>(const Value& a, const Value& b) {
    return a.symbol_ <=> b.symbol_;
  }

 private:
  std::string symbol_;
  std::optional<double> number_;
};

/// Shortest round-trip decimal rendering used for numeric symbols.
std::string format_number(double v);

/// The {room, device, field, value} quadruple a user executes.
struct Action {
  std::string room;
  std::string device;
  std::string field;
  Value value;

  friend bool operator==(const Action&, const Action&) = default;
  friend auto operator<=>(const Action&, const Action&) = default;
};

std::string to_string(const Action& a);

/// The {room, indicator, value} environment triplet.
struct EnvReading {
  std::string room;
  std::string indicator;
  Value value;

  friend bool operator==(const EnvReading&, const EnvReading&) = default;
};

/// Template-based operation description: a template id plus slot fills
/// (room, device type).
struct Description {
  std::string template_id;
  std::string room;
  std::string device;

  friend bool operator==(const Description&, const Description&) = default;
};

struct Operation {
  Timestamp timestamp = 0;
  std::vector<EnvReading> env;
  std::optional<Description> description;
  std::vector<Action> actions;

  friend bool operator==(const Operation&, const Operation&) = default;
};

/// A (room, device type) pair owned by a user.
struct DeviceRef {
  std::string room;
  std::string device;

  friend bool operator==(const DeviceRef&, const DeviceRef&) = default;
  friend auto operator<=>(const DeviceRef&, const DeviceRef&) = default;
};

struct History {
  std::string user_id;
  /// The user's installed devices; recommendation candidates come from here.
  std::vector<DeviceRef> devices;
  std::vector<Operation> operations;
};

using Dataset = std::vector<History>;

/// True when the timestamps never decrease.
bool is_time_ordered(const History& h);

}  // namespace opsrec
