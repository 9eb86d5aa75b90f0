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

#include "opsrec/domain.h"

#include <cmath>

#include <fmt/format.h>

namespace opsrec {

std::string format_number(double v) {
  if (v == 0.0) {
    return "0";
  }
  return fmt::format("{}", v);
}

Value::Value(std::string symbol) : symbol_(std::move(symbol)) {}

Value::Value(double number)
    : symbol_(format_number(number)), number_(number) {
  if (!std::isfinite(number)) {
    throw InvalidArgument("non-finite numeric value");
  }
}

double Value::number() const {
  if (!number_) {
    throw InvalidArgument("value '" + symbol_ + "' is not numeric");
  }
  return *number_;
}

std::string to_string(const Action& a) {
  return fmt::format("[{}][{}][{}][{}]", a.room, a.device, a.field,
                     a.value.symbol());
}

bool is_time_ordered(const History& h) {
  for (std::size_t i = 1; i < h.operations.size(); ++i) {
    if (h.operations[i].timestamp < h.operations[i - 1].timestamp) {
      return false;
    }
  }
  return true;
}

}  // namespace opsrec
