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

#include <string>
#include <vector>

#include <json.hpp>

#include "opsrec/domain.h"

namespace opsrec {

/// Probability the model gave one decoded attribute, with the size of the
/// legal support it was chosen from.
struct AttributeScore {
  double prob = 1.0;
  int support = 1;
  bool numeric = false;
};

struct ScoredAction {
  Action action;
  AttributeScore room;  // diagnostics only, not part of the confidence
  AttributeScore device;
  AttributeScore field;
  AttributeScore value;
};

/// Decoded action(s) plus description, ready for exposure gating.
struct Recommendation {
  std::string user_id;
  Timestamp time = 0;
  std::vector<ScoredAction> actions;
  Description description;

  std::vector<Action> plain_actions() const;
  /// Probability of the first action's device attribute.
  double first_token() const;

  nlohmann::json to_json() const;
  static Recommendation from_json(const nlohmann::json& j);
};

}  // namespace opsrec
