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

// JSON mappings for domain values and the JSONL artifact container.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "opsrec/domain.h"

namespace opsrec {

class DeviceCatalog;

nlohmann::json to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Action& a);
Action action_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Operation& op);
Operation operation_from_json(const nlohmann::json& j);

/// Every stage artifact starts with this header so downstream stages can
/// refuse inputs produced under a different configuration.
struct ArtifactHeader {
  std::string stage;
  std::string config_hash;
  std::uint64_t seed = 0;
  int version = 1;

  nlohmann::json to_json() const;
  static ArtifactHeader from_json(const nlohmann::json& j);
  friend bool operator==(const ArtifactHeader&, const ArtifactHeader&) = default;
};

struct JsonlFile {
  ArtifactHeader header;
  std::vector<nlohmann::json> records;
};

/// Writes one header line then one record per line.
void write_jsonl(const std::filesystem::path& path, const ArtifactHeader& h,
                 const std::vector<nlohmann::json>& records);
JsonlFile read_jsonl(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Histories as JSONL: one operation per line tagged with its user id. The
/// user's device list travels on a `devices` record preceding their ops.
std::vector<nlohmann::json> histories_to_records(const Dataset& data);
Dataset histories_from_records(const std::vector<nlohmann::json>& records);

}  // namespace opsrec
