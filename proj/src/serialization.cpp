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

#include "opsrec/serialization.h"

#include <fstream>
#include <map>

namespace opsrec {

using nlohmann::json;

json to_json(const Value& v) {
  if (v.is_numeric()) {
    return v.number();
  }
  return v.symbol();
}

Value value_from_json(const json& j) {
  if (j.is_number()) {
    return Value(j.get<double>());
  }
  return Value(j.get<std::string>());
}

json to_json(const Action& a) {
  return json::array({a.room, a.device, a.field, to_json(a.value)});
}

Action action_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw InvalidArgument("action must be a 4-element array: " + j.dump());
  }
  return Action{j[0].get<std::string>(), j[1].get<std::string>(),
                j[2].get<std::string>(), value_from_json(j[3])};
}

json to_json(const Operation& op) {
  json env = json::array();
  for (const auto& e : op.env) {
    env.push_back(json::array({e.room, e.indicator, to_json(e.value)}));
  }
  json actions = json::array();
  for (const auto& a : op.actions) {
    actions.push_back(to_json(a));
  }
  json j = {{"timestamp", op.timestamp}, {"env", env}, {"actions", actions}};
  if (op.description) {
    j["description"] = json::array({op.description->template_id,
                                    op.description->room,
                                    op.description->device});
  }
  return j;
}

Operation operation_from_json(const json& j) {
  Operation op;
  op.timestamp = j.at("timestamp").get<Timestamp>();
  for (const auto& e : j.value("env", json::array())) {
    op.env.push_back(EnvReading{e.at(0).get<std::string>(),
                                e.at(1).get<std::string>(),
                                value_from_json(e.at(2))});
  }
  for (const auto& a : j.at("actions")) {
    op.actions.push_back(action_from_json(a));
  }
  if (j.contains("description")) {
    const auto& d = j.at("description");
    op.description = Description{d.at(0).get<std::string>(),
                                 d.at(1).get<std::string>(),
                                 d.at(2).get<std::string>()};
  }
  return op;
}

json ArtifactHeader::to_json() const {
  return {{"stage", stage},
          {"config_hash", config_hash},
          {"seed", seed},
          {"version", version}};
}

ArtifactHeader ArtifactHeader::from_json(const json& j) {
  ArtifactHeader h;
  h.stage = j.value("stage", "");
  h.config_hash = j.value("config_hash", "");
  h.seed = j.value("seed", std::uint64_t{0});
  h.version = j.value("version", 1);
  return h;
}

void write_jsonl(const std::filesystem::path& path, const ArtifactHeader& h,
                 const std::vector<json>& records) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << json{{"header", h.to_json()}}.dump() << '\n';
  for (const auto& r : records) {
    out << r.dump() << '\n';
  }
}

JsonlFile read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot read " + path.string());
  }
  JsonlFile f;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (first && j.is_object() && j.contains("header")) {
      f.header = ArtifactHeader::from_json(j.at("header"));
    } else {
      f.records.push_back(std::move(j));
    }
    first = false;
  }
  return f;
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << j.dump(1) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot read " + path.string());
  }
  return json::parse(in);
}

std::vector<json> histories_to_records(const Dataset& data) {
  std::vector<json> out;
  for (const auto& h : data) {
    json devices = json::array();
    for (const auto& d : h.devices) {
      devices.push_back(json::array({d.room, d.device}));
    }
    out.push_back({{"user_id", h.user_id}, {"devices", devices}});
    for (const auto& op : h.operations) {
      json j = to_json(op);
      j["user_id"] = h.user_id;
      out.push_back(std::move(j));
    }
  }
  return out;
}

Dataset histories_from_records(const std::vector<json>& records) {
  Dataset data;
  std::map<std::string, std::size_t> index;
  auto slot = [&](const std::string& user) -> History& {
    auto [it, inserted] = index.try_emplace(user, data.size());
    if (inserted) {
      data.push_back(History{user, {}, {}});
    }
    return data[it->second];
  };
  for (const auto& r : records) {
    History& h = slot(r.at("user_id").get<std::string>());
    if (r.contains("devices")) {
      for (const auto& d : r.at("devices")) {
        h.devices.push_back({d.at(0).get<std::string>(),
                             d.at(1).get<std::string>()});
      }
    } else {
      h.operations.push_back(operation_from_json(r));
    }
  }
  return data;
}

}  // namespace opsrec
