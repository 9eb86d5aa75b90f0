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

#include "opsrec/catalog.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "opsrec/hash.h"

namespace opsrec {

using nlohmann::json;

std::size_t NumericRange::bucket_count() const {
  return static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
}

double NumericRange::at(std::size_t i) const {
  const double v = min + static_cast<double>(i) * step;
  return std::round(v * 1e9) / 1e9;
}

std::optional<std::size_t> NumericRange::index_of(double v) const {
  const double k = std::round((v - min) / step);
  if (k < 0 || k >= static_cast<double>(bucket_count())) {
    return std::nullopt;
  }
  const auto i = static_cast<std::size_t>(k);
  if (std::abs(at(i) - v) > 1e-9 * std::max(1.0, std::abs(v))) {
    return std::nullopt;
  }
  return i;
}

std::optional<std::size_t> ValueDomain::index_of(const Value& v) const {
  if (range && v.is_numeric()) {
    return range->index_of(v.number());
  }
  auto it = std::find(symbols.begin(), symbols.end(), v.symbol());
  if (it == symbols.end()) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - symbols.begin());
}

Value ValueDomain::at(std::size_t i) const {
  if (range) {
    return Value(range->at(i));
  }
  return Value(symbols.at(i));
}

const FieldSpec* DeviceType::field(std::string_view name) const {
  for (const auto& f : fields) {
    if (f.name == name) {
      return &f;
    }
  }
  return nullptr;
}

int DeviceType::field_position(std::string_view name) const {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].name == name) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

int IndicatorSpec::feature_bucket(const Value& v) const {
  if (!domain.numeric()) {
    auto idx = domain.index_of(v);
    return idx ? static_cast<int>(*idx) : 0;
  }
  const double x = v.number();
  int b = 0;
  for (double edge : feature_edges) {
    if (x >= edge) {
      ++b;
    }
  }
  return b;
}

int IndicatorSpec::feature_bucket_count() const {
  if (!domain.numeric()) {
    return static_cast<int>(domain.size());
  }
  return static_cast<int>(feature_edges.size()) + 1;
}

namespace {

ValueDomain parse_domain(const json& j, const std::string& where,
                         std::vector<std::string>& errors) {
  ValueDomain d;
  if (j.contains("numeric")) {
    const auto& n = j.at("numeric");
    NumericRange r{n.value("min", 0.0), n.value("max", 0.0),
                   n.value("step", 1.0)};
    if (!(r.min < r.max)) {
      errors.push_back(where + ": numeric range needs min < max");
      return d;
    }
    if (!(r.step > 0)) {
      errors.push_back(where + ": bucket width must be positive");
      return d;
    }
    d.range = r;
    for (std::size_t i = 0; i < r.bucket_count(); ++i) {
      d.symbols.push_back(format_number(r.at(i)));
    }
  } else if (j.contains("values")) {
    for (const auto& v : j.at("values")) {
      d.symbols.push_back(v.get<std::string>());
    }
    std::set<std::string> unique(d.symbols.begin(), d.symbols.end());
    if (unique.size() != d.symbols.size()) {
      errors.push_back(where + ": duplicate values");
    }
  }
  if (d.symbols.empty()) {
    errors.push_back(where + ": empty value domain");
  }
  return d;
}

json domain_to_json(const ValueDomain& d) {
  if (d.range) {
    return {{"numeric",
             {{"min", d.range->min},
              {"max", d.range->max},
              {"step", d.range->step}}}};
  }
  return {{"values", d.symbols}};
}

bool patterns_overlap(const EquivalencePattern& a,
                      const EquivalencePattern& b) {
  if (a.device != b.device || a.field != b.field) {
    return false;
  }
  return !a.value || !b.value || *a.value == *b.value;
}

}  // namespace

DeviceCatalog DeviceCatalog::from_json(const json& j) {
  DeviceCatalog c;
  std::vector<std::string> errors;

  const json indicators = j.value("indicators", json::object());
  for (const auto& [name, spec] : indicators.items()) {
    IndicatorSpec ind;
    ind.name = name;
    ind.domain = parse_domain(spec, "indicator " + name, errors);
    for (const auto& e : spec.value("feature_edges", json::array())) {
      ind.feature_edges.push_back(e.get<double>());
    }
    c.indicators_.push_back(std::move(ind));
  }

  for (const auto& [name, spec] : j.at("device_types").items()) {
    DeviceType t;
    t.name = name;
    t.category = spec.value("category", name);
    for (const auto& [fname, fspec] : spec.at("fields").items()) {
      FieldSpec f;
      f.name = fname;
      const std::string where = name + "." + fname;
      f.domain = parse_domain(fspec, where, errors);
      f.opposite = fspec.value("opposite", false);
      f.high_frequency = fspec.value("high_frequency", false);
      if (f.opposite && (f.domain.numeric() || f.domain.size() != 2)) {
        errors.push_back(where + ": binary-opposite field needs exactly two "
                                 "symbolic values");
      }
      const json templates = fspec.value("templates", json::object());
      for (const auto& [v, tpl] : templates.items()) {
        f.templates[v] = tpl.get<std::string>();
      }
      t.fields.push_back(std::move(f));
    }
    if (t.fields.empty()) {
      errors.push_back("device type " + name + " has no fields");
    }
    c.types_.push_back(std::move(t));
  }

  for (const auto& [room, devices] : j.at("rooms").items()) {
    c.rooms_.push_back(room);
    std::vector<int> types;
    for (const auto& d : devices) {
      auto ti = c.type_index(d.get<std::string>());
      if (!ti) {
        errors.push_back("room " + room + " lists unknown device type " +
                         d.get<std::string>());
        continue;
      }
      types.push_back(*ti);
    }
    std::sort(types.begin(), types.end());
    types.erase(std::unique(types.begin(), types.end()), types.end());
    c.room_types_.push_back(std::move(types));
  }

  for (const auto& cls : j.value("equivalence_classes", json::array())) {
    std::vector<EquivalencePattern> members;
    for (const auto& m : cls) {
      EquivalencePattern p;
      p.device = m.at("device").get<std::string>();
      p.field = m.at("field").get<std::string>();
      const auto v = m.value("value", std::string("*"));
      if (v != "*") {
        p.value = v;
      }
      auto ti = c.type_index(p.device);
      if (!ti || !c.types_[*ti].field(p.field)) {
        errors.push_back("equivalence pattern " + p.device + "." + p.field +
                         " is not in the catalog");
      }
      members.push_back(std::move(p));
    }
    c.equivalence_.push_back(std::move(members));
  }
  for (std::size_t a = 0; a < c.equivalence_.size(); ++a) {
    for (std::size_t b = a + 1; b < c.equivalence_.size(); ++b) {
      for (const auto& pa : c.equivalence_[a]) {
        for (const auto& pb : c.equivalence_[b]) {
          if (patterns_overlap(pa, pb)) {
            errors.push_back(fmt::format(
                "equivalence classes {} and {} overlap on {}.{}", a, b,
                pa.device, pa.field));
          }
        }
      }
    }
  }

  if (!errors.empty()) {
    std::string msg = "invalid catalog:";
    for (const auto& e : errors) {
      msg += "\n  " + e;
    }
    throw CatalogError(msg);
  }
  c.finalize();
  return c;
}

DeviceCatalog DeviceCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw CatalogError("cannot open catalog " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw CatalogError("malformed catalog " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void DeviceCatalog::finalize() {
  int fc = 0;
  int vc = 0;
  for (std::size_t t = 0; t < types_.size(); ++t) {
    for (std::size_t f = 0; f < types_[t].fields.size(); ++f) {
      auto& field = types_[t].fields[f];
      field.field_class = fc++;
      field_class_owner_.emplace_back(t, f);
      field.first_value_class = vc;
      for (std::size_t v = 0; v < field.domain.size(); ++v) {
        value_class_owner_.emplace_back(t, f, v);
        ++vc;
      }
    }
  }
  num_field_classes_ = fc;
  num_value_classes_ = vc;

  instance_lookup_.assign(rooms_.size(), std::vector<int>(types_.size(), -1));
  for (std::size_t r = 0; r < rooms_.size(); ++r) {
    for (int t : room_types_[r]) {
      instance_lookup_[r][t] = static_cast<int>(instances_.size());
      instances_.push_back({static_cast<int>(r), t});
    }
  }

  for (std::size_t i = 0; i < instances_.size(); ++i) {
    instance_action_offset_.push_back(static_cast<int>(action_table_.size()));
    const auto& inst = instances_[i];
    const auto& type = types_[inst.type];
    for (std::size_t f = 0; f < type.fields.size(); ++f) {
      const auto& field = type.fields[f];
      for (std::size_t v = 0; v < field.domain.size(); ++v) {
        ActionRef ref;
        ref.room = inst.room;
        ref.type = inst.type;
        ref.instance = static_cast<int>(i);
        ref.field_pos = static_cast<int>(f);
        ref.field_class = field.field_class;
        ref.value_pos = static_cast<int>(v);
        ref.value_class = field.first_value_class + static_cast<int>(v);
        ref.action_id = static_cast<int>(action_table_.size());
        action_table_.push_back(ref);
      }
    }
  }

  std::set<std::string> tpl;
  for (const auto& type : types_) {
    for (const auto& field : type.fields) {
      for (std::size_t v = 0; v < field.domain.size(); ++v) {
        Action a{rooms_.front(), type.name, field.name, field.domain.at(v)};
        tpl.insert(template_for(a));
      }
    }
  }
  templates_.assign(tpl.begin(), tpl.end());
}

json DeviceCatalog::to_json() const {
  json j;
  json ind = json::object();
  for (const auto& i : indicators_) {
    json spec = domain_to_json(i.domain);
    if (!i.feature_edges.empty()) {
      spec["feature_edges"] = i.feature_edges;
    }
    ind[i.name] = spec;
  }
  j["indicators"] = ind;
  json types = json::object();
  for (const auto& t : types_) {
    json fields = json::object();
    for (const auto& f : t.fields) {
      json spec = domain_to_json(f.domain);
      if (f.opposite) spec["opposite"] = true;
      if (f.high_frequency) spec["high_frequency"] = true;
      if (!f.templates.empty()) spec["templates"] = f.templates;
      fields[f.name] = spec;
    }
    types[t.name] = {{"category", t.category}, {"fields", fields}};
  }
  j["device_types"] = types;
  json rooms = json::object();
  for (std::size_t r = 0; r < rooms_.size(); ++r) {
    json list = json::array();
    for (int t : room_types_[r]) {
      list.push_back(types_[t].name);
    }
    rooms[rooms_[r]] = list;
  }
  j["rooms"] = rooms;
  json eq = json::array();
  for (const auto& cls : equivalence_) {
    json members = json::array();
    for (const auto& p : cls) {
      members.push_back(
          {{"device", p.device}, {"field", p.field}, {"value", p.value.value_or("*")}});
    }
    eq.push_back(members);
  }
  j["equivalence_classes"] = eq;
  return j;
}

std::optional<int> DeviceCatalog::room_index(std::string_view room) const {
  for (std::size_t i = 0; i < rooms_.size(); ++i) {
    if (rooms_[i] == room) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<int> DeviceCatalog::type_index(std::string_view device) const {
  for (std::size_t i = 0; i < types_.size(); ++i) {
    if (types_[i].name == device) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<int> DeviceCatalog::indicator_index(
    std::string_view indicator) const {
  for (std::size_t i = 0; i < indicators_.size(); ++i) {
    if (indicators_[i].name == indicator) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<int> DeviceCatalog::instance_index(int room, int type) const {
  if (room < 0 || type < 0 || room >= static_cast<int>(rooms_.size()) ||
      type >= static_cast<int>(types_.size())) {
    return std::nullopt;
  }
  const int id = instance_lookup_[room][type];
  if (id < 0) return std::nullopt;
  return id;
}

std::optional<int> DeviceCatalog::instance_index(
    std::string_view room, std::string_view device) const {
  auto r = room_index(room);
  auto t = type_index(device);
  if (!r || !t) return std::nullopt;
  return instance_index(*r, *t);
}

std::optional<ActionRef> DeviceCatalog::resolve(const Action& a) const {
  auto inst = instance_index(a.room, a.device);
  if (!inst) return std::nullopt;
  const auto& type = types_[instances_[*inst].type];
  const int f = type.field_position(a.field);
  if (f < 0) return std::nullopt;
  auto v = type.fields[f].domain.index_of(a.value);
  if (!v) return std::nullopt;
  return action_table_[action_id(*inst, f, static_cast<int>(*v))];
}

int DeviceCatalog::action_id(int instance, int field_pos,
                             int value_pos) const {
  const auto& type = types_[instances_.at(instance).type];
  int offset = instance_action_offset_.at(instance);
  for (int f = 0; f < field_pos; ++f) {
    offset += static_cast<int>(type.fields[f].domain.size());
  }
  return offset + value_pos;
}

Action DeviceCatalog::action_at(int action_id) const {
  const auto& ref = action_table_.at(action_id);
  const auto& type = types_[ref.type];
  const auto& field = type.fields[ref.field_pos];
  return Action{rooms_[ref.room], type.name, field.name,
                field.domain.at(ref.value_pos)};
}

std::pair<int, int> DeviceCatalog::field_class_owner(int field_class) const {
  return field_class_owner_.at(field_class);
}

std::tuple<int, int, int> DeviceCatalog::value_class_owner(
    int value_class) const {
  return value_class_owner_.at(value_class);
}

std::optional<int> DeviceCatalog::equivalence_class_of(const Action& a) const {
  for (std::size_t c = 0; c < equivalence_.size(); ++c) {
    for (const auto& p : equivalence_[c]) {
      if (p.device == a.device && p.field == a.field &&
          (!p.value || *p.value == a.value.symbol())) {
        return static_cast<int>(c);
      }
    }
  }
  return std::nullopt;
}

std::optional<int> DeviceCatalog::template_index(std::string_view id) const {
  auto it = std::lower_bound(templates_.begin(), templates_.end(), id);
  if (it == templates_.end() || *it != id) return std::nullopt;
  return static_cast<int>(it - templates_.begin());
}

std::string DeviceCatalog::template_for(const Action& a) const {
  auto t = type_index(a.device);
  if (!t) {
    throw InvalidArgument("unknown device " + a.device);
  }
  const FieldSpec* f = types_[*t].field(a.field);
  if (!f) {
    throw InvalidArgument("unknown field " + a.device + "." + a.field);
  }
  if (auto it = f->templates.find(a.value.symbol()); it != f->templates.end()) {
    return it->second;
  }
  if (f->opposite) {
    const auto& v = a.value.symbol();
    return (v == "on" || v == "off") ? "turn_" + v : v;
  }
  return "set_" + f->name;
}

std::uint64_t DeviceCatalog::fingerprint() const {
  return fnv1a64(to_json().dump());
}

ValidationResult validate_action(const Action& action,
                                 const DeviceCatalog& catalog) {
  auto room = catalog.room_index(action.room);
  if (!room) {
    return {Violation::kUnknownRoom, "unknown room '" + action.room + "'"};
  }
  auto type = catalog.type_index(action.device);
  if (!type || !catalog.instance_index(*room, *type)) {
    return {Violation::kUnknownDevice, "no device '" + action.device +
                                           "' in room '" + action.room + "'"};
  }
  const FieldSpec* field = catalog.type(*type).field(action.field);
  if (!field) {
    return {Violation::kUnknownField, "device '" + action.device +
                                          "' has no field '" + action.field +
                                          "'"};
  }
  if (!field->domain.index_of(action.value)) {
    return {Violation::kOutOfDomain,
            "value '" + action.value.symbol() + "' is outside the domain of " +
                action.device + "." + action.field};
  }
  return {};
}

ValidationResult validate_operation(const Operation& op,
                                    const DeviceCatalog& catalog) {
  if (op.timestamp <= 0) {
    return {Violation::kOutOfDomain, "timestamp must be positive"};
  }
  if (op.actions.empty()) {
    return {Violation::kOutOfDomain, "operation has no actions"};
  }
  for (const auto& e : op.env) {
    if (!catalog.room_index(e.room)) {
      return {Violation::kUnknownRoom, "unknown env room '" + e.room + "'"};
    }
    auto ind = catalog.indicator_index(e.indicator);
    if (!ind) {
      return {Violation::kUnknownField,
              "unknown indicator '" + e.indicator + "'"};
    }
    if (!catalog.indicators()[*ind].domain.index_of(e.value)) {
      return {Violation::kOutOfDomain, "env value '" + e.value.symbol() +
                                           "' outside " + e.indicator};
    }
  }
  for (std::size_t i = 0; i < op.actions.size(); ++i) {
    if (auto r = validate_action(op.actions[i], catalog); !r) {
      return r;
    }
    for (std::size_t k = 0; k < i; ++k) {
      const auto& a = op.actions[i];
      const auto& b = op.actions[k];
      if (a.room == b.room && a.device == b.device && a.field == b.field &&
          !(a.value == b.value)) {
        return {Violation::kOutOfDomain,
                "conflicting values for " + a.room + "." + a.device + "." +
                    a.field};
      }
    }
  }
  return {};
}

std::optional<Action> opposite_action(const Action& action,
                                      const DeviceCatalog& catalog) {
  if (auto r = validate_action(action, catalog); !r) {
    throw InvalidArgument("opposite_action: " + r.message);
  }
  const FieldSpec* field =
      catalog.type(*catalog.type_index(action.device)).field(action.field);
  if (!field->opposite) {
    return std::nullopt;
  }
  const auto& s = field->domain.symbols;
  Action flipped = action;
  flipped.value = Value(action.value.symbol() == s[0] ? s[1] : s[0]);
  return flipped;
}

Description describe(const Action& action, const DeviceCatalog& catalog) {
  return {catalog.template_for(action), action.room, action.device};
}

std::string render(const Description& d) {
  std::string room = d.room;
  std::replace(room.begin(), room.end(), '_', ' ');
  const std::string target = "the " + room + " " + d.device;
  const auto& t = d.template_id;
  if (t.rfind("turn_", 0) == 0) {
    return "Turn " + t.substr(5) + " " + target;
  }
  if (t.rfind("set_", 0) == 0) {
    return "Adjust " + target + " " + t.substr(4);
  }
  std::string verb = t;
  if (!verb.empty()) verb[0] = static_cast<char>(std::toupper(verb[0]));
  return verb + " " + target;
}

}  // namespace opsrec
