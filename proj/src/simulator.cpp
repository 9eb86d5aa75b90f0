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

#include "opsrec/simulator.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include <fmt/format.h>

#include "opsrec/hash.h"
#include "opsrec/serialization.h"
#include "opsrec/timeutil.h"

namespace opsrec {

using nlohmann::json;

bool RoutineRule::active_on(int weekday) const {
  return weekdays.empty() ||
         std::find(weekdays.begin(), weekdays.end(), weekday) != weekdays.end();
}

int RoutineRule::latest_minute() const {
  int t = window.end - 1;
  for (const auto& s : steps) t += s.max_delay;
  return t;
}

Timestamp PopulationConfig::default_start() {
  return from_civil(2025, 6, 2, 0, 0);
}

namespace {

json actions_to_json(const std::vector<Action>& actions) {
  json out = json::array();
  for (const auto& a : actions) out.push_back(to_json(a));
  return out;
}

std::vector<Action> actions_from_json(const json& j) {
  std::vector<Action> out;
  for (const auto& a : j) out.push_back(action_from_json(a));
  return out;
}

// Uniform double in [0, 1) from a hash; used where values must be a pure
// function of their coordinates rather than of RNG call order.
double hashed_unit(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  const std::uint64_t h = mix_seed(mix_seed(seed, a), b);
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

double day_offset(const HouseholdProfile& p, std::uint64_t seed, Timestamp day) {
  // Smooth seasonal drift plus an approximately normal daily perturbation.
  double s = 0;
  for (int k = 0; k < 4; ++k) {
    s += hashed_unit(seed, static_cast<std::uint64_t>(day), 17 + k);
  }
  const double noise = (s - 2.0) * std::sqrt(3.0);
  const double season =
      std::sin(2 * std::numbers::pi * static_cast<double>(day) / 45.0);
  return p.climate.day_jitter * (noise + 0.6 * season);
}

Value clamp_to_domain(double x, const ValueDomain& d) {
  const auto& r = *d.range;
  const double snapped = r.min + std::round((x - r.min) / r.step) * r.step;
  const double clamped = std::clamp(snapped, r.min, r.min + r.step * (r.bucket_count() - 1));
  return d.at(*r.index_of(clamped));
}

Action make_action(const std::string& room, const std::string& device,
                   const std::string& field, Value v) {
  return Action{room, device, field, std::move(v)};
}

bool same_target(const Action& a, const Action& b) {
  return a.room == b.room && a.device == b.device && a.field == b.field;
}

}  // namespace

json HouseholdProfile::to_json() const {
  json devs = json::array();
  for (const auto& d : devices) devs.push_back(json::array({d.room, d.device}));
  json sens = json::array();
  for (const auto& s : sensors) sens.push_back(json::array({s.room, s.indicator}));
  json routines_j = json::array();
  for (const auto& r : routines) {
    json steps = json::array();
    for (const auto& s : r.steps) {
      steps.push_back({{"delay", {s.min_delay, s.max_delay}},
                       {"actions", actions_to_json(s.actions)}});
    }
    routines_j.push_back({{"name", r.name},
                          {"window", {r.window.start, r.window.end}},
                          {"probability", r.probability},
                          {"weekdays", r.weekdays},
                          {"steps", steps}});
  }
  json env_j = json::array();
  for (const auto& e : env_rules) {
    env_j.push_back({{"name", e.name},
                     {"room", e.room},
                     {"indicator", e.indicator},
                     {"threshold", e.threshold},
                     {"probability", e.probability},
                     {"actions", actions_to_json(e.actions)},
                     {"release_threshold", e.release_threshold},
                     {"release_actions", actions_to_json(e.release_actions)}});
  }
  json chains_j = json::array();
  for (const auto& c : chains) {
    chains_j.push_back({{"before", opsrec::to_json(c.before)},
                        {"after", opsrec::to_json(c.after)}});
  }
  return {{"user_id", user_id},
          {"devices", devs},
          {"sensors", sens},
          {"climate",
           {{"base_temperature", climate.base_temperature},
            {"daily_amplitude", climate.daily_amplitude},
            {"day_jitter", climate.day_jitter},
            {"base_humidity", climate.base_humidity}}},
          {"noise_rate", noise_rate},
          {"description_rate", description_rate},
          {"routines", routines_j},
          {"env_rules", env_j},
          {"chains", chains_j}};
}

HouseholdProfile HouseholdProfile::from_json(const json& j) {
  HouseholdProfile p;
  p.user_id = j.at("user_id").get<std::string>();
  for (const auto& d : j.at("devices")) {
    p.devices.push_back({d.at(0).get<std::string>(), d.at(1).get<std::string>()});
  }
  for (const auto& s : j.value("sensors", json::array())) {
    p.sensors.push_back({s.at(0).get<std::string>(), s.at(1).get<std::string>()});
  }
  if (j.contains("climate")) {
    const auto& c = j.at("climate");
    p.climate.base_temperature = c.value("base_temperature", 26.0);
    p.climate.daily_amplitude = c.value("daily_amplitude", 5.0);
    p.climate.day_jitter = c.value("day_jitter", 1.5);
    p.climate.base_humidity = c.value("base_humidity", 55.0);
  }
  p.noise_rate = j.value("noise_rate", 0.1);
  p.description_rate = j.value("description_rate", 0.7);
  for (const auto& r : j.value("routines", json::array())) {
    RoutineRule rule;
    rule.name = r.value("name", "");
    rule.window = {r.at("window").at(0).get<int>(), r.at("window").at(1).get<int>()};
    rule.probability = r.value("probability", 1.0);
    rule.weekdays = r.value("weekdays", std::vector<int>{});
    for (const auto& s : r.at("steps")) {
      RoutineStep step;
      step.min_delay = s.at("delay").at(0).get<int>();
      step.max_delay = s.at("delay").at(1).get<int>();
      step.actions = actions_from_json(s.at("actions"));
      rule.steps.push_back(std::move(step));
    }
    p.routines.push_back(std::move(rule));
  }
  for (const auto& e : j.value("env_rules", json::array())) {
    EnvRule rule;
    rule.name = e.value("name", "");
    rule.room = e.at("room").get<std::string>();
    rule.indicator = e.at("indicator").get<std::string>();
    rule.threshold = e.at("threshold").get<double>();
    rule.probability = e.value("probability", 1.0);
    rule.actions = actions_from_json(e.at("actions"));
    rule.release_threshold = e.value("release_threshold", rule.threshold);
    rule.release_actions = actions_from_json(e.value("release_actions", json::array()));
    p.env_rules.push_back(std::move(rule));
  }
  for (const auto& c : j.value("chains", json::array())) {
    p.chains.push_back({action_from_json(c.at("before")),
                        action_from_json(c.at("after"))});
  }
  return p;
}

void HouseholdProfile::validate(const DeviceCatalog& catalog) const {
  auto fail = [&](const std::string& what) {
    throw InvalidArgument("profile " + user_id + ": " + what);
  };
  if (devices.empty()) fail("no devices");
  if (routines.empty() && env_rules.empty()) fail("empty profile (no rules)");
  auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob_ok(noise_rate) || !prob_ok(description_rate)) {
    fail("rates must lie in [0, 1]");
  }
  auto owns = [&](const Action& a) {
    return std::find(devices.begin(), devices.end(), DeviceRef{a.room, a.device}) !=
           devices.end();
  };
  auto check = [&](const Action& a) {
    if (auto v = validate_action(a, catalog); !v) fail(v.message);
    if (!owns(a)) fail("rule targets a device the household lacks: " + to_string(a));
  };
  for (const auto& d : devices) {
    if (!catalog.instance_index(d.room, d.device)) {
      fail("unknown device " + d.room + "/" + d.device);
    }
  }
  for (const auto& r : routines) {
    if (!prob_ok(r.probability)) fail("routine probability outside [0, 1]");
    if (r.window.start < 0 || r.window.end > 1440 || r.window.start >= r.window.end) {
      fail("routine window out of range");
    }
    if (r.steps.empty()) fail("routine without steps");
    for (const auto& s : r.steps) {
      if (s.min_delay < 0 || s.max_delay < s.min_delay) fail("bad step delay");
      for (const auto& a : s.actions) check(a);
    }
  }
  for (const auto& e : env_rules) {
    if (!prob_ok(e.probability)) fail("env rule probability outside [0, 1]");
    if (!catalog.indicator_index(e.indicator)) fail("unknown indicator " + e.indicator);
    for (const auto& a : e.actions) check(a);
    for (const auto& a : e.release_actions) check(a);
  }
  for (const auto& c : chains) {
    check(c.before);
    check(c.after);
  }
}

std::vector<HouseholdProfile> generate_profiles(const DeviceCatalog& catalog,
                                                const PopulationConfig& cfg,
                                                std::uint64_t seed) {
  if (cfg.households <= 0) {
    throw InvalidArgument("population needs at least one household");
  }
  const auto& instances = catalog.instances();
  const int n_inst = static_cast<int>(instances.size());
  const std::set<std::pair<std::string, std::string>> core = {
      {"bedroom", "light"},     {"bedroom", "curtain"},  {"bedroom", "AC"},
      {"living_room", "light"}, {"living_room", "camera"},
      {"bathroom", "warmer"},   {"living_room", "curtain"},
      {"living_room", "AC"},    {"bedroom", "switch"},   {"bathroom", "light"}};

  std::vector<HouseholdProfile> out;
  for (int h = 0; h < cfg.households; ++h) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(h)));
    auto uni = [&](int lo, int hi) {
      return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    auto coin = [&](double p) {
      return std::uniform_real_distribution<double>(0, 1)(rng) < p;
    };

    HouseholdProfile p;
    p.user_id = fmt::format("u{:04d}", h);
    p.noise_rate = cfg.noise_rate;
    p.climate.base_temperature = 24.0 + uni(0, 40) / 10.0;
    p.climate.daily_amplitude = 3.5 + uni(0, 30) / 10.0;
    p.climate.base_humidity = 45.0 + uni(0, 20);

    // Device count: cycle through the reporting buckets.
    static const int kLo[] = {1, 6, 11, 21};
    static const int kHi[] = {5, 10, 20, 26};
    const int bucket = h % 4;
    const int count = std::min(n_inst, uni(kLo[bucket], std::min(kHi[bucket], n_inst)));

    std::vector<std::pair<double, int>> keyed;
    for (int i = 0; i < n_inst; ++i) {
      const auto& inst = instances[i];
      const bool is_core = core.count({catalog.rooms()[inst.room],
                                       catalog.type(inst.type).name}) > 0;
      const double u = std::uniform_real_distribution<double>(1e-9, 1)(rng);
      // Weighted sampling without replacement (exponential keys).
      keyed.emplace_back(std::log(u) / (is_core ? 6.0 : 1.0), i);
    }
    std::sort(keyed.begin(), keyed.end(), std::greater<>());
    std::vector<int> chosen;
    for (int k = 0; k < count; ++k) chosen.push_back(keyed[k].second);
    std::sort(chosen.begin(), chosen.end());

    std::set<std::pair<std::string, std::string>> owned;
    for (int i : chosen) {
      const auto& inst = instances[i];
      p.devices.push_back({catalog.rooms()[inst.room], catalog.type(inst.type).name});
      owned.insert({p.devices.back().room, p.devices.back().device});
    }
    auto has = [&](const std::string& room, const std::string& dev) {
      return owned.count({room, dev}) > 0;
    };

    // Bedtime routine covers these devices; they get no separate off rule.
    std::vector<Action> bedtime_steps;
    if (has("living_room", "light")) {
      bedtime_steps.push_back(make_action("living_room", "light", "switch", Value("off")));
    }
    if (has("bedroom", "curtain")) {
      bedtime_steps.push_back(make_action("bedroom", "curtain", "switch", Value("close")));
    }
    if (has("bedroom", "light")) {
      bedtime_steps.push_back(make_action("bedroom", "light", "switch", Value("off")));
    }
    auto in_bedtime = [&](const std::string& room, const std::string& dev) {
      for (const auto& a : bedtime_steps) {
        if (a.room == room && a.device == dev) return true;
      }
      return false;
    };
    std::set<std::string> sensor_rooms;

    for (const auto& d : p.devices) {
      const std::string& room = d.room;
      const std::string& dev = d.device;
      const std::string tag = room + "." + dev;
      if (dev == "light") {
        if (room == "bathroom") {
          const int s = uni(390, 450);
          p.routines.push_back({tag + ".morning", {s, s + 45}, 0.75, {},
                                {{0, 0, {make_action(room, dev, "switch", Value("on"))}},
                                 {3, 12, {make_action(room, dev, "switch", Value("off"))}}}});
          continue;
        }
        const int s = uni(1050, 1170);
        std::vector<Action> on = {make_action(room, dev, "switch", Value("on"))};
        if (coin(0.4)) {
          on.push_back(make_action(room, dev, "brightness", Value(10.0 * uni(3, 10))));
        }
        p.routines.push_back({tag + ".evening_on", {s, s + uni(45, 90)}, 0.8, {}, {{0, 0, on}}});
        if (!in_bedtime(room, dev)) {
          const int e = uni(1290, 1380);
          p.routines.push_back({tag + ".night_off", {e, e + 45}, 0.8, {},
                                {{0, 0, {make_action(room, dev, "switch", Value("off"))}}}});
        }
      } else if (dev == "curtain") {
        const int s = uni(360, 470);
        p.routines.push_back({tag + ".open", {s, s + uni(40, 70)}, 0.85, {},
                              {{0, 0, {make_action(room, dev, "switch", Value("open"))}}}});
        if (!in_bedtime(room, dev)) {
          const int e = uni(1200, 1290);
          p.routines.push_back({tag + ".close", {e, e + uni(45, 75)}, 0.85, {},
                                {{0, 0, {make_action(room, dev, "switch", Value("close"))}}}});
        }
      } else if (dev == "AC") {
        sensor_rooms.insert(room);
        const double thr = uni(28, 31);
        std::vector<Action> on = {make_action(room, dev, "switch", Value("on")),
                                  make_action(room, dev, "temperature", Value(double(uni(22, 26))))};
        if (!has(room, "switch") && coin(0.3)) {
          on.push_back(make_action(room, dev, "mode", Value("cool")));
        }
        p.env_rules.push_back({tag + ".cool", room, "temperature", thr, 0.8, on, thr - 3,
                               {make_action(room, dev, "switch", Value("off"))}});
        if (has(room, "switch")) {
          p.chains.push_back({make_action(room, "switch", "switch", Value("on")),
                              make_action(room, dev, "switch", Value("on"))});
        }
      } else if (dev == "camera") {
        const int s = uni(450, 520);
        const int e = uni(1080, 1150);
        const std::vector<int> weekdays = {1, 2, 3, 4, 5};
        p.routines.push_back({tag + ".leave", {s, s + 45}, 0.8, weekdays,
                              {{0, 0, {make_action(room, dev, "switch", Value("on"))}}}});
        p.routines.push_back({tag + ".return", {e, e + 60}, 0.8, weekdays,
                              {{0, 0, {make_action(room, dev, "switch", Value("off"))}}}});
      } else if (dev == "warmer") {
        const int s = uni(1200, 1290);
        p.routines.push_back(
            {tag + ".shower", {s, s + 60}, 0.6, {},
             {{0, 0, {make_action(room, dev, "switch", Value("on")),
                      make_action(room, dev, "level", Value(double(uni(1, 3))))}},
              {25, 45, {make_action(room, dev, "switch", Value("off"))}}}});
      } else if (dev == "switch") {
        if (has(room, "AC")) continue;  // driven by the AC chain
        const int s = uni(400, 470);
        p.routines.push_back({tag + ".morning", {s, s + 60}, 0.6, {},
                              {{0, 0, {make_action(room, dev, "switch", Value("on"))}},
                               {20, 60, {make_action(room, dev, "switch", Value("off"))}}}});
      }
    }
    if (!bedtime_steps.empty()) {
      RoutineRule bed{"bedtime", {0, 0}, 0.85, {}, {}};
      const int s = uni(1290, 1380);
      bed.window = {s, s + 40};
      for (std::size_t k = 0; k < bedtime_steps.size(); ++k) {
        bed.steps.push_back({k == 0 ? 0 : 1, k == 0 ? 0 : 6, {bedtime_steps[k]}});
      }
      p.routines.push_back(std::move(bed));
    }
    for (const auto& room : sensor_rooms) {
      p.sensors.push_back({room, "temperature"});
    }
    if (has("bedroom", "light") || has("bedroom", "AC")) {
      p.sensors.push_back({"bedroom", "humidity"});
    }
    if (!p.devices.empty() && (has("living_room", "light") || has("living_room", "camera"))) {
      p.sensors.push_back({"living_room", "presence"});
    }
    if (p.routines.empty() && p.env_rules.empty()) {
      // A lone chained switch: give it its own routine.
      const auto& d = p.devices.front();
      const int s = uni(400, 470);
      p.routines.push_back({d.room + "." + d.device + ".morning", {s, s + 60}, 0.6, {},
                            {{0, 0, {make_action(d.room, d.device, "switch", Value("on"))}},
                             {20, 60, {make_action(d.room, d.device, "switch", Value("off"))}}}});
    }
    p.validate(catalog);
    out.push_back(std::move(p));
  }
  return out;
}

Value climate_reading(const HouseholdProfile& profile, std::uint64_t seed,
                      const SensorRef& sensor, Timestamp t,
                      const DeviceCatalog& catalog) {
  auto ind = catalog.indicator_index(sensor.indicator);
  if (!ind) throw InvalidArgument("unknown indicator " + sensor.indicator);
  const auto& domain = catalog.indicators()[*ind].domain;
  const Timestamp day = day_index(t);
  const double m = minute_of_day(t);
  const double room_offset =
      2.0 * (hashed_unit(seed, fnv1a64(sensor.room), 3) - 0.5);
  if (sensor.indicator == "temperature") {
    const double x = profile.climate.base_temperature + room_offset +
                     day_offset(profile, seed, day) +
                     profile.climate.daily_amplitude *
                         std::cos(2 * std::numbers::pi * (m - 900.0) / 1440.0);
    return clamp_to_domain(x, domain);
  }
  if (sensor.indicator == "humidity") {
    const double x = profile.climate.base_humidity + 4 * room_offset -
                     2.0 * day_offset(profile, seed, day) +
                     12.0 * std::cos(2 * std::numbers::pi * (m - 300.0) / 1440.0);
    return clamp_to_domain(x, domain);
  }
  if (sensor.indicator == "presence") {
    const int wd = weekday_of(t);
    const bool home = m < 480 || m >= 1080 || wd == 0 || wd == 6;
    return Value(home ? std::string("occupied") : std::string("empty"));
  }
  // Unknown indicator kinds read as the first domain value.
  return domain.at(0);
}

History generate_household(std::uint64_t seed, const HouseholdProfile& profile,
                           int days, const DeviceCatalog& catalog,
                           Timestamp start) {
  if (days < 1) throw InvalidArgument("days must be at least 1");
  profile.validate(catalog);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uni = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };

  History h;
  h.user_id = profile.user_id;
  h.devices = profile.devices;

  // Current state of every (room, device, field).
  std::map<std::tuple<std::string, std::string, std::string>, std::string> state;
  for (const auto& d : profile.devices) {
    const auto& type = catalog.type(*catalog.type_index(d.device));
    for (const auto& f : type.fields) {
      state[{d.room, d.device, f.name}] =
          f.opposite ? f.domain.symbols[1] : f.domain.symbols[0];
    }
  }
  auto current = [&](const Action& a) -> const std::string& {
    return state[{a.room, a.device, a.field}];
  };

  struct Event {
    int minute;
    int order;
    std::vector<Action> actions;
  };
  std::vector<char> env_triggered(profile.env_rules.size(), 0);

  for (int d = 0; d < days; ++d) {
    const Timestamp day_start = start + static_cast<Timestamp>(d) * kMinutesPerDay;
    const int wd = weekday_of(day_start);
    std::vector<Event> events;
    int order = 0;
    for (const auto& r : profile.routines) {
      if (!r.active_on(wd)) continue;
      if (unit(rng) >= r.probability) continue;
      int t = uni(r.window.start, r.window.end - 1);
      for (const auto& s : r.steps) {
        t += uni(s.min_delay, s.max_delay);
        events.push_back({t, order++, s.actions});
      }
    }
    for (std::size_t e = 0; e < profile.env_rules.size(); ++e) {
      const auto& rule = profile.env_rules[e];
      const SensorRef sensor{rule.room, rule.indicator};
      for (int m = 0; m < 1440; m += 5) {
        const double x = climate_reading(profile, seed, sensor, day_start + m, catalog).number();
        if (!env_triggered[e] && x > rule.threshold) {
          env_triggered[e] = 1;
          if (unit(rng) < rule.probability) {
            events.push_back({m + uni(0, 4), order++, rule.actions});
          }
        } else if (env_triggered[e] && x < rule.release_threshold) {
          env_triggered[e] = 0;
          if (!rule.release_actions.empty() && unit(rng) < rule.probability) {
            events.push_back({m + uni(0, 4), order++, rule.release_actions});
          }
        }
      }
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
      return a.minute != b.minute ? a.minute < b.minute : a.order < b.order;
    });

    for (auto& ev : events) {
      const int minute = std::clamp(ev.minute, 0, 1439);
      std::vector<Action> actions;
      for (const auto& a : ev.actions) {
        const auto& type = catalog.type(*catalog.type_index(a.device));
        const FieldSpec* f = type.field(a.field);
        // Binary commands that would not change anything are not issued.
        if (f->opposite && current(a) == a.value.symbol()) continue;
        actions.push_back(a);
      }
      if (actions.empty()) continue;
      // A surviving non-binary setting alone (e.g. temperature without the
      // switch) is still a meaningful operation.
      for (const auto& c : profile.chains) {
        auto it = std::find(actions.begin(), actions.end(), c.after);
        if (it == actions.end()) continue;
        if (std::find(actions.begin(), actions.end(), c.before) != actions.end()) continue;
        if (current(c.before) == c.before.value.symbol()) continue;
        actions.insert(it, c.before);
      }
      if (unit(rng) < profile.noise_rate) {
        const auto& dev = profile.devices[uni(0, static_cast<int>(profile.devices.size()) - 1)];
        const auto& type = catalog.type(*catalog.type_index(dev.device));
        const auto& f = type.fields[uni(0, static_cast<int>(type.fields.size()) - 1)];
        Action noise{dev.room, dev.device, f.name, Value()};
        if (f.opposite) {
          const auto& cur = state[{dev.room, dev.device, f.name}];
          noise.value = Value(cur == f.domain.symbols[0] ? f.domain.symbols[1]
                                                         : f.domain.symbols[0]);
        } else {
          noise.value = f.domain.at(uni(0, static_cast<int>(f.domain.size()) - 1));
        }
        actions = {noise};
      }
      Operation op;
      op.timestamp = day_start + minute;
      for (const auto& s : profile.sensors) {
        op.env.push_back({s.room, s.indicator,
                          climate_reading(profile, seed, s, op.timestamp, catalog)});
      }
      op.actions = actions;
      if (unit(rng) < profile.description_rate) {
        op.description = describe(actions.front(), catalog);
      }
      for (const auto& a : actions) {
        state[{a.room, a.device, a.field}] = a.value.symbol();
      }
      h.operations.push_back(std::move(op));
    }
  }
  return h;
}

std::string device_count_bucket(std::size_t n) {
  if (n <= 5) return "1-5";
  if (n <= 10) return "6-10";
  if (n <= 20) return "11-20";
  return "20+";
}

std::vector<std::string> instance_tags(const FinetuneInstance& inst,
                                       const DeviceCatalog& catalog) {
  std::vector<std::string> tags = {device_count_bucket(inst.prompt.candidates.size())};
  std::set<std::string> categories;
  for (const auto& a : inst.target_actions) {
    categories.insert(catalog.type(*catalog.type_index(a.device)).category);
  }
  if (categories.size() == 1) tags.push_back(*categories.begin());
  return tags;
}

SplitResult make_splits(const Dataset& data, Timestamp cutoff_time,
                        const DeviceCatalog& catalog, int history_limit,
                        int test_stride) {
  if (test_stride < 1) throw InvalidArgument("test stride must be positive");
  Timestamp lo = 0, hi = 0;
  bool any = false;
  for (const auto& h : data) {
    for (const auto& op : h.operations) {
      lo = any ? std::min(lo, op.timestamp) : op.timestamp;
      hi = any ? std::max(hi, op.timestamp) : op.timestamp;
      any = true;
    }
  }
  if (!any || cutoff_time <= lo || cutoff_time > hi) {
    throw InvalidArgument("split cutoff outside the simulated range");
  }
  SplitResult out;
  std::size_t counter = 0;
  for (const auto& h : data) {
    History train{h.user_id, h.devices, {}};
    for (std::size_t i = 0; i < h.operations.size(); ++i) {
      const auto& op = h.operations[i];
      if (op.timestamp < cutoff_time) {
        train.operations.push_back(op);
        continue;
      }
      if (i == 0) continue;
      if (counter++ % static_cast<std::size_t>(test_stride) != 0) continue;
      LabeledInstance li;
      li.instance = build_finetune_instance_at(h, i, catalog, history_limit);
      li.op_index = i;
      li.tags = instance_tags(li.instance, catalog);
      out.test.instances.push_back(std::move(li));
    }
    out.train.push_back(std::move(train));
  }
  return out;
}

bool simulate_acceptance(const std::vector<Action>& recommended,
                         const HouseholdProfile& profile, Timestamp time,
                         const std::vector<EnvReading>& env,
                         const std::vector<Operation>& recent,
                         const DeviceCatalog& catalog, int conflict_minutes) {
  if (recommended.empty()) return false;
  const int minute = minute_of_day(time);
  const int wd = weekday_of(time);
  constexpr int kSlack = 30;

  auto reading = [&](const std::string& room, const std::string& indicator)
      -> std::optional<double> {
    for (const auto& e : env) {
      if (e.room == room && e.indicator == indicator && e.value.is_numeric()) {
        return e.value.number();
      }
    }
    return std::nullopt;
  };

  std::function<bool(const Action&, int)> consistent = [&](const Action& a, int depth) {
    for (const auto& r : profile.routines) {
      if (!r.active_on(wd)) continue;
      if (minute < r.window.start - kSlack || minute > r.latest_minute() + kSlack) continue;
      for (const auto& s : r.steps) {
        if (std::find(s.actions.begin(), s.actions.end(), a) != s.actions.end()) return true;
      }
    }
    for (const auto& e : profile.env_rules) {
      const auto x = reading(e.room, e.indicator);
      if (!x) continue;
      if (*x > e.threshold &&
          std::find(e.actions.begin(), e.actions.end(), a) != e.actions.end()) {
        return true;
      }
      if (*x < e.release_threshold &&
          std::find(e.release_actions.begin(), e.release_actions.end(), a) !=
              e.release_actions.end()) {
        return true;
      }
    }
    if (depth == 0) {
      for (const auto& c : profile.chains) {
        if (c.before == a && consistent(c.after, 1)) return true;
      }
    }
    return false;
  };

  // An undo the profile itself schedules: `done` in one routine step and `a`
  // in a later step, `elapsed` within the summed delays between them.
  auto scheduled_undo = [&](const Action& done, const Action& a, Timestamp elapsed) {
    for (const auto& r : profile.routines) {
      for (std::size_t k = 0; k < r.steps.size(); ++k) {
        const auto& from = r.steps[k].actions;
        if (std::find(from.begin(), from.end(), done) == from.end()) continue;
        int lo = 0, hi = 0;
        for (std::size_t m = k + 1; m < r.steps.size(); ++m) {
          lo += r.steps[m].min_delay;
          hi += r.steps[m].max_delay;
          const auto& to = r.steps[m].actions;
          if (std::find(to.begin(), to.end(), a) != to.end() && elapsed >= lo &&
              elapsed <= hi) {
            return true;
          }
        }
      }
    }
    return false;
  };

  for (const auto& a : recommended) {
    if (!validate_action(a, catalog)) return false;
    if (!consistent(a, 0)) return false;
    const auto opp = opposite_action(a, catalog);
    if (!opp) continue;
    for (const auto& op : recent) {
      if (op.timestamp > time || time - op.timestamp > conflict_minutes) continue;
      for (const auto& done : op.actions) {
        if (same_target(done, *opp) && done.value == opp->value &&
            !scheduled_undo(done, a, time - op.timestamp)) {
          return false;
        }
      }
    }
  }
  return true;
}

}  // namespace opsrec
