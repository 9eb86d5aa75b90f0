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

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "opsrec/simulator.h"
#include "test_util.h"

namespace opsrec {
namespace {

using testing::act;
using testing::at;
using testing::demo_catalog;

HouseholdProfile toy_profile() {
  HouseholdProfile p;
  p.user_id = "u0000";
  p.devices = {{"bedroom", "curtain"}, {"bedroom", "AC"}, {"bathroom", "light"}};
  p.sensors = {{"bedroom", "temperature"}};
  p.noise_rate = 0;
  RoutineRule open;
  open.name = "curtain_open";
  open.window = {360, 470};
  open.steps = {{0, 0, {act("bedroom", "curtain", "switch", "open")}}};
  RoutineRule shower;
  shower.name = "bathroom_light";
  shower.window = {400, 460};
  shower.steps = {{0, 0, {act("bathroom", "light", "switch", "on")}},
                  {3, 12, {act("bathroom", "light", "switch", "off")}}};
  p.routines = {open, shower};
  EnvRule cool;
  cool.name = "cool";
  cool.room = "bedroom";
  cool.indicator = "temperature";
  cool.threshold = 32;
  cool.actions = {act("bedroom", "AC", "switch", "on")};
  cool.release_threshold = 29;
  cool.release_actions = {act("bedroom", "AC", "switch", "off")};
  p.env_rules = {cool};
  return p;
}

std::vector<EnvReading> temperature(double t) {
  return {{"bedroom", "temperature", Value(t)}};
}

TEST(SimulatorTest, AcceptanceRejectsOffWindowRoutineAction) {
  const auto p = toy_profile();
  EXPECT_FALSE(simulate_acceptance({act("bedroom", "curtain", "switch", "open")}, p, at(0, 13, 0),
                                   temperature(25), {}, demo_catalog()));
  EXPECT_TRUE(simulate_acceptance({act("bedroom", "curtain", "switch", "open")}, p, at(0, 7, 0),
                                  temperature(25), {}, demo_catalog()));
}

TEST(SimulatorTest, AcceptanceFollowsEnvironmentRule) {
  const auto p = toy_profile();
  EXPECT_TRUE(simulate_acceptance({act("bedroom", "AC", "switch", "on")}, p, at(0, 15, 0),
                                  temperature(33), {}, demo_catalog()));
  EXPECT_FALSE(simulate_acceptance({act("bedroom", "AC", "switch", "on")}, p, at(0, 15, 0),
                                   temperature(30), {}, demo_catalog()));
}

TEST(SimulatorTest, AcceptanceRejectsRecentReversal) {
  const auto p = toy_profile();
  const Timestamp t = at(0, 15, 0);
  const std::vector<Operation> recent = {
      testing::op(t - 5, {act("bedroom", "AC", "switch", "off")})};
  EXPECT_FALSE(simulate_acceptance({act("bedroom", "AC", "switch", "on")}, p, t, temperature(33),
                                   recent, demo_catalog()));
  const std::vector<Operation> older = {
      testing::op(t - 30, {act("bedroom", "AC", "switch", "off")})};
  EXPECT_TRUE(simulate_acceptance({act("bedroom", "AC", "switch", "on")}, p, t, temperature(33),
                                  older, demo_catalog()));
}

TEST(SimulatorTest, AcceptanceAllowsRoutineScheduledUndo) {
  const auto p = toy_profile();
  const Timestamp t = at(0, 7, 20);
  const std::vector<Operation> recent = {
      testing::op(t - 5, {act("bathroom", "light", "switch", "on")})};
  EXPECT_TRUE(simulate_acceptance({act("bathroom", "light", "switch", "off")}, p, t,
                                  temperature(25), recent, demo_catalog()));
  // One minute is faster than the routine ever schedules the undo.
  const std::vector<Operation> quick = {
      testing::op(t - 1, {act("bathroom", "light", "switch", "on")})};
  EXPECT_FALSE(simulate_acceptance({act("bathroom", "light", "switch", "off")}, p, t,
                                   temperature(25), quick, demo_catalog()));
}

TEST(SimulatorTest, RoutineProbabilityConverges) {
  HouseholdProfile p;
  p.user_id = "u0000";
  p.devices = {{"bathroom", "light"}};
  p.noise_rate = 0;
  RoutineRule r;
  r.name = "r";
  r.window = {400, 460};
  r.probability = 0.3;
  r.steps = {{0, 0, {act("bathroom", "light", "switch", "on")}},
             {3, 12, {act("bathroom", "light", "switch", "off")}}};
  p.routines = {r};
  const int days = 20000;
  const History h = generate_household(3, p, days, demo_catalog());
  std::size_t fired = 0;
  for (const auto& o : h.operations) {
    fired += o.actions.front() == act("bathroom", "light", "switch", "on");
  }
  ASSERT_GE(h.operations.size(), 10000u);
  EXPECT_NEAR(static_cast<double>(fired) / days, 0.3, 0.05);
}

TEST(SimulatorTest, CurtainActionsMostlyInsideRoutineWindows) {
  const auto pop = testing::simulate(11, 12, 28);
  std::size_t total = 0, inside = 0;
  for (std::size_t h = 0; h < pop.data.size(); ++h) {
    for (const auto& o : pop.data[h].operations) {
      for (const auto& a : o.actions) {
        if (a.device != "curtain") continue;
        ++total;
        const int m = minute_of_day(o.timestamp);
        for (const auto& r : pop.profiles[h].routines) {
          const bool has = std::any_of(r.steps.begin(), r.steps.end(), [&](const RoutineStep& s) {
            return std::find(s.actions.begin(), s.actions.end(), a) != s.actions.end();
          });
          if (has && m >= r.window.start && m <= r.latest_minute()) {
            ++inside;
            break;
          }
        }
      }
    }
  }
  ASSERT_GT(total, 100u);
  EXPECT_GE(static_cast<double>(inside) / total, 0.8);
}

TEST(SimulatorTest, ChainedActionNeverPrecedesItsPrerequisite) {
  PopulationConfig pc;
  pc.households = 16;
  auto profiles = generate_profiles(demo_catalog(), pc, 21);
  std::size_t checked = 0;
  for (std::size_t h = 0; h < profiles.size(); ++h) {
    auto& p = profiles[h];
    p.noise_rate = 0;
    if (p.chains.empty()) continue;
    const History hist = generate_household(mix_seed(21, h), p, 28, demo_catalog());
    std::map<std::tuple<std::string, std::string, std::string>, std::string> state;
    for (const auto& o : hist.operations) {
      for (const auto& a : o.actions) {
        for (const auto& c : p.chains) {
          if (!(a == c.after)) continue;
          ++checked;
          const auto key = std::make_tuple(c.before.room, c.before.device, c.before.field);
          EXPECT_EQ(state[key], c.before.value.symbol())
              << p.user_id << " " << to_string(a);
        }
        state[{a.room, a.device, a.field}] = a.value.symbol();
      }
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(SimulatorTest, DeviceCountAndCategoryTags) {
  EXPECT_EQ(device_count_bucket(5), "1-5");
  EXPECT_EQ(device_count_bucket(7), "6-10");
  EXPECT_EQ(device_count_bucket(20), "11-20");
  EXPECT_EQ(device_count_bucket(26), "20+");
  FinetuneInstance inst;
  inst.prompt.candidates.assign(7, DeviceRef{"bedroom", "light"});
  inst.target_actions = {act("bedroom", "light", "switch", "on")};
  EXPECT_EQ(instance_tags(inst, demo_catalog()), (std::vector<std::string>{"6-10", "Light"}));
}

TEST(SimulatorTest, ProfilesCoverAllDeviceCountBuckets) {
  PopulationConfig pc;
  pc.households = 8;
  std::set<std::string> buckets;
  for (const auto& p : generate_profiles(demo_catalog(), pc, 4)) {
    buckets.insert(device_count_bucket(p.devices.size()));
  }
  EXPECT_EQ(buckets, (std::set<std::string>{"1-5", "6-10", "11-20", "20+"}));
}

TEST(SimulatorTest, SplitSeparatesTrainAndTestInTime) {
  const auto pop = testing::simulate(2, 6, 21);
  const Timestamp cutoff = PopulationConfig::default_start() + 14 * kMinutesPerDay;
  const auto split = make_splits(pop.data, cutoff, demo_catalog());
  Timestamp last_train = 0;
  for (const auto& h : split.train) {
    for (const auto& o : h.operations) last_train = std::max(last_train, o.timestamp);
  }
  ASSERT_FALSE(split.test.instances.empty());
  for (const auto& li : split.test.instances) {
    EXPECT_GT(li.instance.prompt.time, last_train);
    EXPECT_GE(li.instance.prompt.time, cutoff);
  }
  EXPECT_THROW(make_splits(pop.data, 0, demo_catalog()), InvalidArgument);
}

TEST(SimulatorTest, GenerationIsDeterministicAndValid) {
  const auto a = testing::simulate(9, 4, 10);
  const auto b = testing::simulate(9, 4, 10);
  for (std::size_t h = 0; h < a.data.size(); ++h) {
    EXPECT_EQ(a.data[h].operations, b.data[h].operations);
    EXPECT_TRUE(is_time_ordered(a.data[h]));
    for (const auto& o : a.data[h].operations) {
      EXPECT_TRUE(validate_operation(o, demo_catalog()));
    }
  }
}

TEST(SimulatorTest, ProfileJsonRoundTrip) {
  const auto pop = testing::simulate(9, 2, 1);
  for (const auto& p : pop.profiles) {
    EXPECT_EQ(HouseholdProfile::from_json(p.to_json()).to_json(), p.to_json());
  }
}

TEST(SimulatorTest, ProfileValidationRejectsEmptyProfile) {
  HouseholdProfile p;
  p.user_id = "u0000";
  p.devices = {{"bedroom", "AC"}};
  EXPECT_THROW(p.validate(demo_catalog()), InvalidArgument);
}

}  // namespace
}  // namespace opsrec
