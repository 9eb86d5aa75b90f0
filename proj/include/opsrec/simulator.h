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

// Deterministic synthetic households: rule-driven event simulation, held-out
// splits and an offline acceptance proxy.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "opsrec/catalog.h"
#include "opsrec/corpus.h"
#include "opsrec/domain.h"

namespace opsrec {

/// Minute-of-day interval [start, end), no wrap past midnight.
struct TimeWindow {
  int start = 0;
  int end = 1440;

  bool contains(int minute) const { return minute >= start && minute < end; }
};

struct RoutineStep {
  int min_delay = 0;  // minutes after the previous step
  int max_delay = 0;
  std::vector<Action> actions;
};

/// Fires at most once a day at a uniform time inside `window`.
struct RoutineRule {
  std::string name;
  TimeWindow window;
  double probability = 1.0;
  std::vector<int> weekdays;  // 0 = Sunday; empty means every day
  std::vector<RoutineStep> steps;

  bool active_on(int weekday) const;
  /// Latest minute a step of this routine can land on.
  int latest_minute() const;
};

/// Reacts when a reading rises above `threshold`; releases when it falls
/// below `release_threshold`.
struct EnvRule {
  std::string name;
  std::string room;
  std::string indicator;
  double threshold = 0;
  double probability = 1.0;
  std::vector<Action> actions;
  double release_threshold = 0;
  std::vector<Action> release_actions;
};

/// `before` is inserted ahead of `after` whenever `after` runs while
/// `before`'s device is not already in that state.
struct ChainRule {
  Action before;
  Action after;
};

struct ClimateProfile {
  double base_temperature = 26;
  double daily_amplitude = 5;
  double day_jitter = 1.5;
  double base_humidity = 55;
};

struct SensorRef {
  std::string room;
  std::string indicator;
};

struct HouseholdProfile {
  std::string user_id;
  std::vector<DeviceRef> devices;
  std::vector<SensorRef> sensors;
  ClimateProfile climate;
  double noise_rate = 0.1;
  double description_rate = 0.7;
  std::vector<RoutineRule> routines;
  std::vector<EnvRule> env_rules;
  std::vector<ChainRule> chains;

  nlohmann::json to_json() const;
  static HouseholdProfile from_json(const nlohmann::json& j);
  /// Throws InvalidArgument naming the first problem.
  void validate(const DeviceCatalog& catalog) const;
};

struct PopulationConfig {
  int households = 50;
  int days = 35;
  double noise_rate = 0.1;
  /// First simulated day (minutes since epoch, midnight).
  Timestamp start = 0;

  static Timestamp default_start();
};

/// Samples household profiles covering every device-count bucket.
std::vector<HouseholdProfile> generate_profiles(const DeviceCatalog& catalog,
                                                const PopulationConfig& cfg,
                                                std::uint64_t seed);

/// Indoor climate reading of a household at time `t` (bucketed).
Value climate_reading(const HouseholdProfile& profile, std::uint64_t seed,
                      const SensorRef& sensor, Timestamp t,
                      const DeviceCatalog& catalog);

/// Minute-resolution simulation of one household for `days` days starting
/// at `start`. Deterministic per (seed, profile, days, start).
History generate_household(std::uint64_t seed, const HouseholdProfile& profile,
                           int days, const DeviceCatalog& catalog,
                           Timestamp start = PopulationConfig::default_start());

struct LabeledInstance {
  FinetuneInstance instance;
  std::size_t op_index = 0;
  std::vector<std::string> tags;
};

struct LabeledSplit {
  std::vector<LabeledInstance> instances;
};

/// Device-count tags as reported in result tables.
std::string device_count_bucket(std::size_t device_count);
std::vector<std::string> instance_tags(const FinetuneInstance& inst,
                                       const DeviceCatalog& catalog);

struct SplitResult {
  Dataset train;
  LabeledSplit test;
};

/// Operations before `cutoff_time` form the training histories; every later
/// operation becomes one labeled test instance (history up to it as
/// context). Throws when the cutoff leaves either side empty.
SplitResult make_splits(const Dataset& data, Timestamp cutoff_time,
                        const DeviceCatalog& catalog, int history_limit = 20,
                        int test_stride = 1);

/// Offline acceptance proxy: every recommended action must match a profile
/// rule at `time` (routine window or live env trigger) and must not invert
/// something the user did in the preceding `conflict_minutes`, unless a
/// routine schedules that inversion as a later step.
bool simulate_acceptance(const std::vector<Action>& recommended,
                         const HouseholdProfile& profile, Timestamp time,
                         const std::vector<EnvReading>& env,
                         const std::vector<Operation>& recent,
                         const DeviceCatalog& catalog,
                         int conflict_minutes = 10);

}  // namespace opsrec
