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

#include <array>
#include <string_view>

#include "opsrec/domain.h"

namespace opsrec {

inline constexpr Timestamp kMinutesPerDay = 1440;

struct CivilTime {
  int year = 1970;
  int month = 1;
  int day = 1;
  int weekday = 4;  // 0 = Sunday
  int hour = 0;
  int minute = 0;
};

inline constexpr std::array<std::string_view, 7> kWeekdayNames = {
    "Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};

CivilTime to_civil(Timestamp t);
/// Throws InvalidArgument for impossible dates.
Timestamp from_civil(int year, int month, int day, int hour, int minute);

inline int minute_of_day(Timestamp t) {
  return static_cast<int>(((t % kMinutesPerDay) + kMinutesPerDay) %
                          kMinutesPerDay);
}
inline int hour_of_day(Timestamp t) { return minute_of_day(t) / 60; }
inline Timestamp day_index(Timestamp t) {
  return (t >= 0 ? t : t - kMinutesPerDay + 1) / kMinutesPerDay;
}
int weekday_of(Timestamp t);

/// Distance between two minutes-of-day on the 24h circle.
inline int circular_minute_distance(int a, int b) {
  int d = a > b ? a - b : b - a;
  return d > 720 ? 1440 - d : d;
}

}  // namespace opsrec
