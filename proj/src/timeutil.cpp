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

#include "opsrec/timeutil.h"

#include <chrono>

namespace opsrec {

namespace chr = std::chrono;

CivilTime to_civil(Timestamp t) {
  const chr::sys_days day{chr::days{day_index(t)}};
  const chr::year_month_day ymd{day};
  const int mod = minute_of_day(t);
  CivilTime c;
  c.year = static_cast<int>(ymd.year());
  c.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  c.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
  c.weekday = static_cast<int>(chr::weekday{day}.c_encoding());
  c.hour = mod / 60;
  c.minute = mod % 60;
  return c;
}

Timestamp from_civil(int year, int month, int day, int hour, int minute) {
  const chr::year_month_day ymd{chr::year{year},
                                chr::month{static_cast<unsigned>(month)},
                                chr::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour < 0 || hour > 23 || minute < 0 || minute > 59) {
    throw InvalidArgument("invalid civil time");
  }
  const auto days = chr::sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * kMinutesPerDay + hour * 60 + minute;
}

int weekday_of(Timestamp t) {
  const chr::sys_days day{chr::days{day_index(t)}};
  return static_cast<int>(chr::weekday{day}.c_encoding());
}

}  // namespace opsrec
