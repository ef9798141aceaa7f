#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace reef {

// UTC instant with microsecond resolution.
using Timestamp = std::chrono::sys_time<std::chrono::microseconds>;

// Accepts "YYYY-MM-DDTHH:MM:SS[.ffffff][Z]" and "YYYY-MM-DD" (midnight).
std::optional<Timestamp> parse_iso8601(std::string_view text);

// Compact recorder form "YYYYMMDDTHHMMSSZ".
std::optional<Timestamp> parse_compact_timestamp(std::string_view text);

// "YYYY-MM-DDTHH:MM:SSZ", with ".ffffff" only when the sub-second part is non-zero.
std::string format_iso8601(Timestamp t);

// "YYYY-MM-DD".
std::string format_date(std::chrono::sys_days d);

std::chrono::sys_days day_of(Timestamp t);

// Hour of the UTC day in [0, 24).
int hour_of_day(Timestamp t);

// Minute of the UTC day in [0, 1440).
int minute_of_day(Timestamp t);

// 0-based day of year, 0 = January 1.
int day_of_year(std::chrono::sys_days d);

// 1..12
unsigned month_of(std::chrono::sys_days d);

Timestamp offset_seconds(Timestamp t, double seconds);

// Fractional days between two instants (b - a).
double days_between(Timestamp a, Timestamp b);

}  // namespace reef
