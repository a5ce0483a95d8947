#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace capfirm {

using Timestamp = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DD[T| ]HH:MM[:SS][Z]"; all times are UTC.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);
std::string format_date(std::chrono::sys_days day);

std::chrono::sys_days day_of(Timestamp ts);
/// Seconds elapsed since 00:00 UTC of the same day.
long seconds_of_day(Timestamp ts);
/// 1-based ordinal day within the year.
int day_of_year(Timestamp ts);

}  // namespace capfirm
