#include "capfirm/timeutil.hpp"

#include "capfirm/errors.hpp"

#include <charconv>
#include <cstdio>

namespace capfirm {

namespace {

int read_int(std::string_view s, std::size_t pos, std::size_t len, std::string_view whole) {
  int value = 0;
  if (pos + len > s.size()) throw DataError("bad timestamp '" + std::string(whole) + "'");
  auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, value);
  if (ec != std::errc() || ptr != s.data() + pos + len)
    throw DataError("bad timestamp '" + std::string(whole) + "'");
  return value;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  std::string_view s = text;
  while (!s.empty() && (s.back() == 'Z' || s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':')
    throw DataError("bad timestamp '" + std::string(text) + "'");
  const int y = read_int(s, 0, 4, text);
  const int mo = read_int(s, 5, 2, text);
  const int d = read_int(s, 8, 2, text);
  const int hh = read_int(s, 11, 2, text);
  const int mm = read_int(s, 14, 2, text);
  int ss = 0;
  if (s.size() > 16) {
    if (s.size() != 19 || s[16] != ':') throw DataError("bad timestamp '" + std::string(text) + "'");
    ss = read_int(s, 17, 2, text);
  }
  const year_month_day ymd{year{y}, month{unsigned(mo)}, day{unsigned(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60)
    throw DataError("bad timestamp '" + std::string(text) + "'");
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day = floor<days>(ts);
  const year_month_day ymd{day};
  const long sod = (ts - day).count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), sod / 3600, (sod / 60) % 60, sod % 60);
  return buf;
}

std::string format_date(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd{day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()));
  return buf;
}

std::chrono::sys_days day_of(Timestamp ts) { return std::chrono::floor<std::chrono::days>(ts); }

long seconds_of_day(Timestamp ts) { return (ts - day_of(ts)).count(); }

int day_of_year(Timestamp ts) {
  using namespace std::chrono;
  const year_month_day ymd{day_of(ts)};
  const sys_days jan1{ymd.year() / January / 1};
  return int((day_of(ts) - jan1).count()) + 1;
}

}  // namespace capfirm
