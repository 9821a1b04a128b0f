// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/time_util.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace recip {

std::int64_t days_from_civil(int y, unsigned m, unsigned d) noexcept {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);             // [0, 399]
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;   // [0, 365]
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;            // [0, 146096]
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) noexcept {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = static_cast<int>(yy + (m <= 2));
}

namespace {

bool parse_fixed_uint(std::string_view s, std::size_t pos, std::size_t len, unsigned& out) noexcept {
  if (pos + len > s.size()) return false;
  unsigned v = 0;
  for (std::size_t i = 0; i < len; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<unsigned>(c - '0');
  }
  out = v;
  return true;
}

constexpr std::array<unsigned, 12> kDaysInMonth = {31, 28, 31, 30, 31, 30,
                                                   31, 31, 30, 31, 30, 31};

bool is_leap(unsigned y) noexcept {
  return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

}  // namespace

std::optional<std::int64_t> parse_iso8601_utc(std::string_view s) noexcept {
  // YYYY-MM-DDTHH:MM:SS with optional .fraction, terminated by 'Z'.
  unsigned yr, mo, dy, hh, mm, ss;
  if (s.size() < 20) return std::nullopt;
  if (!parse_fixed_uint(s, 0, 4, yr) || s[4] != '-' || !parse_fixed_uint(s, 5, 2, mo) ||
      s[7] != '-' || !parse_fixed_uint(s, 8, 2, dy) || s[10] != 'T' ||
      !parse_fixed_uint(s, 11, 2, hh) || s[13] != ':' || !parse_fixed_uint(s, 14, 2, mm) ||
      s[16] != ':' || !parse_fixed_uint(s, 17, 2, ss)) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      ++pos;
      ++digits;
    }
    if (digits == 0) return std::nullopt;
  }
  if (pos >= s.size() || s[pos] != 'Z' || pos + 1 != s.size()) return std::nullopt;

  if (mo < 1 || mo > 12) return std::nullopt;
  unsigned dmax = kDaysInMonth[mo - 1];
  if (mo == 2 && is_leap(yr)) dmax = 29;
  if (dy < 1 || dy > dmax) return std::nullopt;
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;

  const std::int64_t days = days_from_civil(static_cast<int>(yr), mo, dy);
  return days * kSecondsPerDay + hh * kSecondsPerHour + mm * 60 + ss;
}

std::string format_iso8601_utc(std::int64_t t) {
  std::int64_t days = t / kSecondsPerDay;
  std::int64_t rem = t % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    --days;
  }
  int y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  const unsigned hh = static_cast<unsigned>(rem / kSecondsPerHour);
  const unsigned mm = static_cast<unsigned>((rem / 60) % 60);
  const unsigned ss = static_cast<unsigned>(rem % 60);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02u:%02u:%02uZ", y, m, d, hh, mm, ss);
  return std::string(buf);
}

int utc_year(std::int64_t t) noexcept {
  std::int64_t days = t / kSecondsPerDay;
  if (t % kSecondsPerDay < 0) --days;
  int y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  return y;
}

}  // namespace recip
