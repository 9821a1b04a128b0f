// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace recip {

inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;

// Proleptic-Gregorian civil-date helpers (Howard Hinnant's algorithm).
// Days are counted from 1970-01-01.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) noexcept;
void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) noexcept;

// Strict "YYYY-MM-DDTHH:MM:SS[.fff...]Z" -> seconds since the Unix epoch.
// Fractional seconds are accepted and truncated toward negative infinity.
// Returns nullopt on any malformed input (wrong separators, out-of-range
// fields, missing 'Z', trailing garbage).
std::optional<std::int64_t> parse_iso8601_utc(std::string_view s) noexcept;

// Seconds since the Unix epoch -> "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601_utc(std::int64_t t);

// Calendar year (UTC) containing the instant.
int utc_year(std::int64_t t) noexcept;

}  // namespace recip
