#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "threadloop/common.hpp"

namespace threadloop {

// Howard Hinnant's days-from-civil algorithm. Valid far beyond any plausible
// comment timestamp.
inline std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                       static_cast<unsigned>(d) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct CivilDate {
  int year;
  int month;
  int day;
};

inline CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

inline int utc_year(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / 86400;
  if (epoch_seconds % 86400 < 0) --days;
  return civil_from_days(days).year;
}

namespace detail {
inline bool parse_fixed_uint(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < len; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}
}  // namespace detail

// Parses "YYYY-MM-DDTHH:MM:SS" with optional fractional seconds (truncated)
// and optional zone: "Z", "+HH:MM", "-HH:MM", "+HHMM". A bare date
// "YYYY-MM-DD" means midnight UTC. No zone means UTC.
inline std::int64_t parse_iso8601(std::string_view s) {
  int y, mo, d;
  if (!detail::parse_fixed_uint(s, 0, 4, y) || s.size() < 10 || s[4] != '-' ||
      !detail::parse_fixed_uint(s, 5, 2, mo) || s[7] != '-' ||
      !detail::parse_fixed_uint(s, 8, 2, d)) {
    throw DataError("bad ISO-8601 timestamp: " + std::string(s));
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31) {
    throw DataError("bad ISO-8601 date fields: " + std::string(s));
  }
  std::int64_t secs = days_from_civil(y, mo, d) * 86400;
  std::size_t pos = 10;
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ' || s[pos] == 't')) {
    int hh, mm, ss;
    if (!detail::parse_fixed_uint(s, pos + 1, 2, hh) || pos + 3 >= s.size() ||
        s[pos + 3] != ':' || !detail::parse_fixed_uint(s, pos + 4, 2, mm) ||
        pos + 6 >= s.size() || s[pos + 6] != ':' ||
        !detail::parse_fixed_uint(s, pos + 7, 2, ss) || hh > 23 || mm > 59 || ss > 60) {
      throw DataError("bad ISO-8601 time fields: " + std::string(s));
    }
    secs += hh * 3600 + mm * 60 + ss;
    pos += 9;
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    }
  }
  if (pos < s.size()) {
    char z = s[pos];
    if (z == 'Z' || z == 'z') {
      ++pos;
    } else if (z == '+' || z == '-') {
      int oh, om = 0;
      if (!detail::parse_fixed_uint(s, pos + 1, 2, oh)) {
        throw DataError("bad ISO-8601 zone: " + std::string(s));
      }
      std::size_t zp = pos + 3;
      if (zp < s.size() && s[zp] == ':') ++zp;
      if (zp < s.size() && detail::parse_fixed_uint(s, zp, 2, om)) {
        zp += 2;
      } else {
        om = 0;
      }
      std::int64_t off = oh * 3600 + om * 60;
      secs += (z == '+') ? -off : off;
      pos = zp;
    }
  }
  if (pos != s.size()) throw DataError("trailing characters in timestamp: " + std::string(s));
  return secs;
}

}  // namespace threadloop
