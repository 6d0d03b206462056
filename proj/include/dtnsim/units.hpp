#pragma once

#include <charconv>
#include <cstdio>
#include <cmath>
#include <stdexcept>
#include <string>
#include <system_error>

namespace dtnsim {

inline constexpr double kMetersPerSecondPerMph = 0.44704;

inline double mph_to_mps(double mph) {
  if (!(mph >= 0.0) || !std::isfinite(mph))
    throw std::invalid_argument("speed in mph must be a finite non-negative value");
  return mph * kMetersPerSecondPerMph;
}

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return std::to_string(v);
  return std::string(buf, end);
}

inline std::string format_fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace dtnsim
