#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include "error.hpp"

namespace homdip {

namespace constants {
inline constexpr double c = 299792458.0; // m/s, exact
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;
} // namespace constants

namespace units {
inline constexpr double s = 1.0;
inline constexpr double ms = 1e-3;
inline constexpr double us = 1e-6;
inline constexpr double ns = 1e-9;
inline constexpr double ps = 1e-12;
inline constexpr double fs = 1e-15;
inline constexpr double m = 1.0;
inline constexpr double nm = 1e-9;
inline constexpr double pm = 1e-12;
} // namespace units

/// Seconds to integer femtoseconds, rounded to nearest.
inline std::int64_t to_femtoseconds(double seconds) {
  return static_cast<std::int64_t>(std::llround(seconds / units::fs));
}

namespace detail {
struct UnitScale {
  std::string_view name;
  double scale;
};

inline double parse_quantity(std::string_view text, std::initializer_list<UnitScale> table, const char* what) {
  auto trim = [](std::string_view v) {
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    return v;
  };
  text = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr == text.data()) {
    throw ConfigError(std::string("cannot parse ") + what + " '" + std::string(text) + "'");
  }
  const std::string_view suffix = trim(std::string_view(ptr, static_cast<std::size_t>(text.data() + text.size() - ptr)));
  if (suffix.empty()) return value;
  for (const auto& u : table) {
    if (suffix == u.name) return value * u.scale;
  }
  throw ConfigError(std::string("unknown ") + what + " unit '" + std::string(suffix) + "'");
}
} // namespace detail

/// Parses a duration such as "175ps", "1.5 ns" or "2e-9". A bare number is
/// taken as seconds.
inline double parse_duration(std::string_view text) {
  return detail::parse_quantity(
      text, {{"s", units::s}, {"ms", units::ms}, {"us", units::us}, {"ns", units::ns}, {"ps", units::ps}, {"fs", units::fs}},
      "duration");
}

/// Parses a length such as "-60pm" or "1550 nm". A bare number is metres.
inline double parse_length(std::string_view text) {
  return detail::parse_quantity(
      text, {{"m", units::m}, {"um", 1e-6}, {"nm", units::nm}, {"pm", units::pm}}, "length");
}

} // namespace homdip
