#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "units.hpp"

namespace homdip {

/// One detuning point of a wavelength scan.
struct ScanPoint {
  double delta_lambda = 0.0;         ///< m
  std::uint64_t coincidences = 0;    ///< same-slot, after post-selection
  std::array<std::uint64_t, 2> singles{0, 0};
  double accidentals = 0.0;          ///< mean cross-slot coincidences per shift
  std::uint64_t integration = 0;     ///< slots
};

struct DipScan {
  std::vector<ScanPoint> points;
  double lambda0 = 1550 * units::nm;
  nlohmann::json provenance = nlohmann::json::object();

  /// Fitting needs at least five points on a strictly increasing axis.
  void validate() const {
    if (points.size() < 5) throw ConfigError("scan needs at least 5 points");
    if (!(lambda0 > 0.0)) throw ConfigError("lambda0 must be > 0");
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (!(points[i].delta_lambda > points[i - 1].delta_lambda)) {
        throw ConfigError("detunings must be strictly increasing (point " + std::to_string(i) + ")");
      }
    }
  }
};

} // namespace homdip
