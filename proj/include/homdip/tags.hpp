/**
 * @file tags.hpp
 * @brief Time-tag streams and the correlation primitives that run on them.
 *
 * Tag times are unsigned integers in units of the stream resolution. All
 * comparisons against windows and slot periods happen in integer
 * femtoseconds so that cuts are exact and repeatable.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "units.hpp"

namespace homdip::tags {

struct TimeTag {
  std::uint64_t time = 0; ///< in resolution units
  std::uint8_t channel = 0;

  friend constexpr auto operator<=>(const TimeTag&, const TimeTag&) = default;
};

inline constexpr double kDefaultResolution = 32 * units::ps;

struct TimeTagStream {
  double resolution = kDefaultResolution; ///< seconds per time unit
  std::vector<TimeTag> tags;
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t size() const noexcept { return tags.size(); }
  bool empty() const noexcept { return tags.empty(); }

  std::int64_t resolution_fs() const { return to_femtoseconds(resolution); }

  std::size_t count(std::uint8_t channel) const {
    return static_cast<std::size_t>(
        std::count_if(tags.begin(), tags.end(), [channel](const TimeTag& t) { return t.channel == channel; }));
  }

  bool is_sorted() const { return std::is_sorted(tags.begin(), tags.end()); }

  /// Throws FormatError::unsorted if tags are out of (time, channel) order.
  void require_sorted(const std::string& context = "stream") const {
    auto it = std::is_sorted_until(tags.begin(), tags.end());
    if (it != tags.end()) {
      throw FormatError(FormatError::Kind::unsorted,
                        context + ": tags out of order at index " + std::to_string(it - tags.begin()));
    }
  }

  /// Run length recorded by the producer, if any.
  std::optional<double> recorded_duration() const {
    if (metadata.is_object() && metadata.contains("duration_s") && metadata["duration_s"].is_number()) {
      return metadata["duration_s"].get<double>();
    }
    return std::nullopt;
  }
};

/// Merges two sorted streams into one, ties ordered by channel.
inline TimeTagStream merge(const TimeTagStream& a, const TimeTagStream& b) {
  if (a.resolution_fs() != b.resolution_fs()) throw ConfigError("cannot merge streams with different resolutions");
  TimeTagStream out;
  out.resolution = a.resolution;
  out.metadata = a.metadata;
  out.tags.resize(a.size() + b.size());
  std::merge(a.tags.begin(), a.tags.end(), b.tags.begin(), b.tags.end(), out.tags.begin());
  return out;
}

/// Counts of t2 - t1 in bins of `bin_width` centred on k * bin_width for
/// k in [-half_bins, half_bins].
struct Histogram {
  double bin_width = 0.0;
  std::int64_t half_bins = 0;
  std::vector<std::uint64_t> counts;

  double center(std::size_t i) const { return (static_cast<std::int64_t>(i) - half_bins) * bin_width; }

  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (auto c : counts) n += c;
    return n;
  }
};

struct CoincidenceOptions {
  double window = 580 * units::ps;
  /// Histogram half-range and bin; the histogram is skipped when range is 0.
  double histogram_range = 5 * 580 * units::ps;
  double histogram_bin = 32 * units::ps;
  /// Subtracted from every s2 time before pairing; a multiple of the slot
  /// period gives cross-slot (accidental) coincidences.
  double offset = 0.0;
  /// Run length for the accidental estimate. Falls back to the streams'
  /// recorded duration, then to their time span.
  std::optional<double> duration;
};

struct CoincidenceResult {
  double window = 0.0;
  std::uint64_t count = 0;
  std::array<std::uint64_t, 2> singles{0, 0};
  Histogram histogram;
  double duration = 0.0;
  double accidental_estimate = 0.0;
};

namespace detail {

inline std::int64_t common_resolution_fs(const TimeTagStream& s1, const TimeTagStream& s2) {
  const auto r1 = s1.resolution_fs();
  const auto r2 = s2.resolution_fs();
  if (r1 != r2) throw ConfigError("streams have different resolutions");
  if (r1 <= 0) throw ConfigError("stream resolution must be > 0");
  return r1;
}

inline std::vector<std::int64_t> shifted_times(const TimeTagStream& s, std::int64_t shift) {
  std::vector<std::int64_t> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = static_cast<std::int64_t>(s.tags[i].time) - shift;
  return out;
}

/// Greedy nearest-partner pairing with consumption. Tags of `a` are visited
/// in order; each takes the closest unused tag of `b` within +-w, the earlier
/// one on a tie. Unused tags of `b` before the current time live in `left`;
/// used tags at or after it always form a prefix, so `right` only advances.
inline std::uint64_t greedy_pairs(std::span<const std::int64_t> a, std::span<const std::int64_t> b, std::int64_t w) {
  std::vector<std::int64_t> left;
  std::size_t head = 0;
  std::size_t right = 0;
  std::uint64_t count = 0;
  for (const std::int64_t t : a) {
    while (right < b.size() && b[right] < t) left.push_back(b[right++]);
    while (head < left.size() && left[head] < t - w) ++head;
    if (head == left.size()) {
      left.clear();
      head = 0;
    }
    const bool have_left = head < left.size();
    const bool have_right = right < b.size() && b[right] - t <= w;
    if (have_left && (!have_right || t - left.back() <= b[right] - t)) {
      left.pop_back();
      ++count;
    } else if (have_right) {
      ++right;
      ++count;
    }
  }
  return count;
}

inline std::int64_t round_div(std::int64_t num, std::int64_t den) {
  // symmetric: halves round away from zero
  const std::int64_t q = (2 * std::abs(num) + den) / (2 * den);
  return num < 0 ? -q : q;
}

inline Histogram difference_histogram(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                                      std::int64_t res_fs, double bin, double range) {
  if (!(bin > 0.0)) throw ConfigError("histogram bin must be > 0");
  if (!(range >= bin)) throw ConfigError("histogram range must be >= bin");
  const std::int64_t bin_fs = to_femtoseconds(bin);
  const std::int64_t range_fs = to_femtoseconds(range);
  if (bin_fs <= 0) throw ConfigError("histogram bin below 1 fs");
  Histogram h;
  h.bin_width = bin;
  h.half_bins = round_div(range_fs, bin_fs);
  h.counts.assign(static_cast<std::size_t>(2 * h.half_bins + 1), 0);
  const std::int64_t range_units = range_fs / res_fs;
  std::size_t lo = 0;
  for (const std::int64_t t : a) {
    while (lo < b.size() && b[lo] < t - range_units) ++lo;
    for (std::size_t j = lo; j < b.size() && b[j] <= t + range_units; ++j) {
      const std::int64_t k = round_div((b[j] - t) * res_fs, bin_fs);
      ++h.counts[static_cast<std::size_t>(k + h.half_bins)];
    }
  }
  return h;
}

inline double stream_duration(const TimeTagStream& s1, const TimeTagStream& s2) {
  if (auto d = s1.recorded_duration()) return *d;
  if (auto d = s2.recorded_duration()) return *d;
  if (s1.empty() && s2.empty()) return 0.0;
  std::uint64_t lo = UINT64_MAX, hi = 0;
  for (const auto* s : {&s1, &s2}) {
    if (s->empty()) continue;
    lo = std::min(lo, s->tags.front().time);
    hi = std::max(hi, s->tags.back().time);
  }
  return static_cast<double>(hi - lo + 1) * s1.resolution;
}

} // namespace detail

/// Coincidences between two streams within +-window under greedy
/// nearest-partner pairing (each tag is used at most once), plus the
/// histogram of all pair differences t2 - t1 and the accidental estimate
/// r1 r2 (2 window) T.
inline CoincidenceResult count_coincidences(const TimeTagStream& s1, const TimeTagStream& s2,
                                            const CoincidenceOptions& opt) {
  const std::int64_t res_fs = detail::common_resolution_fs(s1, s2);
  if (!(opt.window >= 0.0)) throw ConfigError("coincidence window must be >= 0");
  s1.require_sorted("first stream");
  s2.require_sorted("second stream");

  const std::int64_t shift = detail::round_div(to_femtoseconds(opt.offset), res_fs);
  const auto a = detail::shifted_times(s1, 0);
  const auto b = detail::shifted_times(s2, shift);
  const std::int64_t w = to_femtoseconds(opt.window) / res_fs;

  CoincidenceResult r;
  r.window = opt.window;
  r.count = detail::greedy_pairs(a, b, w);
  r.singles = {s1.size(), s2.size()};
  if (opt.histogram_range > 0.0) {
    r.histogram = detail::difference_histogram(a, b, res_fs, opt.histogram_bin, opt.histogram_range);
  }
  r.duration = opt.duration ? *opt.duration : detail::stream_duration(s1, s2);
  if (r.duration > 0.0) {
    const double r1 = static_cast<double>(r.singles[0]) / r.duration;
    const double r2 = static_cast<double>(r.singles[1]) / r.duration;
    r.accidental_estimate = r1 * r2 * 2.0 * opt.window * r.duration;
  }
  return r;
}

inline CoincidenceResult count_coincidences(const TimeTagStream& s1, const TimeTagStream& s2, double window) {
  CoincidenceOptions opt;
  opt.window = window;
  opt.histogram_range = std::max(window, 32 * units::ps);
  opt.histogram_bin = std::min(opt.histogram_range, 32 * units::ps);
  return count_coincidences(s1, s2, opt);
}

/// Histogram of t2 - t1 over every pair with |t2 - t1| <= range.
inline Histogram correlation_histogram(const TimeTagStream& s1, const TimeTagStream& s2, double bin, double range) {
  const std::int64_t res_fs = detail::common_resolution_fs(s1, s2);
  s1.require_sorted("first stream");
  s2.require_sorted("second stream");
  const auto a = detail::shifted_times(s1, 0);
  const auto b = detail::shifted_times(s2, 0);
  return detail::difference_histogram(a, b, res_fs, bin, range);
}

namespace detail {
inline std::int64_t phase_fs(std::uint64_t time, std::int64_t res_fs, std::int64_t period_fs) {
  const unsigned __int128 t = static_cast<unsigned __int128>(time) * static_cast<unsigned __int128>(res_fs);
  return static_cast<std::int64_t>(t % static_cast<unsigned __int128>(period_fs));
}
} // namespace detail

/// Keeps tags whose phase within the slot lies within +-width/2 of
/// `center` (circularly). The result is a subsequence of the input.
inline TimeTagStream post_select(const TimeTagStream& stream, double slot_period, double center, double width) {
  if (!(width > 0.0) || !(slot_period > width)) throw ConfigError("post-selection needs slot_period > width > 0");
  const std::int64_t period_fs = to_femtoseconds(slot_period);
  const std::int64_t res_fs = stream.resolution_fs();
  std::int64_t center_fs = to_femtoseconds(center) % period_fs;
  if (center_fs < 0) center_fs += period_fs;
  const std::int64_t width_fs = to_femtoseconds(width);

  TimeTagStream out;
  out.resolution = stream.resolution;
  out.metadata = stream.metadata;
  out.tags.reserve(stream.size() / 4);
  for (const auto& tag : stream.tags) {
    std::int64_t d = std::abs(detail::phase_fs(tag.time, res_fs, period_fs) - center_fs);
    d = std::min(d, period_fs - d);
    if (2 * d <= width_fs) out.tags.push_back(tag);
  }
  out.metadata["post_select"] = {
      {"slot_period_s", slot_period}, {"window_center_s", center}, {"window_width_s", width}};
  return out;
}

/// Tags folded modulo the slot period.
struct PhaseHistogram {
  double slot_period = 0.0;
  double bin_width = 0.0;
  std::vector<std::uint64_t> counts;

  double bin_center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * bin_width; }
};

inline PhaseHistogram slot_phase_histogram(const TimeTagStream& stream, double slot_period, double bin) {
  if (!(bin > 0.0) || !(slot_period >= bin)) throw ConfigError("phase histogram needs slot_period >= bin > 0");
  const auto n = static_cast<std::int64_t>(std::llround(slot_period / bin));
  if (std::abs(static_cast<double>(n) * bin - slot_period) > 1e-6 * slot_period) {
    throw ConfigError("phase histogram bin must divide the slot period");
  }
  const std::int64_t period_fs = to_femtoseconds(slot_period);
  const std::int64_t res_fs = stream.resolution_fs();
  PhaseHistogram h;
  h.slot_period = slot_period;
  h.bin_width = slot_period / static_cast<double>(n);
  h.counts.assign(static_cast<std::size_t>(n), 0);
  for (const auto& tag : stream.tags) {
    const auto p = static_cast<__int128>(detail::phase_fs(tag.time, res_fs, period_fs));
    ++h.counts[static_cast<std::size_t>(p * n / period_fs)];
  }
  return h;
}

/// Peak location and width of the pulse in a folded histogram.
struct PulseShape {
  double center = 0.0;   ///< s, phase within the slot
  double fwhm = 0.0;     ///< s
  double baseline = 0.0; ///< counts per bin from uncorrelated tags
  double peak = 0.0;     ///< counts per bin above baseline
};

/// Baseline is the median bin (the pulse occupies a small part of the slot);
/// FWHM comes from linearly interpolated half-maximum crossings around the
/// highest bin; the centre is the baseline-subtracted centroid within one
/// FWHM of the peak.
inline PulseShape estimate_pulse_shape(const PhaseHistogram& h) {
  const std::size_t n = h.counts.size();
  if (n < 3) throw NumericalError("phase histogram too short");
  std::vector<double> v(h.counts.begin(), h.counts.end());
  std::vector<double> sorted = v;
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  const double base = sorted[n / 2];
  const auto peak_it = std::max_element(v.begin(), v.end());
  const auto ipk = static_cast<std::int64_t>(peak_it - v.begin());
  const double height = *peak_it - base;
  if (!(height > 0.0)) throw NumericalError("no pulse above baseline");

  auto at = [&](std::int64_t k) {
    const auto m = static_cast<std::int64_t>(n);
    return v[static_cast<std::size_t>(((k % m) + m) % m)] - base;
  };
  const double half = 0.5 * height;
  auto crossing = [&](int dir) {
    for (std::int64_t k = 1; k < static_cast<std::int64_t>(n) / 2; ++k) {
      const double inner = at(ipk + dir * (k - 1));
      const double outer = at(ipk + dir * k);
      if (outer <= half) return static_cast<double>(k - 1) + (inner - half) / (inner - outer);
    }
    throw NumericalError("pulse does not fall to half maximum within the slot");
  };
  const double right = crossing(+1);
  const double left = crossing(-1);

  PulseShape shape;
  shape.fwhm = (left + right) * h.bin_width;
  shape.baseline = base;
  shape.peak = height;
  const auto reach = static_cast<std::int64_t>(std::ceil(left + right)) + 1;
  double w = 0.0, m1 = 0.0;
  for (std::int64_t k = -reach; k <= reach; ++k) {
    const double c = std::max(at(ipk + k), 0.0);
    w += c;
    m1 += c * static_cast<double>(k);
  }
  double center = (static_cast<double>(ipk) + 0.5 + m1 / w) * h.bin_width;
  center = std::fmod(center, h.slot_period);
  if (center < 0.0) center += h.slot_period;
  shape.center = center;
  return shape;
}

} // namespace homdip::tags
