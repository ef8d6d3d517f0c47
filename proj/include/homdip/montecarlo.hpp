/**
 * @file montecarlo.hpp
 * @brief Event-level simulation of two weak pulsed sources interfering on a
 *        beam splitter and detected by two single-photon detectors.
 *
 * Physics notes
 * -------------
 * A beam splitter maps coherent states to coherent states. For a fixed
 * relative phase the photon number at each output port is therefore an
 * independent Poisson variable whose mean is the pulse-integrated output
 * intensity (optics::beamsplitter_outputs). Sampling one uniform relative
 * phase per slot and then per-port Poisson counts is exact; no Fock-space
 * treatment is required. Independent lasers drift in phase much more slowly
 * than a slot, but phase-insensitive statistics are identical to drawing a
 * fresh phase every slot.
 *
 * Sampling is event driven. Candidate photons arrive at a constant per-slot
 * rate L = eta_max (mu_a + mu_b + leakage), so slots with no candidate are
 * skipped geometrically. A slot with candidates draws its relative phase and
 * routes each candidate to a port (pulse or leakage light) with probability
 * proportional to that port's mean, then keeps it with probability
 * eta_port / eta_max. Thinning a Poisson process this way reproduces the
 * per-port Poisson laws exactly, and the cost scales with detections rather
 * than with slots.
 *
 * Pulse photons are emitted at the slot's pulse offset plus a Gaussian draw
 * from the intensity profile (sigma = t_p / sqrt 2, i.e. FWHM 2 sqrt(ln 2) t_p);
 * leakage photons and dark counts are uniform in time. Each detection gets
 * Gaussian jitter, the per-channel stream is sorted, quantized once to the
 * tagger resolution (round half to even) and cleaned by a non-paralyzable
 * dead time.
 *
 * Reproducibility: the run is cut into fixed chunks of kChunkSlots slots and
 * every chunk draws from its own engine seeded by derive_seed(seed, chunk).
 * The output does not depend on the number of worker threads.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cfenv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "optics.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "scan.hpp"
#include "tags.hpp"
#include "units.hpp"
#include "version.hpp"

namespace homdip::mc {

inline constexpr std::uint64_t kChunkSlots = std::uint64_t{1} << 20;

/// FWHM factor of a Gaussian: FWHM = kFwhmPerSigma * sigma.
inline const double kFwhmPerSigma = 2.0 * std::sqrt(2.0 * std::log(2.0));

inline constexpr double kNominalJitterFwhm = 100 * units::ps;
/// Jitter that broadens a 120 ps pulse to 175 ps on the detectors once the
/// 32 ps tagger bin is added in quadrature.
inline const double kCalibratedJitterFwhm = std::sqrt(175.0 * 175.0 - 120.0 * 120.0 - 32.0 * 32.0) * units::ps;

struct PulseSourceConfig {
  double lambda0 = 1550 * units::nm;
  double fwhm = 120 * units::ps; ///< intensity FWHM
  double mu = 1e-3;              ///< mean photons per carved pulse
  double extinction_db = 20.0;   ///< may be +inf

  double t_p() const { return optics::tp_from_fwhm(fwhm); }

  void validate(const std::string& path) const {
    if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) throw ConfigError("must be > 0", path + ".lambda0");
    if (!(fwhm > 0.0) || !std::isfinite(fwhm)) throw ConfigError("must be > 0", path + ".fwhm");
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("must be >= 0", path + ".mu");
    if (!(extinction_db > 0.0)) throw ConfigError("must be > 0", path + ".extinction_db");
  }
};

struct DetectorModel {
  double efficiency = 0.80;
  double jitter_fwhm = kNominalJitterFwhm;
  double dark_rate = 500.0; ///< Hz
  double dead_time = 50 * units::ns;
  double tag_resolution = 32 * units::ps;

  void validate(const std::string& path) const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw ConfigError("must lie in [0, 1]", path + ".efficiency");
    if (!(jitter_fwhm >= 0.0) || !std::isfinite(jitter_fwhm)) throw ConfigError("must be >= 0", path + ".jitter_fwhm");
    if (!(dark_rate >= 0.0) || !std::isfinite(dark_rate)) throw ConfigError("must be >= 0", path + ".dark_rate");
    if (!(dead_time >= 0.0) || !std::isfinite(dead_time)) throw ConfigError("must be >= 0", path + ".dead_time");
    if (!(tag_resolution > 0.0) || !std::isfinite(tag_resolution)) {
      throw ConfigError("must be > 0", path + ".tag_resolution");
    }
  }
};

struct ExperimentConfig {
  PulseSourceConfig source_a;
  PulseSourceConfig source_b;
  DetectorModel detector_1;
  DetectorModel detector_2;
  double slot_period = 2.32 * units::ns;
  double clock_bin = 580 * units::ps;
  double pulse_offset = 1160 * units::ps; ///< pulse centre within the slot
  std::uint64_t n_slots = 1'000'000;
  double delta_lambda = 0.0;  ///< wavelength of b minus wavelength of a, m
  double timing_offset = 0.0; ///< arrival of b relative to a, s
  std::complex<double> mode_overlap{1.0, 0.0};
  std::uint64_t seed = 1;

  double duration() const { return static_cast<double>(n_slots) * slot_period; }

  /// Carrier detuning omega_a - omega_b for the configured wavelength offset.
  double delta_omega() const { return optics::detuning_from_wavelength(delta_lambda, source_a.lambda0); }

  /// Mean detection rate per channel, Hz, averaged over the relative phase.
  std::array<double, 2> mean_rates() const {
    const double pulse = source_a.mu + source_b.mu;
    const double leak = source_a.mu * optics::detail::leakage_fraction(source_a.extinction_db) +
                        source_b.mu * optics::detail::leakage_fraction(source_b.extinction_db);
    const double per_port = 0.5 * (pulse + leak) / slot_period;
    return {detector_1.efficiency * per_port + detector_1.dark_rate,
            detector_2.efficiency * per_port + detector_2.dark_rate};
  }

  void validate() const {
    source_a.validate("source_a");
    source_b.validate("source_b");
    detector_1.validate("detector_1");
    detector_2.validate("detector_2");
    if (!(slot_period > 0.0) || !std::isfinite(slot_period)) throw ConfigError("must be > 0", "slot_period");
    if (!(clock_bin > 0.0) || clock_bin > slot_period) throw ConfigError("must lie in (0, slot_period]", "clock_bin");
    if (!(pulse_offset >= 0.0 && pulse_offset < slot_period)) {
      throw ConfigError("must lie in [0, slot_period)", "pulse_offset");
    }
    if (n_slots < 1) throw ConfigError("must be >= 1", "n_slots");
    if (!std::isfinite(delta_lambda)) throw ConfigError("must be finite", "delta_lambda");
    if (!std::isfinite(timing_offset)) throw ConfigError("must be finite", "timing_offset");
    if (!(std::abs(mode_overlap) <= 1.0 + 1e-15)) throw ConfigError("magnitude must be <= 1", "mode_overlap");
    const auto rates = mean_rates();
    const std::array<const DetectorModel*, 2> dets{&detector_1, &detector_2};
    for (std::size_t k = 0; k < 2; ++k) {
      if (dets[k]->dead_time > 0.0 && rates[k] > 10.0 / dets[k]->dead_time) {
        throw ConfigError("mean detection rate exceeds 10 / dead_time (saturated detector)",
                          k == 0 ? "detector_1" : "detector_2");
      }
    }
  }
};

/// Post-selection and coincidence settings used to reduce a run to one scan
/// point.
struct AnalysisSettings {
  double coincidence_window = 580 * units::ps;
  /// Post-selection width around the pulse centre; 0 disables the cut.
  double post_select_width = 175 * units::ps;
  /// Post-selection centre; defaults to the configured pulse offset.
  std::optional<double> post_select_center;
  /// Cross-slot shifts +-1..+-n averaged for the accidental baseline.
  int accidental_shifts = 4;

  void validate(double slot_period) const {
    if (!(coincidence_window > 0.0)) throw ConfigError("must be > 0", "analysis.coincidence_window");
    if (post_select_width < 0.0 || post_select_width >= slot_period) {
      throw ConfigError("must lie in [0, slot_period)", "analysis.post_select_width");
    }
    if (accidental_shifts < 1) throw ConfigError("must be >= 1", "analysis.accidental_shifts");
  }
};

enum class Preset {
  paper,      ///< published hardware parameters, nominal 100 ps jitter
  calibrated, ///< as paper, jitter matched to the 175 ps detected pulse width
  ideal,      ///< as paper with perfect extinction and mode overlap
  paper_v465, ///< as paper with mode overlap lowered to give V = 0.465
};

inline std::optional<Preset> preset_from_name(const std::string& name) {
  if (name == "paper") return Preset::paper;
  if (name == "calibrated") return Preset::calibrated;
  if (name == "ideal") return Preset::ideal;
  if (name == "paper-v465") return Preset::paper_v465;
  return std::nullopt;
}

/// Standard deviation of a detected pulse-photon arrival time for one
/// detector, including tagger quantization.
inline double detected_sigma(const PulseSourceConfig& src, const DetectorModel& det) {
  const double pulse = src.t_p() / std::sqrt(2.0);
  const double jitter = det.jitter_fwhm / kFwhmPerSigma;
  return std::sqrt(pulse * pulse + jitter * jitter + det.tag_resolution * det.tag_resolution / 12.0);
}

/// Fractions of pulse and uniform light kept by the post-selection window.
/// The pulse fraction is the geometric mean over the two detectors.
inline optics::WindowFractions window_fractions(const ExperimentConfig& cfg, const AnalysisSettings& an) {
  if (an.post_select_width <= 0.0) return {};
  const double w = an.post_select_width;
  auto kept = [&](const DetectorModel& d) { return std::erf(w / (2.0 * std::sqrt(2.0) * detected_sigma(cfg.source_a, d))); };
  return {std::sqrt(kept(cfg.detector_1) * kept(cfg.detector_2)), w / cfg.slot_period};
}

/// Visibility expected from the configured sources and overlap, with
/// leakage background counted inside the post-selection window.
inline double expected_visibility(const ExperimentConfig& cfg, const AnalysisSettings& an) {
  const auto fr = window_fractions(cfg, an);
  const double mu_a = cfg.source_a.mu, mu_b = cfg.source_b.mu;
  if (cfg.source_a.extinction_db == cfg.source_b.extinction_db) {
    return optics::expected_visibility(mu_a, mu_b, std::abs(cfg.mode_overlap), cfg.source_a.extinction_db, fr);
  }
  const double bg = (mu_a * optics::leakage_fraction(cfg.source_a.extinction_db) +
                     mu_b * optics::leakage_fraction(cfg.source_b.extinction_db)) * fr.background;
  const double total = fr.pulse * (mu_a + mu_b) + bg;
  const double o = std::abs(cfg.mode_overlap);
  return std::min(0.5, 2.0 * fr.pulse * fr.pulse * mu_a * mu_b * o * o / (total * total));
}

/// Detector-level prediction: adds dark counts in the window and unequal
/// efficiencies or jitters to expected_visibility().
inline double predicted_visibility(const ExperimentConfig& cfg, const AnalysisSettings& an) {
  const bool cut = an.post_select_width > 0.0;
  const double w = cut ? an.post_select_width : cfg.slot_period;
  const double mu_a = cfg.source_a.mu, mu_b = cfg.source_b.mu;
  const double leak = mu_a * optics::leakage_fraction(cfg.source_a.extinction_db) +
                      mu_b * optics::leakage_fraction(cfg.source_b.extinction_db);
  const double amp = std::sqrt(mu_a * mu_b) * std::abs(cfg.mode_overlap);
  std::array<double, 2> mean{}, cross{};
  const std::array<const DetectorModel*, 2> dets{&cfg.detector_1, &cfg.detector_2};
  for (std::size_t k = 0; k < 2; ++k) {
    const DetectorModel& d = *dets[k];
    const double f = cut ? std::erf(w / (2.0 * std::sqrt(2.0) * detected_sigma(cfg.source_a, d))) : 1.0;
    mean[k] = d.efficiency * (0.5 * f * (mu_a + mu_b) + 0.5 * leak * w / cfg.slot_period) + d.dark_rate * w;
    cross[k] = d.efficiency * f * amp;
  }
  if (!(mean[0] > 0.0 && mean[1] > 0.0)) return 0.0;
  return cross[0] * cross[1] / (2.0 * mean[0] * mean[1]);
}

inline ExperimentConfig preset(Preset p) {
  ExperimentConfig cfg;
  switch (p) {
  case Preset::paper:
    break;
  case Preset::calibrated:
    cfg.detector_1.jitter_fwhm = kCalibratedJitterFwhm;
    cfg.detector_2.jitter_fwhm = kCalibratedJitterFwhm;
    break;
  case Preset::ideal:
    cfg.source_a.extinction_db = INFINITY;
    cfg.source_b.extinction_db = INFINITY;
    break;
  case Preset::paper_v465: {
    const double v_unit = expected_visibility(cfg, AnalysisSettings{});
    cfg.mode_overlap = std::sqrt(0.465 / v_unit);
    break;
  }
  }
  return cfg;
}

struct RunMetadata {
  ExperimentConfig config;
  std::string software_version = kVersion;
  std::string seed_scheme = kSeedScheme;
  std::uint64_t chunk_slots = kChunkSlots;
  double duration = 0.0;
  double t_p = 0.0;         ///< of source a, s
  double delta_omega = 0.0; ///< rad/s
  double overlap_factor = 0.0;
  std::array<std::uint64_t, 2> counts{0, 0};
  std::array<std::uint64_t, 2> dead_time_losses{0, 0};
};

struct RunResult {
  tags::TimeTagStream channel_1;
  tags::TimeTagStream channel_2;
  RunMetadata metadata;
};

namespace detail {

struct Derived {
  double period_ps = 0, offset_ps = 0, timing_ps = 0;
  std::array<double, 2> sigma_pulse_ps{};  // per source
  std::array<double, 2> sigma_jitter_ps{}; // per detector
  std::array<double, 2> efficiency{};
  std::array<double, 2> dark_per_ps{};
  double eta_max = 0;
  double pulse_sum = 0;   // mu_a + mu_b
  double weight_a = 0;    // mu_a / (mu_a + mu_b)
  double cross_amp = 0;   // sqrt(mu_a mu_b) |o| g
  double overlap_arg = 0;
  double leak = 0;        // total leakage photons per slot
  double candidate_rate = 0;

  explicit Derived(const ExperimentConfig& c) {
    period_ps = c.slot_period / units::ps;
    offset_ps = c.pulse_offset / units::ps;
    timing_ps = c.timing_offset / units::ps;
    sigma_pulse_ps = {c.source_a.t_p() / std::sqrt(2.0) / units::ps, c.source_b.t_p() / std::sqrt(2.0) / units::ps};
    sigma_jitter_ps = {c.detector_1.jitter_fwhm / kFwhmPerSigma / units::ps,
                       c.detector_2.jitter_fwhm / kFwhmPerSigma / units::ps};
    efficiency = {c.detector_1.efficiency, c.detector_2.efficiency};
    dark_per_ps = {c.detector_1.dark_rate * units::ps, c.detector_2.dark_rate * units::ps};
    eta_max = std::max(efficiency[0], efficiency[1]);
    pulse_sum = c.source_a.mu + c.source_b.mu;
    weight_a = pulse_sum > 0 ? c.source_a.mu / pulse_sum : 0.0;
    optics::InterferenceInput in{optics::PulseField{c.source_a.t_p(), 0, 0, c.source_a.mu},
                                 optics::PulseField{c.source_b.t_p(), -c.delta_omega(), 0, c.source_b.mu},
                                 c.mode_overlap, c.timing_offset};
    cross_amp = std::sqrt(c.source_a.mu * c.source_b.mu) * std::abs(c.mode_overlap) * optics::temporal_overlap(in);
    overlap_arg = std::arg(c.mode_overlap);
    leak = c.source_a.mu * optics::detail::leakage_fraction(c.source_a.extinction_db) +
           c.source_b.mu * optics::detail::leakage_fraction(c.source_b.extinction_db);
    candidate_rate = eta_max * (pulse_sum + leak);
  }
};

using ChunkTimes = std::array<std::vector<double>, 2>;

inline ChunkTimes simulate_chunk(const Derived& d, std::uint64_t seed, std::uint64_t chunk, std::uint64_t first,
                                 std::uint64_t count) {
  RandomEngine rng = make_engine(seed, {chunk});
  std::normal_distribution<double> normal(0.0, 1.0);
  ChunkTimes out;

  if (d.candidate_rate > 0.0) {
    std::uint64_t s = 0;
    for (;;) {
      // empty slots before the next slot holding a candidate
      const double gap = std::floor(-std::log1p(-uniform01(rng)) / d.candidate_rate);
      if (gap >= static_cast<double>(count - s)) break;
      s += static_cast<std::uint64_t>(gap);
      const double slot_start = static_cast<double>(first + s) * d.period_ps;
      const std::uint64_t n = zero_truncated_poisson(rng, d.candidate_rate);
      const double c = std::cos(constants::two_pi * uniform01(rng) + d.overlap_arg);
      const double port0 = 0.5 * d.pulse_sum + d.cross_amp * c;
      for (std::uint64_t i = 0; i < n; ++i) {
        const double u = uniform01(rng) * (d.pulse_sum + d.leak);
        int port;
        bool pulse = true;
        if (u < port0) port = 0;
        else if (u < d.pulse_sum) port = 1;
        else {
          pulse = false;
          port = u < d.pulse_sum + 0.5 * d.leak ? 0 : 1;
        }
        const double keep = uniform01(rng);
        double t;
        if (pulse) {
          const bool from_a = uniform01(rng) < d.weight_a;
          t = slot_start + d.offset_ps + (from_a ? 0.0 : d.timing_ps) +
              d.sigma_pulse_ps[from_a ? 0 : 1] * normal(rng);
        } else {
          t = slot_start + d.period_ps * uniform01(rng);
        }
        t += d.sigma_jitter_ps[port] * normal(rng);
        if (keep * d.eta_max < d.efficiency[port]) out[port].push_back(t);
      }
      if (++s >= count) break;
    }
  }

  const double t0 = static_cast<double>(first) * d.period_ps;
  const double span = static_cast<double>(count) * d.period_ps;
  for (int k = 0; k < 2; ++k) {
    if (d.dark_per_ps[k] <= 0.0) continue;
    std::poisson_distribution<std::uint64_t> dark(d.dark_per_ps[k] * span);
    const std::uint64_t n = dark(rng);
    for (std::uint64_t i = 0; i < n; ++i) out[k].push_back(t0 + span * uniform01(rng));
  }
  return out;
}

/// Sort, quantize and apply dead time to one channel. A tag is kept when it
/// is at least dead_time after the previous kept tag both before and after
/// quantization.
inline tags::TimeTagStream finish_channel(std::vector<double>& times, std::uint8_t channel, const DetectorModel& det,
                                          std::uint64_t& losses) {
  std::sort(times.begin(), times.end());
  tags::TimeTagStream s;
  s.resolution = det.tag_resolution;
  s.tags.reserve(times.size());
  const double res_ps = det.tag_resolution / units::ps;
  const double dead_ps = det.dead_time / units::ps;
  const int old_mode = std::fegetround();
  std::fesetround(FE_TONEAREST);
  bool have_last = false;
  double last_t = 0.0;
  std::uint64_t last_q = 0;
  for (const double t : times) {
    if (t < 0.0) continue;
    const auto q = static_cast<std::uint64_t>(std::nearbyint(t / res_ps));
    if (have_last && (t - last_t < dead_ps || static_cast<double>(q - last_q) * res_ps < dead_ps)) {
      ++losses;
      continue;
    }
    s.tags.push_back({q, channel});
    have_last = true;
    last_t = t;
    last_q = q;
  }
  std::fesetround(old_mode);
  return s;
}

} // namespace detail

/// Simulates one run of config.n_slots slots at config.delta_lambda.
inline RunResult simulate_run(const ExperimentConfig& config, unsigned workers = default_worker_count()) {
  config.validate();
  const detail::Derived d(config);
  const std::uint64_t n_chunks = (config.n_slots + kChunkSlots - 1) / kChunkSlots;

  std::vector<detail::ChunkTimes> chunks(n_chunks);
  parallel_for(n_chunks, workers, [&](std::size_t c) {
    const std::uint64_t first = c * kChunkSlots;
    const std::uint64_t count = std::min(kChunkSlots, config.n_slots - first);
    chunks[c] = detail::simulate_chunk(d, config.seed, c, first, count);
  });

  RunResult r;
  std::array<std::vector<double>, 2> times;
  for (int k = 0; k < 2; ++k) {
    std::size_t total = 0;
    for (const auto& ch : chunks) total += ch[k].size();
    times[k].reserve(total);
    for (auto& ch : chunks) {
      times[k].insert(times[k].end(), ch[k].begin(), ch[k].end());
      std::vector<double>().swap(ch[k]);
    }
  }
  chunks.clear();

  RunMetadata& m = r.metadata;
  m.config = config;
  m.duration = config.duration();
  m.t_p = config.source_a.t_p();
  m.delta_omega = config.delta_omega();
  m.overlap_factor = d.cross_amp;
  r.channel_1 = detail::finish_channel(times[0], 0, config.detector_1, m.dead_time_losses[0]);
  std::vector<double>().swap(times[0]);
  r.channel_2 = detail::finish_channel(times[1], 1, config.detector_2, m.dead_time_losses[1]);
  std::vector<double>().swap(times[1]);
  m.counts = {r.channel_1.size(), r.channel_2.size()};

  for (auto* s : {&r.channel_1, &r.channel_2}) {
    s->metadata = {{"producer", "homdip-simulate"},
                   {"duration_s", m.duration},
                   {"dead_time_clean", true},
                   {"seed", config.seed},
                   {"delta_lambda_m", config.delta_lambda}};
  }
  return r;
}

/// Reduces a simulated run to a scan point: post-selection around the pulse,
/// same-slot coincidences and the mean cross-slot coincidence count.
inline ScanPoint measure_point(const RunResult& run, const AnalysisSettings& an) {
  const ExperimentConfig& cfg = run.metadata.config;
  an.validate(cfg.slot_period);
  const tags::TimeTagStream* a = &run.channel_1;
  const tags::TimeTagStream* b = &run.channel_2;
  tags::TimeTagStream cut_a, cut_b;
  if (an.post_select_width > 0.0) {
    const double center = an.post_select_center.value_or(cfg.pulse_offset);
    cut_a = tags::post_select(*a, cfg.slot_period, center, an.post_select_width);
    cut_b = tags::post_select(*b, cfg.slot_period, center, an.post_select_width);
    a = &cut_a;
    b = &cut_b;
  }
  tags::CoincidenceOptions opt;
  opt.window = an.coincidence_window;
  opt.histogram_range = 0.0;
  opt.duration = cfg.duration();

  ScanPoint p;
  p.delta_lambda = cfg.delta_lambda;
  p.integration = cfg.n_slots;
  p.singles = {run.channel_1.size(), run.channel_2.size()};
  p.coincidences = tags::count_coincidences(*a, *b, opt).count;
  std::uint64_t acc = 0;
  for (int k = 1; k <= an.accidental_shifts; ++k) {
    for (int sign : {-1, 1}) {
      opt.offset = sign * k * cfg.slot_period;
      acc += tags::count_coincidences(*a, *b, opt).count;
    }
  }
  p.accidentals = static_cast<double>(acc) / (2.0 * an.accidental_shifts);
  return p;
}

/// Seed for the scan point at `delta_lambda`. Keyed on the detuning itself
/// (to the attometre) so adding or removing points leaves the others intact.
inline std::uint64_t point_seed(std::uint64_t master, double delta_lambda) {
  const auto am = static_cast<std::int64_t>(std::llround(delta_lambda / 1e-18));
  return derive_seed(master, {0x5ca9ULL, static_cast<std::uint64_t>(am)});
}

inline ExperimentConfig point_config(const ExperimentConfig& base, double delta_lambda) {
  ExperimentConfig cfg = base;
  cfg.delta_lambda = delta_lambda;
  cfg.seed = point_seed(base.seed, delta_lambda);
  return cfg;
}

inline ScanPoint simulate_scan_point(const ExperimentConfig& base, double delta_lambda, const AnalysisSettings& an,
                                     unsigned workers = default_worker_count()) {
  return measure_point(simulate_run(point_config(base, delta_lambda), workers), an);
}

/// Runs one simulation per detuning. Points run one after another (each run
/// is parallel internally) so only one run's tags are held in memory.
inline DipScan simulate_scan(const ExperimentConfig& base, const std::vector<double>& detunings,
                             const AnalysisSettings& an = {}, unsigned workers = default_worker_count(),
                             const std::function<void(std::size_t, const ScanPoint&)>& on_point = {}) {
  if (detunings.empty()) throw ConfigError("scan needs at least one detuning");
  base.validate();
  an.validate(base.slot_period);
  DipScan scan;
  scan.lambda0 = base.source_a.lambda0;
  scan.points.reserve(detunings.size());
  for (std::size_t i = 0; i < detunings.size(); ++i) {
    try {
      scan.points.push_back(simulate_scan_point(base, detunings[i], an, workers));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (scan point " + std::to_string(i) + ")");
    }
    if (on_point) on_point(i, scan.points.back());
  }
  scan.provenance = {{"producer", "homdip-scan"},
                     {"software_version", kVersion},
                     {"seed", base.seed},
                     {"seed_scheme", kSeedScheme},
                     {"expected_visibility", expected_visibility(base, an)},
                     {"predicted_visibility", predicted_visibility(base, an)},
                     {"t_p_s", base.source_a.t_p()},
                     {"fwhm_convention", "intensity"}};
  return scan;
}

/// Evenly spaced grid of n detunings from start to stop inclusive.
inline std::vector<double> detuning_grid(double start, double stop, std::size_t n) {
  if (n == 0) throw ConfigError("grid needs at least one point");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = n == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return g;
}

} // namespace homdip::mc
