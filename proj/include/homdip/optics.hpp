/**
 * @file optics.hpp
 * @brief Closed-form model of two-pulse interference on a 50:50 beam splitter.
 *
 * Two carved Gaussian pulses with carrier frequencies w_a, w_b and phases
 * phi_a, phi_b meet on a balanced beam splitter. After integrating over the
 * pulse, the output-port intensities are
 *
 *   I_out(1,2) = (I_a + I_b)/2 +- sqrt(I_a I_b) |o| g cos(dphi + arg o),
 *   g = exp(-t_p^2 dw^2 / 2),
 *
 * and averaging the product I_out1 I_out2 over a uniformly random dphi gives
 * the coincidence dip
 *
 *   P(1,1) = 1 - V exp(-t_p^2 dw^2),   V = 2 I_a I_b |o|^2 / (I_a + I_b)^2.
 *
 * V never exceeds 1/2 for phase-randomized coherent light.
 *
 * Time and frequency are in SI units (seconds, rad/s). The pulse width t_p is
 * the 1/e half-width of the field envelope; a measured intensity FWHM maps to
 * t_p through tp_from_fwhm().
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <limits>

#include "error.hpp"
#include "units.hpp"

namespace homdip::optics {

/// Wraps a phase into [0, 2pi).
inline double reduce_phase(double phi) {
  double r = std::fmod(phi, constants::two_pi);
  if (r < 0.0) r += constants::two_pi;
  if (r >= constants::two_pi) r = 0.0;
  return r;
}

/// One input pulse: Gaussian envelope of width t_p on a carrier.
struct PulseField {
  double t_p = 0.0;       ///< envelope width, s
  double omega = 0.0;     ///< carrier angular frequency, rad/s
  double phi = 0.0;       ///< carrier phase, rad, in [0, 2pi)
  double intensity = 0.0; ///< mean photon number per pulse

  static PulseField make(double t_p, double omega, double phi, double intensity) {
    PulseField f{t_p, omega, reduce_phase(phi), intensity};
    f.validate();
    return f;
  }

  void validate() const {
    if (!(t_p > 0.0) || !std::isfinite(t_p)) throw ConfigError("pulse width t_p must be > 0");
    if (!(intensity >= 0.0) || !std::isfinite(intensity)) throw ConfigError("pulse intensity must be >= 0");
    if (!std::isfinite(omega) || !std::isfinite(phi)) throw ConfigError("pulse carrier must be finite");
  }
};

/// Two pulses meeting on the beam splitter. Frequency and phase differences
/// are derived from the fields, so they cannot disagree with them.
struct InterferenceInput {
  PulseField a;
  PulseField b;
  /// Non-temporal mode overlap (polarization, spatial); 1 = indistinguishable.
  std::complex<double> mode_overlap{1.0, 0.0};
  /// Arrival-time mismatch of b relative to a, s.
  double timing_offset = 0.0;

  double delta_omega() const { return a.omega - b.omega; }
  double delta_phi() const { return a.phi - b.phi; }

  /// Mean-square width of the two envelopes; equals t_p for matched pulses.
  double effective_t_p() const { return std::sqrt(0.5 * (a.t_p * a.t_p + b.t_p * b.t_p)); }

  void validate() const {
    a.validate();
    b.validate();
    if (!(std::abs(mode_overlap) <= 1.0 + 1e-15)) throw ConfigError("|mode_overlap| must be <= 1");
    if (!std::isfinite(timing_offset)) throw ConfigError("timing_offset must be finite");
  }
};

/// Temporal-spectral overlap factor g. The timing term is the Gaussian-mode
/// dual of the spectral term and is 1 for aligned pulses.
inline double temporal_overlap(const InterferenceInput& in) {
  const double tp = in.effective_t_p();
  const double dw = in.delta_omega();
  const double tau = in.timing_offset;
  return std::exp(-0.5 * tp * tp * dw * dw - tau * tau / (8.0 * tp * tp));
}

/// Complex field amplitude of one pulse at time t.
inline std::complex<double> field_envelope(double t, const PulseField& field) {
  const double tp = field.t_p;
  const double amp = std::exp(-t * t / (2.0 * tp * tp)) / (tp * std::sqrt(constants::two_pi));
  return std::polar(amp, field.omega * t + field.phi);
}

struct PortIntensities {
  double out1 = 0.0;
  double out2 = 0.0;
};

/// Pulse-integrated intensities at the two output ports for the input's own
/// relative phase.
inline PortIntensities beamsplitter_outputs(const InterferenceInput& in) {
  in.validate();
  const double i1 = in.a.intensity;
  const double i2 = in.b.intensity;
  const double mean = 0.5 * (i1 + i2);
  const double cross = std::sqrt(i1 * i2) * std::abs(in.mode_overlap) * temporal_overlap(in) *
                       std::cos(in.delta_phi() + std::arg(in.mode_overlap));
  return {mean + cross, mean - cross};
}

/// Time-resolved output intensities |E_a +- o E_b|^2 / 2 at time t, each
/// field scaled to its pulse's photon number. The part of E_b orthogonal to
/// E_a's mode adds without interfering.
inline PortIntensities instantaneous_outputs(const InterferenceInput& in, double t) {
  in.validate();
  const std::complex<double> ea = std::sqrt(in.a.intensity) * field_envelope(t, in.a);
  const std::complex<double> eb = std::sqrt(in.b.intensity) * field_envelope(t - in.timing_offset, in.b);
  const double direct = 0.5 * (std::norm(ea) + std::norm(eb));
  const double cross = std::real(ea * std::conj(eb) * in.mode_overlap);
  return {direct + cross, direct - cross};
}

/// Normalized coincidence probability across the dip.
inline double hom_coincidence_probability(double delta_omega, double t_p, double visibility) {
  if (!(t_p > 0.0)) throw ConfigError("t_p must be > 0");
  if (!(visibility >= 0.0 && visibility <= 0.5)) throw ConfigError("visibility must lie in [0, 0.5]");
  const double x = t_p * delta_omega;
  return 1.0 - visibility * std::exp(-x * x);
}

/// Brute-force average of I_out1 * I_out2 over a uniform relative phase,
/// normalized by its value for fully distinguishable pulses. The average uses
/// `samples` midpoints of [0, 2pi).
inline double phase_averaged_coincidence(const InterferenceInput& in, int samples = 10000) {
  in.validate();
  if (samples < 1) throw ConfigError("samples must be >= 1");
  const double mean = 0.5 * (in.a.intensity + in.b.intensity);
  if (!(mean > 0.0)) throw ConfigError("at least one input must carry light");

  InterferenceInput probe = in;
  probe.b.phi = 0.0;
  double acc = 0.0;
  for (int k = 0; k < samples; ++k) {
    probe.a.phi = constants::two_pi * (k + 0.5) / samples;
    const auto out = beamsplitter_outputs(probe);
    acc += out.out1 * out.out2;
  }
  return (acc / samples) / (mean * mean);
}

/// Share of pulse light and of uniform background light that survives a
/// post-selection window. Both are 1 when nothing is cut.
struct WindowFractions {
  double pulse = 1.0;
  double background = 1.0;
};

namespace detail {
inline double leakage_fraction(double extinction_db) {
  if (std::isinf(extinction_db)) return 0.0;
  return std::pow(10.0, -extinction_db / 10.0);
}
} // namespace detail

/// Fraction of a carved pulse's photon number that leaks between pulses.
inline double leakage_fraction(double extinction_db) {
  if (!(extinction_db > 0.0)) throw ConfigError("extinction ratio must be > 0 dB");
  return detail::leakage_fraction(extinction_db);
}

/// Dip visibility of two weak coherent pulses with photon numbers mu1, mu2,
/// non-temporal overlap |o| and a finite extinction ratio. Leakage of
/// mu * 10^(-R/10) per pulse is spread over the slot and does not interfere.
inline double expected_visibility(double mu1, double mu2, double overlap_mag, double extinction_db,
                                  WindowFractions window = {}) {
  if (!(mu1 >= 0.0) || !(mu2 >= 0.0)) throw ConfigError("photon numbers must be >= 0");
  if (mu1 == 0.0 && mu2 == 0.0) throw ConfigError("at least one photon number must be > 0");
  if (!(overlap_mag >= 0.0 && overlap_mag <= 1.0)) throw ConfigError("overlap magnitude must lie in [0, 1]");
  if (!(window.pulse > 0.0 && window.pulse <= 1.0) || !(window.background >= 0.0 && window.background <= 1.0)) {
    throw ConfigError("window fractions must lie in (0, 1]");
  }
  const double leak = leakage_fraction(extinction_db);
  const double m1 = window.pulse * mu1;
  const double m2 = window.pulse * mu2;
  const double background = (mu1 + mu2) * leak * window.background;
  const double total = m1 + m2 + background;
  const double v = 2.0 * m1 * m2 * overlap_mag * overlap_mag / (total * total);
  if (v > 0.5) {
    std::clog << "homdip: expected_visibility clamped from " << v << " to 0.5\n";
    return 0.5;
  }
  return std::max(v, 0.0);
}

/// Carrier detuning for a wavelength offset around lambda0: 2 pi c dl / l0^2.
inline double detuning_from_wavelength(double delta_lambda, double lambda0) {
  if (!(lambda0 > 0.0)) throw ConfigError("lambda0 must be > 0");
  return constants::two_pi * constants::c * delta_lambda / (lambda0 * lambda0);
}

inline double wavelength_from_detuning(double delta_omega, double lambda0) {
  if (!(lambda0 > 0.0)) throw ConfigError("lambda0 must be > 0");
  return delta_omega * lambda0 * lambda0 / (constants::two_pi * constants::c);
}

/// Envelope width from an intensity FWHM, |E|^2 ~ exp(-t^2 / t_p^2).
inline double tp_from_fwhm(double fwhm_intensity) {
  if (!(fwhm_intensity > 0.0)) throw ConfigError("FWHM must be > 0");
  return fwhm_intensity / (2.0 * std::sqrt(std::log(2.0)));
}

inline double fwhm_from_tp(double t_p) {
  if (!(t_p > 0.0)) throw ConfigError("t_p must be > 0");
  return t_p * 2.0 * std::sqrt(std::log(2.0));
}

/// Wavelength offset at which the dip has fallen to 1/e of its depth.
inline double dip_half_width_wavelength(double t_p, double lambda0) {
  return wavelength_from_detuning(1.0 / t_p, lambda0);
}

} // namespace homdip::optics
