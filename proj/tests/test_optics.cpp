#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include <homdip/optics.hpp>

using namespace homdip;
using namespace homdip::optics;

namespace {

constexpr double kTp = 7.206734452718699e-11; // 120 ps intensity FWHM

InterferenceInput balanced(double dw, double dphi = 0.0, std::complex<double> o = 1.0) {
  InterferenceInput in;
  in.a = PulseField::make(kTp, dw, dphi, 1.0);
  in.b = PulseField::make(kTp, 0.0, 0.0, 1.0);
  in.mode_overlap = o;
  return in;
}

} // namespace

TEST(FieldEnvelope, PeakIsRealAtOrigin) {
  const auto f = PulseField::make(kTp, 1e15, 0.0, 1.0);
  const auto e = field_envelope(0.0, f);
  EXPECT_DOUBLE_EQ(e.real(), 1.0 / (kTp * std::sqrt(2.0 * constants::pi)));
  EXPECT_EQ(e.imag(), 0.0);
}

TEST(FieldEnvelope, OneWidthRatio) {
  const auto f = PulseField::make(kTp, 2e15, 0.3, 1.0);
  EXPECT_NEAR(std::abs(field_envelope(kTp, f)) / std::abs(field_envelope(0.0, f)), std::exp(-0.5), 1e-14);
}

TEST(FieldEnvelope, IntensityFwhm) {
  const auto f = PulseField::make(1.0, 0.0, 0.0, 1.0);
  const double peak = std::norm(field_envelope(0.0, f));
  const double half = 0.5 * fwhm_from_tp(1.0);
  EXPECT_NEAR(std::norm(field_envelope(half, f)) / peak, 0.5, 1e-12);
  EXPECT_NEAR(fwhm_from_tp(1.0), 1.6651092223153954, 1e-12);
}

TEST(PulseField, RejectsBadWidthAndReducesPhase) {
  EXPECT_THROW(PulseField::make(0.0, 0, 0, 1), ConfigError);
  EXPECT_THROW(PulseField::make(kTp, 0, 0, -1), ConfigError);
  const auto f = PulseField::make(kTp, 0, -0.5, 1.0);
  EXPECT_NEAR(f.phi, 2 * constants::pi - 0.5, 1e-15);
  EXPECT_GE(reduce_phase(-1e-18), 0.0);
  EXPECT_LT(reduce_phase(-1e-18), 2 * constants::pi);
}

TEST(BeamSplitter, AllLightInOnePort) {
  const auto out = beamsplitter_outputs(balanced(0.0));
  EXPECT_DOUBLE_EQ(out.out1, 2.0);
  EXPECT_DOUBLE_EQ(out.out2, 0.0);
}

TEST(BeamSplitter, QuadraturePhaseSplitsEvenly) {
  const auto out = beamsplitter_outputs(balanced(0.0, constants::pi / 2));
  EXPECT_NEAR(out.out1, 1.0, 1e-15);
  EXPECT_NEAR(out.out2, 1.0, 1e-15);
}

TEST(BeamSplitter, RejectsOverlapAboveOne) {
  EXPECT_THROW(beamsplitter_outputs(balanced(0.0, 0.0, {1.0, 0.1})), ConfigError);
}

TEST(BeamSplitter, EnergyConservationProperty) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    InterferenceInput in;
    in.a = PulseField::make(kTp * (0.5 + u(rng)), 3e10 * (u(rng) - 0.5), 2 * constants::pi * u(rng), 5 * u(rng));
    in.b = PulseField::make(kTp * (0.5 + u(rng)), 3e10 * (u(rng) - 0.5), 2 * constants::pi * u(rng), 5 * u(rng));
    in.mode_overlap = std::polar(u(rng), 2 * constants::pi * u(rng));
    in.timing_offset = 100e-12 * (u(rng) - 0.5);
    const auto out = beamsplitter_outputs(in);
    const double total = in.a.intensity + in.b.intensity;
    EXPECT_NEAR(out.out1 + out.out2, total, 1e-12 * std::max(total, 1.0));
    EXPECT_GE(out.out1, -1e-12);
    EXPECT_GE(out.out2, -1e-12);
  }
}

TEST(BeamSplitter, InstantaneousIntegratesToPulseOutputs) {
  // Aligned carriers: trapezoid integration of the time-resolved outputs
  // reproduces the pulse-integrated form, complex overlap included.
  InterferenceInput in;
  in.a = PulseField::make(kTp, 0.0, 0.4, 1.0);
  in.b = PulseField::make(kTp, 0.0, 1.3, 0.5);
  in.mode_overlap = std::polar(0.8, 0.2);
  const double tp_amp = kTp; // |E|^2 integrates to 1 / (2 sqrt(pi) t_p) per unit photon number
  double s1 = 0.0, s2 = 0.0;
  const int n = 20000;
  const double lo = -12 * kTp, hi = 12 * kTp, h = (hi - lo) / n;
  for (int i = 0; i <= n; ++i) {
    const double wgt = (i == 0 || i == n) ? 0.5 : 1.0;
    const auto o = instantaneous_outputs(in, lo + i * h);
    s1 += wgt * o.out1 * h;
    s2 += wgt * o.out2 * h;
  }
  const double norm = 2.0 * std::sqrt(constants::pi) * tp_amp;
  const auto ref = beamsplitter_outputs(in);
  EXPECT_NEAR(s1 * norm, ref.out1, 1e-9);
  EXPECT_NEAR(s2 * norm, ref.out2, 1e-9);
}

TEST(HomDip, FloorAndWings) {
  EXPECT_DOUBLE_EQ(hom_coincidence_probability(0.0, kTp, 0.5), 0.5);
  EXPECT_NEAR(hom_coincidence_probability(1e14, kTp, 0.5), 1.0, 1e-15);
  EXPECT_NEAR(hom_coincidence_probability(1.0 / kTp, kTp, 0.465), 0.8289360598552793, 1e-12);
}

TEST(HomDip, RejectsVisibilityOutOfRange) {
  EXPECT_THROW(hom_coincidence_probability(0.0, kTp, 0.51), ConfigError);
  EXPECT_THROW(hom_coincidence_probability(0.0, kTp, -0.01), ConfigError);
  EXPECT_THROW(hom_coincidence_probability(0.0, 0.0, 0.3), ConfigError);
}

TEST(HomDip, SymmetryBoundsMonotonicity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = 0.5 * u(rng);
    const double tp = kTp * (0.2 + 2 * u(rng));
    const double dw = 5e10 * u(rng);
    const double p = hom_coincidence_probability(dw, tp, v);
    EXPECT_EQ(p, hom_coincidence_probability(-dw, tp, v));
    EXPECT_GE(p, 1.0 - v);
    EXPECT_LE(p, 1.0);
    EXPECT_LE(p, hom_coincidence_probability(dw * 1.01 + 1.0, tp, v));
  }
}

TEST(PhaseAverage, BalancedCases) {
  EXPECT_NEAR(phase_averaged_coincidence(balanced(0.0)), 0.5, 1e-12);
  for (double dw : {0.0, 5e9, 2e10, 1e12}) {
    EXPECT_NEAR(phase_averaged_coincidence(balanced(dw, 0.0, 0.0)), 1.0, 1e-12);
  }
}

TEST(PhaseAverage, MatchesClosedFormBalanced) {
  for (double dw : {0.0, 3e9, 1.0 / kTp, 3e10}) {
    EXPECT_NEAR(phase_averaged_coincidence(balanced(dw)), hom_coincidence_probability(dw, kTp, 0.5), 1e-12);
  }
}

TEST(PhaseAverage, UnequalIntensities) {
  InterferenceInput in;
  in.a = PulseField::make(kTp, 0.0, 0.0, 1.0);
  in.b = PulseField::make(kTp, 0.0, 0.0, 0.5);
  // <I3 I4> / <I3><I4> with <cos^2> = 1/2 gives V = 2 I1 I2 / (I1 + I2)^2 = 4/9.
  EXPECT_NEAR(phase_averaged_coincidence(in), 1.0 - 4.0 / 9.0, 1e-12);
}

TEST(PhaseAverage, OracleEquivalenceRandomSets) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double mu1 = 0.05 + u(rng), mu2 = 0.05 + u(rng);
    const double o = u(rng);
    const double tp = kTp * (0.5 + u(rng));
    const double dw = 4e10 * (u(rng) - 0.5);
    InterferenceInput in;
    in.a = PulseField::make(tp, dw, 0.0, mu1);
    in.b = PulseField::make(tp, 0.0, 0.0, mu2);
    in.mode_overlap = std::polar(o, 2 * constants::pi * u(rng));
    const double v = expected_visibility(mu1, mu2, o, INFINITY);
    EXPECT_NEAR(phase_averaged_coincidence(in, 10000), hom_coincidence_probability(dw, tp, v), 1e-3);
  }
}

TEST(ExpectedVisibility, Examples) {
  EXPECT_EQ(expected_visibility(1e-3, 1e-3, 1.0, INFINITY), 0.5);
  EXPECT_EQ(expected_visibility(1.0, 0.0, 1.0, INFINITY), 0.0);
  EXPECT_NEAR(expected_visibility(1.0, 0.5, 1.0, INFINITY), 4.0 / 9.0, 1e-15);
  EXPECT_THROW(expected_visibility(0.0, 0.0, 1.0, 20.0), ConfigError);
  EXPECT_THROW(expected_visibility(1.0, 1.0, 1.0, 0.0), ConfigError);
}

TEST(ExpectedVisibility, LeakageBackground) {
  // 20 dB leakage of 2 mu spread over the slot; 175 ps of 2320 ps in window.
  const WindowFractions fr{1.0, 175.0 / 2320.0};
  const double b = 2e-3 * 0.01 * fr.background;
  const double ref = 2e-6 / ((2e-3 + b) * (2e-3 + b));
  EXPECT_NEAR(expected_visibility(1e-3, 1e-3, 1.0, 20.0, fr), ref, 1e-15);
  EXPECT_LT(expected_visibility(1e-3, 1e-3, 1.0, 20.0), 0.5);
}

TEST(ExpectedVisibility, BoundedAndMaximalWhenBalanced) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double mu1 = u(rng), mu2 = u(rng) + 1e-6, o = u(rng);
    const double r = u(rng) < 0.2 ? INFINITY : 1.0 + 40 * u(rng);
    const double v = expected_visibility(mu1, mu2, o, r);
    EXPECT_LE(v, 0.5);
    EXPECT_GE(v, 0.0);
    const double total = mu1 + mu2;
    EXPECT_GE(expected_visibility(0.5 * total, 0.5 * total, o, r) + 1e-15, v);
  }
}

TEST(Conversions, DetuningExamples) {
  const double l0 = 1550e-9;
  EXPECT_EQ(detuning_from_wavelength(0.0, l0), 0.0);
  EXPECT_NEAR(detuning_from_wavelength(1e-12, l0), 784038113.3439555, 1e-3);
  EXPECT_NEAR(detuning_from_wavelength(17.7e-12, l0), 1.388e10, 0.001e10);
  EXPECT_NEAR(detuning_from_wavelength(17.7e-12, l0) * kTp, 1.0, 2e-4);
  EXPECT_EQ(detuning_from_wavelength(-3e-12, l0), -detuning_from_wavelength(3e-12, l0));
  EXPECT_NEAR(wavelength_from_detuning(detuning_from_wavelength(4.2e-12, l0), l0), 4.2e-12, 1e-26);
  EXPECT_NEAR(dip_half_width_wavelength(kTp, l0), 17.698004663039008e-12, 1e-20);
  EXPECT_THROW(detuning_from_wavelength(1e-12, 0.0), ConfigError);
}

TEST(Conversions, FwhmRoundTrip) {
  EXPECT_NEAR(tp_from_fwhm(2.0 * std::sqrt(std::log(2.0))), 1.0, 1e-15);
  EXPECT_NEAR(tp_from_fwhm(120e-12), kTp, 1e-24);
  for (double x : {1e-15, 3.3e-12, 120e-12, 7.0, 1e6}) {
    EXPECT_NEAR(fwhm_from_tp(tp_from_fwhm(x)) / x, 1.0, 1e-12);
  }
  EXPECT_THROW(tp_from_fwhm(0.0), ConfigError);
}
