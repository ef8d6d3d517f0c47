/**
 * @file analysis.hpp
 * @brief Dip normalization, Gaussian dip fitting and visibility uncertainty.
 *
 * The dip model in wavelength space is
 *
 *   C(dl) = A (1 - V exp(-t_p^2 dw(dl - c)^2)),   dw(x) = 2 pi c_light x / l0^2,
 *
 * with free parameters A (baseline), V (visibility), t_p (pulse width) and c
 * (dip centre). The fitter works internally in picoseconds and picometres.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "error.hpp"
#include "optics.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "scan.hpp"
#include "units.hpp"

namespace homdip::analysis {

/// A scan value with its one-sigma uncertainty; either raw counts or
/// normalized coincidences.
struct DipPoint {
  double delta_lambda = 0.0; ///< m
  double value = 0.0;
  double sigma = 0.0;
};

/// Poisson weighting: zero-count points get variance 1.
inline double poisson_sigma(double counts) { return std::sqrt(std::max(counts, 1.0)); }

inline std::vector<DipPoint> raw_points(const DipScan& scan) {
  std::vector<DipPoint> out;
  out.reserve(scan.points.size());
  for (const auto& p : scan.points) {
    const auto n = static_cast<double>(p.coincidences);
    out.push_back({p.delta_lambda, n, poisson_sigma(n)});
  }
  return out;
}

/// Model value A (1 - V exp(-(t_p dw)^2)).
inline double dip_model(double delta_lambda, double baseline, double visibility, double t_p, double center,
                        double lambda0) {
  const double x = t_p * optics::detuning_from_wavelength(delta_lambda - center, lambda0);
  return baseline * (1.0 - visibility * std::exp(-x * x));
}

struct FitOptions {
  /// Pulse width implied by the configured pulse FWHM; seeds the multi-start.
  double nominal_t_p = optics::tp_from_fwhm(120 * units::ps);
  int max_iterations = 200;
  double step_tolerance = 1e-10;
  double visibility_upper = 0.6;
  /// Reweight with the fitted model's Poisson variance (sigma_i^2 scaled by
  /// model_i / value_i) until the parameters settle. Observed-count weights
  /// pull A and V low at paper-like statistics.
  bool model_weights = true;
  int reweight_iterations = 20;
  /// Subtract the estimated second-order bias. It scales with the reported
  /// covariance, so noiseless data are left untouched.
  bool bias_correction = true;
};

/// One multi-start attempt, kept for diagnostics.
struct FitStart {
  std::array<double, 4> initial{}; ///< A, V, t_p [s], centre [m]
  std::array<double, 4> final{};
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct DipFit {
  double baseline = 0.0;
  double visibility = 0.0;
  double t_p = 0.0;    ///< s
  double center = 0.0; ///< m
  double lambda0 = 0.0;
  /// Parameter covariance in (A, V, t_p [s], centre [m]), scaled by the
  /// reduced chi-square.
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
  double chi2 = 0.0;
  int dof = 0;
  double chi2_per_dof = 0.0;
  int iterations = 0;
  bool converged = false;
  bool at_bound = false;   ///< V ended on 0 or on the upper bound
  /// Dip half-width ended on the finest point spacing or on the scan span.
  bool width_at_bound = false;
  bool degenerate = false; ///< normal matrix rank-deficient, pseudo-inverse used
  /// Second-order bias subtracted from (A, V, t_p [s], centre [m]).
  Eigen::Vector4d bias = Eigen::Vector4d::Zero();
  std::vector<FitStart> starts;

  double sigma(int i) const { return std::sqrt(std::max(covariance(i, i), 0.0)); }
  double sigma_baseline() const { return sigma(0); }
  double sigma_visibility() const { return sigma(1); }
  double sigma_t_p() const { return sigma(2); }
  double sigma_center() const { return sigma(3); }

  double model(double delta_lambda) const {
    return dip_model(delta_lambda, baseline, visibility, t_p, center, lambda0);
  }
};

namespace detail {

struct FitProblem {
  std::vector<double> x;   // pm
  std::vector<double> y;
  std::vector<double> w;   // 1 / sigma^2
  double kappa = 0.0;      // rad per (ps pm)
  double v_upper = 0.6;
  // resolvable dip: half-width between the finest spacing and the span
  double tp_min = 1e-9, tp_max = std::numeric_limits<double>::infinity();
  double c_min = -std::numeric_limits<double>::infinity(), c_max = std::numeric_limits<double>::infinity();

  using Vec = Eigen::Vector4d; // A, V, t_p [ps], c [pm]

  double model(const Vec& p, std::size_t i, double* grad = nullptr) const {
    const double d = x[i] - p[3];
    const double s = kappa * p[2] * d;
    const double u = s * s;
    const double e = std::exp(-u);
    if (grad) {
      grad[0] = 1.0 - p[1] * e;
      grad[1] = -p[0] * e;
      grad[2] = p[0] * p[1] * e * 2.0 * u / p[2];
      grad[3] = -p[0] * p[1] * e * 2.0 * kappa * kappa * p[2] * p[2] * d;
    }
    return p[0] * (1.0 - p[1] * e);
  }

  /// Second derivatives of the model at point i.
  Eigen::Matrix4d hessian(const Vec& p, std::size_t i) const {
    const double d = x[i] - p[3];
    const double k2 = kappa * kappa;
    const double t = p[2];
    const double u = k2 * t * t * d * d;
    const double e = std::exp(-u);
    const double a = p[0], v = p[1];
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    h(0, 1) = -e;
    h(0, 2) = v * e * 2.0 * k2 * t * d * d;
    h(0, 3) = -v * e * 2.0 * k2 * t * t * d;
    h(1, 2) = a * e * 2.0 * k2 * t * d * d;
    h(1, 3) = -a * e * 2.0 * k2 * t * t * d;
    h(2, 2) = a * v * e * 2.0 * k2 * d * d * (1.0 - 2.0 * u);
    h(2, 3) = a * v * e * 4.0 * k2 * t * d * (u - 1.0);
    h(3, 3) = -a * v * e * 2.0 * k2 * t * t * (2.0 * u - 1.0);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < r; ++c) h(r, c) = h(c, r);
    return h;
  }

  double chi2(const Vec& p) const {
    double c = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - model(p, i);
      c += w[i] * r * r;
    }
    return c;
  }

  void normal_equations(const Vec& p, Eigen::Matrix4d& h, Vec& g) const {
    h.setZero();
    g.setZero();
    double grad[4];
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - model(p, i, grad);
      const Eigen::Map<const Vec> j(grad);
      h.noalias() += w[i] * j * j.transpose();
      g.noalias() += w[i] * r * j;
    }
  }

  Vec project(Vec p) const {
    p[1] = std::clamp(p[1], 0.0, v_upper);
    p[2] = std::clamp(std::abs(p[2]), tp_min, tp_max);
    p[3] = std::clamp(p[3], c_min, c_max);
    return p;
  }
};

struct LmOutcome {
  FitProblem::Vec p;
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt with Marquardt's diagonal scaling and projection of
/// V onto its bounds after every step.
inline LmOutcome levenberg_marquardt(const FitProblem& prob, FitProblem::Vec p, const FitOptions& opt,
                                     double width_pm) {
  p = prob.project(p);
  double chi = prob.chi2(p);
  double lambda = 1e-3;
  LmOutcome out;
  Eigen::Matrix4d h;
  FitProblem::Vec g;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    out.iterations = it;
    prob.normal_equations(p, h, g);
    const double dmax = h.diagonal().maxCoeff();
    bool accepted = false;
    double step = std::numeric_limits<double>::infinity();
    while (lambda < 1e16) {
      Eigen::Matrix4d a = h;
      for (int k = 0; k < 4; ++k) a(k, k) += lambda * std::max(h(k, k), 1e-15 * dmax + 1e-300);
      const FitProblem::Vec delta = a.ldlt().solve(g);
      const FitProblem::Vec pn = prob.project(p + delta);
      const std::array<double, 4> scale{std::max(std::abs(p[0]), 1e-300), std::max(std::abs(p[1]), 1e-3),
                                        std::max(p[2], 1e-3), std::max(width_pm, 1e-9)};
      step = 0.0;
      for (int k = 0; k < 4; ++k) step = std::max(step, std::abs(pn[k] - p[k]) / scale[k]);
      if (!pn.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const double chin = prob.chi2(pn);
      if (chin < chi) {
        p = pn;
        chi = chin;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        break;
      }
      if (step < opt.step_tolerance) break;
      lambda *= 10.0;
    }
    if (step < opt.step_tolerance || !accepted) {
      out.converged = step < opt.step_tolerance;
      break;
    }
  }
  // Undamped Gauss-Newton polish so the result sits on the gradient root
  // rather than wherever chi-square stopped resolving.
  if (out.converged) {
    for (int k = 0; k < 8; ++k) {
      prob.normal_equations(p, h, g);
      const FitProblem::Vec delta = h.ldlt().solve(g);
      const FitProblem::Vec pn = prob.project(p + delta);
      if (!pn.allFinite() || (pn - (p + delta)).norm() != 0.0) break;
      const double rel = (delta.array() / p.array().abs().max(1e-3)).abs().maxCoeff();
      if (rel > 1e-6) break;
      p = pn;
      if (rel < 1e-14) break;
    }
    chi = prob.chi2(p);
  }
  out.p = p;
  out.chi2 = chi;
  return out;
}

} // namespace detail

/// Weighted least-squares fit of the Gaussian dip to points with one-sigma
/// uncertainties. Runs five deterministic starts (V = 0.1, 0.25, 0.5 at the
/// nominal t_p, and V = 0.25 at 0.5x and 1.5x nominal t_p) and keeps the
/// lowest chi-square, preferring the lower V on a tie.
inline DipFit fit_dip(const std::vector<DipPoint>& points, double lambda0, const FitOptions& opt = {}) {
  if (points.size() < 5) throw ConfigError("dip fit needs at least 5 points");
  if (!(lambda0 > 0.0)) throw ConfigError("lambda0 must be > 0");
  if (!(opt.nominal_t_p > 0.0)) throw ConfigError("nominal t_p must be > 0");

  detail::FitProblem prob;
  prob.kappa = optics::detuning_from_wavelength(units::pm, lambda0) * units::ps;
  prob.v_upper = opt.visibility_upper;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& pt = points[i];
    if (!std::isfinite(pt.value) || !std::isfinite(pt.sigma) || !(pt.sigma > 0.0)) {
      throw ConfigError("point " + std::to_string(i) + " needs a finite value and sigma > 0");
    }
    if (i > 0 && !(pt.delta_lambda > points[i - 1].delta_lambda)) {
      throw ConfigError("detunings must be strictly increasing");
    }
    prob.x.push_back(pt.delta_lambda / units::pm);
    prob.y.push_back(pt.value);
    prob.w.push_back(1.0 / (pt.sigma * pt.sigma));
  }

  double spacing = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < prob.x.size(); ++i) spacing = std::min(spacing, prob.x[i] - prob.x[i - 1]);
  prob.c_min = prob.x.front();
  prob.c_max = prob.x.back();
  prob.tp_min = 1.0 / (prob.kappa * (prob.c_max - prob.c_min));
  prob.tp_max = 1.0 / (prob.kappa * spacing);

  const double tp0 = std::clamp(opt.nominal_t_p / units::ps, prob.tp_min, prob.tp_max);
  const double width0 = 1.0 / (prob.kappa * tp0); // 1/e half-width in pm
  const auto imin = static_cast<std::size_t>(std::min_element(prob.y.begin(), prob.y.end()) - prob.y.begin());
  const double c0 = prob.x[imin];
  double wing_sum = 0.0;
  int wing_n = 0;
  for (std::size_t i = 0; i < prob.x.size(); ++i) {
    if (std::abs(prob.x[i] - c0) > 3.0 * width0) {
      wing_sum += prob.y[i];
      ++wing_n;
    }
  }
  const double a0 = wing_n > 0 ? wing_sum / wing_n : *std::max_element(prob.y.begin(), prob.y.end());

  const std::array<std::array<double, 2>, 5> seeds{{{0.1, 1.0}, {0.25, 1.0}, {0.5, 1.0}, {0.25, 0.5}, {0.25, 1.5}}};
  DipFit fit;
  fit.lambda0 = lambda0;
  std::optional<detail::LmOutcome> best;
  for (const auto& [v0, tscale] : seeds) {
    const detail::FitProblem::Vec p0(a0, v0, tp0 * tscale, c0);
    auto r = detail::levenberg_marquardt(prob, p0, opt, 1.0 / (prob.kappa * tp0 * tscale));
    FitStart s;
    s.initial = {p0[0], p0[1], p0[2] * units::ps, p0[3] * units::pm};
    s.final = {r.p[0], r.p[1], r.p[2] * units::ps, r.p[3] * units::pm};
    s.chi2 = r.chi2;
    s.iterations = r.iterations;
    s.converged = r.converged;
    fit.starts.push_back(s);
    const double tie = 1e-12 * (1.0 + (best ? best->chi2 : 0.0));
    if (!best || r.chi2 < best->chi2 - tie || (std::abs(r.chi2 - best->chi2) <= tie && r.p[1] < best->p[1])) {
      best = r;
    }
  }

  if (opt.model_weights) {
    // sigma^2 per unit value, from each point where it is defined
    double sum_var = 0.0, sum_y = 0.0;
    for (std::size_t i = 0; i < prob.y.size(); ++i) {
      if (prob.y[i] > 0.0) {
        sum_var += 1.0 / prob.w[i];
        sum_y += prob.y[i];
      }
    }
    std::vector<double> unit(prob.y.size(), sum_y > 0.0 ? sum_var / sum_y : 0.0);
    for (std::size_t i = 0; i < prob.y.size(); ++i) {
      if (prob.y[i] > 0.0) unit[i] = 1.0 / (prob.w[i] * prob.y[i]);
    }
    if (sum_y > 0.0) {
      const double floor = 1e-12 * *std::max_element(prob.y.begin(), prob.y.end());
      for (int k = 0; k < opt.reweight_iterations; ++k) {
        const auto prev = best->p;
        for (std::size_t i = 0; i < prob.y.size(); ++i) {
          prob.w[i] = 1.0 / (unit[i] * std::max(prob.model(prev, i), floor));
        }
        auto r = detail::levenberg_marquardt(prob, prev, opt, 1.0 / (prob.kappa * prev[2]));
        r.iterations += best->iterations;
        best = r;
        const double rel = ((best->p - prev).array() / prev.array().abs().max(1e-3)).abs().maxCoeff();
        if (rel < 1e-12) break;
      }
    }
  }

  const auto& p = best->p;
  fit.baseline = p[0];
  fit.visibility = p[1];
  fit.t_p = p[2] * units::ps;
  fit.center = p[3] * units::pm;
  fit.chi2 = best->chi2;
  fit.iterations = best->iterations;
  fit.converged = best->converged;
  fit.dof = static_cast<int>(points.size()) - 4;
  fit.chi2_per_dof = fit.chi2 / fit.dof;
  fit.at_bound = p[1] <= 1e-12 || p[1] >= opt.visibility_upper - 1e-12;
  fit.width_at_bound = p[2] <= prob.tp_min * (1 + 1e-12) || p[2] >= prob.tp_max * (1 - 1e-12);

  Eigen::Matrix4d h;
  detail::FitProblem::Vec g;
  prob.normal_equations(p, h, g);
  if (!(h(0, 0) > 0.0) || !(h(1, 1) > 0.0)) {
    throw NumericalError("singular normal equations: baseline or visibility not constrained by the data");
  }
  // Equilibrate before judging rank so parameter units do not matter.
  const Eigen::Vector4d d = h.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Eigen::Matrix4d hs = d.asDiagonal() * h * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(hs);
  const Eigen::Vector4d ev = eig.eigenvalues();
  const double cut = 1e-10 * ev.maxCoeff();
  Eigen::Vector4d inv = Eigen::Vector4d::Zero();
  for (int k = 0; k < 4; ++k) {
    if (ev[k] > cut) inv[k] = 1.0 / ev[k];
    else fit.degenerate = true;
  }
  // Only the A, V block survives when the dip vanishes (V = 0 leaves t_p and
  // the centre unconstrained); pseudo-inverse in that case.
  Eigen::Matrix4d cov = d.asDiagonal() * (eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose()) *
                        d.asDiagonal();
  const Eigen::Matrix4d fisher_inv = cov;
  if (fit.dof > 0) cov *= fit.chi2_per_dof;
  const Eigen::Vector4d to_si(1.0, 1.0, units::ps, units::pm);
  if (opt.bias_correction && fit.converged && !fit.at_bound && !fit.width_at_bound && !fit.degenerate) {
    // Box second-order bias of a weighted nonlinear least-squares estimate.
    detail::FitProblem::Vec jwd = detail::FitProblem::Vec::Zero();
    for (std::size_t i = 0; i < prob.x.size(); ++i) {
      std::array<double, 4> grad{};
      prob.model(p, i, grad.data());
      const double di = (cov * prob.hessian(p, i)).trace();
      jwd += prob.w[i] * di * Eigen::Map<const Eigen::Vector4d>(grad.data());
    }
    const Eigen::Vector4d b = -0.5 * fisher_inv * jwd;
    const auto q = prob.project(p - b);
    if (q.allFinite() && q[1] > 1e-12 && q[1] < opt.visibility_upper - 1e-12) {
      fit.bias = (to_si.array() * b.array()).matrix();
      fit.baseline = q[0];
      fit.visibility = q[1];
      fit.t_p = q[2] * units::ps;
      fit.center = q[3] * units::pm;
    }
  }
  fit.covariance = to_si.asDiagonal() * cov * to_si.asDiagonal();
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();
  return fit;
}

enum class Normalization { fit_baseline, wings, accidentals };

inline const char* to_string(Normalization n) {
  switch (n) {
  case Normalization::fit_baseline: return "fit-baseline";
  case Normalization::wings: return "wings";
  case Normalization::accidentals: return "accidentals";
  }
  return "?";
}

inline std::optional<Normalization> normalization_from_name(const std::string& s) {
  if (s == "fit-baseline") return Normalization::fit_baseline;
  if (s == "wings") return Normalization::wings;
  if (s == "accidentals") return Normalization::accidentals;
  return std::nullopt;
}

struct NormalizeOptions {
  Normalization strategy = Normalization::fit_baseline;
  double nominal_t_p = optics::tp_from_fwhm(120 * units::ps);
  /// Dip centre for selecting wing points; defaults to the lowest point.
  std::optional<double> center;
};

struct NormalizedDip {
  std::vector<DipPoint> points;
  Normalization strategy = Normalization::fit_baseline;
  /// Single baseline used (fit-baseline and wings); 0 for per-point
  /// accidental normalization.
  double baseline = 0.0;
  std::optional<DipFit> fit;
};

namespace detail {
inline std::vector<std::size_t> wing_indices(const std::vector<DipPoint>& pts, double center, double half_width) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (std::abs(pts[i].delta_lambda - center) > 3.0 * half_width) idx.push_back(i);
  }
  return idx;
}

inline std::size_t argmin_value(const std::vector<DipPoint>& pts) {
  return static_cast<std::size_t>(
      std::min_element(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.value < b.value; }) -
      pts.begin());
}
} // namespace detail

/// Divides coincidence counts by a baseline estimate. Uncertainties are the
/// Poisson errors of the counts carried through the division.
inline NormalizedDip normalize_dip(const DipScan& scan, const NormalizeOptions& opt = {}) {
  if (scan.points.empty()) throw ConfigError("scan is empty");
  const auto raw = raw_points(scan);
  NormalizedDip out;
  out.strategy = opt.strategy;
  out.points.reserve(raw.size());

  if (opt.strategy == Normalization::accidentals) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const double acc = scan.points[i].accidentals;
      if (!(acc > 0.0)) throw NumericalError("zero accidental baseline at point " + std::to_string(i));
      out.points.push_back({raw[i].delta_lambda, raw[i].value / acc, raw[i].sigma / acc});
    }
    return out;
  }

  double base = 0.0;
  if (opt.strategy == Normalization::fit_baseline) {
    FitOptions fo;
    fo.nominal_t_p = opt.nominal_t_p;
    out.fit = fit_dip(raw, scan.lambda0, fo);
    base = out.fit->baseline;
  } else {
    const double center = opt.center.value_or(raw[detail::argmin_value(raw)].delta_lambda);
    const double hw = optics::dip_half_width_wavelength(opt.nominal_t_p, scan.lambda0);
    const auto wings = detail::wing_indices(raw, center, hw);
    if (wings.empty()) throw NumericalError("no wing points beyond 3 dip half-widths");
    for (auto i : wings) base += raw[i].value;
    base /= static_cast<double>(wings.size());
  }
  if (!(base > 0.0)) throw NumericalError("zero baseline");
  out.baseline = base;
  for (const auto& p : raw) out.points.push_back({p.delta_lambda, p.value / base, p.sigma / base});
  return out;
}

struct VisibilityEstimate {
  double visibility = 0.0;
  double sigma = 0.0;
  double minimum = 0.0;
  double baseline = 0.0;
};

/// Model-free visibility 1 - C_min / C_baseline from the lowest point and the
/// mean of the wing points.
inline VisibilityEstimate visibility_point_estimate(const std::vector<DipPoint>& pts, double lambda0,
                                                    double nominal_t_p = optics::tp_from_fwhm(120 * units::ps)) {
  if (pts.size() < 3) throw ConfigError("point estimate needs at least 3 points");
  const std::size_t imin = detail::argmin_value(pts);
  if (imin == 0 || imin + 1 == pts.size()) throw NumericalError("dip not captured: minimum at scan edge");
  const double hw = optics::dip_half_width_wavelength(nominal_t_p, lambda0);
  const auto wings = detail::wing_indices(pts, pts[imin].delta_lambda, hw);
  if (wings.empty()) throw NumericalError("no wing points beyond 3 dip half-widths");
  double b = 0.0, var_b = 0.0;
  for (auto i : wings) {
    b += pts[i].value;
    var_b += pts[i].sigma * pts[i].sigma;
  }
  const auto n = static_cast<double>(wings.size());
  b /= n;
  var_b /= n * n;
  if (!(b > 0.0)) throw NumericalError("zero baseline");
  VisibilityEstimate e;
  e.minimum = pts[imin].value;
  e.baseline = b;
  e.visibility = 1.0 - e.minimum / b;
  const double d_min = pts[imin].sigma / b;
  const double d_b = e.minimum * std::sqrt(var_b) / (b * b);
  e.sigma = std::sqrt(d_min * d_min + d_b * d_b);
  return e;
}

struct BootstrapResult {
  double sigma_visibility = 0.0;
  double mean_visibility = 0.0;
  int resamples = 0;
  int failures = 0;
};

/// Parametric bootstrap: every point is redrawn as Poisson counts with the
/// point's effective count (value / sigma)^2, rescaled to the point's units,
/// and the dip is refitted. Resample i draws from derive_seed(seed, {0xb007, i}).
inline BootstrapResult bootstrap_uncertainty(const std::vector<DipPoint>& pts, double lambda0, int n_resamples,
                                             std::uint64_t seed = 1, const FitOptions& opt = {},
                                             unsigned workers = default_worker_count()) {
  if (n_resamples < 100) throw ConfigError("bootstrap needs at least 100 resamples");
  std::vector<double> v(static_cast<std::size_t>(n_resamples), std::numeric_limits<double>::quiet_NaN());
  parallel_for(v.size(), workers, [&](std::size_t r) {
    RandomEngine rng = make_engine(seed, {0xb007ULL, r});
    std::vector<DipPoint> sample = pts;
    for (auto& p : sample) {
      const double n_eff = (p.value / p.sigma) * (p.value / p.sigma);
      if (!(n_eff > 0.0) || !std::isfinite(n_eff)) continue;
      const double unit = p.value / n_eff;
      const auto k = static_cast<double>(std::poisson_distribution<std::uint64_t>(n_eff)(rng));
      p.value = k * unit;
      p.sigma = poisson_sigma(k) * unit;
    }
    try {
      v[r] = fit_dip(sample, lambda0, opt).visibility;
    } catch (const Error&) {
    }
  });
  BootstrapResult out;
  double s = 0.0, s2 = 0.0;
  for (double x : v) {
    if (std::isnan(x)) {
      ++out.failures;
      continue;
    }
    ++out.resamples;
    s += x;
  }
  if (out.resamples < 2) throw NumericalError("bootstrap: fewer than two successful refits");
  out.mean_visibility = s / out.resamples;
  for (double x : v) {
    if (!std::isnan(x)) s2 += (x - out.mean_visibility) * (x - out.mean_visibility);
  }
  out.sigma_visibility = std::sqrt(s2 / (out.resamples - 1));
  return out;
}

inline BootstrapResult bootstrap_uncertainty(const DipScan& scan, int n_resamples, std::uint64_t seed = 1,
                                             const FitOptions& opt = {}) {
  return bootstrap_uncertainty(raw_points(scan), scan.lambda0, n_resamples, seed, opt);
}

struct ConstancyTest {
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 1.0;
  double mean = 0.0;
};

/// Chi-square test of counts against a constant (their mean) with Poisson
/// variances.
inline ConstancyTest constancy_test(const std::vector<double>& counts) {
  if (counts.size() < 2) throw ConfigError("constancy test needs at least 2 values");
  ConstancyTest t;
  for (double c : counts) t.mean += c;
  t.mean /= static_cast<double>(counts.size());
  if (!(t.mean > 0.0)) throw NumericalError("constancy test on zero counts");
  for (double c : counts) t.chi2 += (c - t.mean) * (c - t.mean) / t.mean;
  t.dof = static_cast<int>(counts.size()) - 1;
  t.p_value = boost::math::gamma_q(0.5 * t.dof, 0.5 * t.chi2);
  return t;
}

inline ConstancyTest singles_constancy(const DipScan& scan, int channel) {
  std::vector<double> c;
  for (const auto& p : scan.points) c.push_back(static_cast<double>(p.singles.at(static_cast<std::size_t>(channel))));
  return constancy_test(c);
}

} // namespace homdip::analysis
