/**
 * @file serialization.hpp
 * @brief JSON and CSV documents: experiment configs, run metadata, scans,
 *        fits, plot tables, and SHA-256 digests for manifests.
 *
 * Config documents use unit-suffixed keys ("fwhm_ps", "dark_rate_hz") and
 * are canonicalized to SI on load. Unknown keys are errors.
 */
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "analysis.hpp"
#include "error.hpp"
#include "montecarlo.hpp"
#include "scan.hpp"
#include "units.hpp"

namespace homdip::io {

using nlohmann::json;

inline constexpr const char* kScanFormat = "homdip-dipscan/1";
inline constexpr const char* kFitFormat = "homdip-dipfit/1";

// ---------------------------------------------------------------------------
// digests

inline std::string to_hex(const unsigned char* data, std::size_t n) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(2 * n, '0');
  for (std::size_t i = 0; i < n; ++i) {
    s[2 * i] = digits[data[i] >> 4];
    s[2 * i + 1] = digits[data[i] & 0xf];
  }
  return s;
}

class Sha256 {
public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }

  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    return to_hex(md, len);
  }

private:
  EVP_MD_CTX* ctx_;
};

inline std::string sha256_hex(const std::string& data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

inline std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

// ---------------------------------------------------------------------------
// strict object reader

namespace detail {

class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("expected an object", path_.empty() ? "<root>" : path_);
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  bool has(const std::string& k) const { return j_.contains(k); }

  void number(const std::string& k, double& out, double scale = 1.0) {
    if (!take(k)) return;
    const json& v = j_.at(k);
    if (v.is_string() && (v == "inf" || v == "Infinity")) {
      out = INFINITY;
      return;
    }
    if (!v.is_number()) throw ConfigError("expected a number", key(k));
    out = v.get<double>() * scale;
  }

  void integer(const std::string& k, std::uint64_t& out) {
    if (!take(k)) return;
    const json& v = j_.at(k);
    if (v.is_number_unsigned()) out = v.get<std::uint64_t>();
    else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) out = static_cast<std::uint64_t>(v.get<std::int64_t>());
    else if (v.is_number_float() && v.get<double>() >= 0 && v.get<double>() == std::floor(v.get<double>()) &&
             v.get<double>() < 1.8e19) out = static_cast<std::uint64_t>(v.get<double>());
    else throw ConfigError("expected a non-negative integer", key(k));
  }

  void integer(const std::string& k, int& out) {
    std::uint64_t v = static_cast<std::uint64_t>(std::max(out, 0));
    if (!has(k)) return;
    integer(k, v);
    out = static_cast<int>(v);
  }

  void string(const std::string& k, std::string& out) {
    if (!take(k)) return;
    if (!j_.at(k).is_string()) throw ConfigError("expected a string", key(k));
    out = j_.at(k).get<std::string>();
  }

  /// Marks a key handled by the caller as known.
  void mark(const std::string& k) { take(k); }

  Reader child(const std::string& k) {
    take(k);
    return Reader(j_.at(k), key(k));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key", key(k));
    }
  }

private:
  bool take(const std::string& k) {
    if (!j_.contains(k)) return false;
    seen_.insert(k);
    return true;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline json number_or_inf(double v) { return std::isinf(v) ? json("inf") : json(v); }

} // namespace detail

// ---------------------------------------------------------------------------
// experiment config

inline json to_json(const mc::PulseSourceConfig& s) {
  return {{"lambda0_nm", s.lambda0 / units::nm},
          {"fwhm_ps", s.fwhm / units::ps},
          {"mu", s.mu},
          {"extinction_db", detail::number_or_inf(s.extinction_db)}};
}

inline json to_json(const mc::DetectorModel& d) {
  return {{"efficiency", d.efficiency},
          {"jitter_fwhm_ps", d.jitter_fwhm / units::ps},
          {"dark_rate_hz", d.dark_rate},
          {"dead_time_ns", d.dead_time / units::ns},
          {"tag_resolution_ps", d.tag_resolution / units::ps}};
}

inline json to_json(const mc::AnalysisSettings& a) {
  json j = {{"coincidence_window_ps", a.coincidence_window / units::ps},
            {"post_select_width_ps", a.post_select_width / units::ps},
            {"accidental_shifts", a.accidental_shifts}};
  if (a.post_select_center) j["post_select_center_ps"] = *a.post_select_center / units::ps;
  return j;
}

inline json to_json(const mc::ExperimentConfig& c) {
  return {{"source_a", to_json(c.source_a)},
          {"source_b", to_json(c.source_b)},
          {"detector_1", to_json(c.detector_1)},
          {"detector_2", to_json(c.detector_2)},
          {"slot_period_ns", c.slot_period / units::ns},
          {"clock_bin_ps", c.clock_bin / units::ps},
          {"pulse_offset_ps", c.pulse_offset / units::ps},
          {"n_slots", c.n_slots},
          {"delta_lambda_pm", c.delta_lambda / units::pm},
          {"timing_offset_ps", c.timing_offset / units::ps},
          {"mode_overlap_abs", std::abs(c.mode_overlap)},
          {"mode_overlap_arg_rad", std::arg(c.mode_overlap)},
          {"seed", c.seed}};
}

/// Full config document, analysis settings included.
inline json to_json(const mc::ExperimentConfig& c, const mc::AnalysisSettings& a) {
  json j = to_json(c);
  j["analysis"] = to_json(a);
  return j;
}

namespace detail {
inline void read_source(Reader r, mc::PulseSourceConfig& s) {
  r.number("lambda0_nm", s.lambda0, units::nm);
  r.number("fwhm_ps", s.fwhm, units::ps);
  r.number("mu", s.mu);
  r.number("extinction_db", s.extinction_db);
  r.finish();
}
inline void read_detector(Reader r, mc::DetectorModel& d) {
  r.number("efficiency", d.efficiency);
  r.number("jitter_fwhm_ps", d.jitter_fwhm, units::ps);
  r.number("dark_rate_hz", d.dark_rate);
  r.number("dead_time_ns", d.dead_time, units::ns);
  r.number("tag_resolution_ps", d.tag_resolution, units::ps);
  r.finish();
}
inline void read_analysis(Reader r, mc::AnalysisSettings& a) {
  r.number("coincidence_window_ps", a.coincidence_window, units::ps);
  r.number("post_select_width_ps", a.post_select_width, units::ps);
  if (r.has("post_select_center_ps")) {
    double c = 0.0;
    r.number("post_select_center_ps", c, units::ps);
    a.post_select_center = c;
  }
  r.integer("accidental_shifts", a.accidental_shifts);
  r.finish();
}
} // namespace detail

namespace detail {
/// Maps a validation key path ("source_a.fwhm") to its document key
/// ("source_a.fwhm_ps").
inline std::string document_key(const std::string& path) {
  static const std::pair<const char*, const char*> suffixed[] = {
      {"lambda0", "lambda0_nm"},           {"fwhm", "fwhm_ps"},
      {"jitter_fwhm", "jitter_fwhm_ps"},   {"dark_rate", "dark_rate_hz"},
      {"dead_time", "dead_time_ns"},       {"tag_resolution", "tag_resolution_ps"},
      {"slot_period", "slot_period_ns"},   {"clock_bin", "clock_bin_ps"},
      {"pulse_offset", "pulse_offset_ps"}, {"delta_lambda", "delta_lambda_pm"},
      {"timing_offset", "timing_offset_ps"}, {"mode_overlap", "mode_overlap_abs"},
      {"coincidence_window", "coincidence_window_ps"}, {"post_select_width", "post_select_width_ps"},
  };
  const auto dot = path.rfind('.');
  const std::string head = dot == std::string::npos ? "" : path.substr(0, dot + 1);
  const std::string leaf = dot == std::string::npos ? path : path.substr(dot + 1);
  for (const auto& [field, key] : suffixed) {
    if (leaf == field) return head + key;
  }
  return path;
}
} // namespace detail

struct ConfigDocument {
  mc::ExperimentConfig experiment;
  mc::AnalysisSettings analysis;
  std::string preset = "paper";
};

/// Parses a config document on top of a preset (the document's "preset"
/// key, else `base`). Validates the result.
inline ConfigDocument config_from_json(const json& j, mc::Preset base = mc::Preset::paper) {
  detail::Reader r(j, "");
  ConfigDocument doc;
  std::string preset_name;
  r.string("preset", preset_name);
  if (!preset_name.empty()) {
    auto p = mc::preset_from_name(preset_name);
    if (!p) throw ConfigError("unknown preset '" + preset_name + "'", "preset");
    base = *p;
    doc.preset = preset_name;
  }
  mc::ExperimentConfig& c = doc.experiment;
  c = mc::preset(base);
  if (r.has("source_a")) detail::read_source(r.child("source_a"), c.source_a);
  if (r.has("source_b")) detail::read_source(r.child("source_b"), c.source_b);
  if (r.has("detector_1")) detail::read_detector(r.child("detector_1"), c.detector_1);
  if (r.has("detector_2")) detail::read_detector(r.child("detector_2"), c.detector_2);
  if (r.has("analysis")) detail::read_analysis(r.child("analysis"), doc.analysis);
  r.number("slot_period_ns", c.slot_period, units::ns);
  r.number("clock_bin_ps", c.clock_bin, units::ps);
  r.number("pulse_offset_ps", c.pulse_offset, units::ps);
  if (r.has("n_slots") && r.has("duration_s")) throw ConfigError("give n_slots or duration_s, not both", "n_slots");
  r.integer("n_slots", c.n_slots);
  if (r.has("duration_s")) {
    double d = 0.0;
    r.number("duration_s", d);
    if (!(d > 0.0)) throw ConfigError("must be > 0", "duration_s");
    c.n_slots = static_cast<std::uint64_t>(std::ceil(d / c.slot_period - 1e-9));
  }
  r.number("delta_lambda_pm", c.delta_lambda, units::pm);
  r.number("timing_offset_ps", c.timing_offset, units::ps);
  double mag = std::abs(c.mode_overlap), arg = std::arg(c.mode_overlap);
  r.number("mode_overlap_abs", mag);
  r.number("mode_overlap_arg_rad", arg);
  if (!(mag >= 0.0 && mag <= 1.0)) throw ConfigError("must lie in [0, 1]", "mode_overlap_abs");
  c.mode_overlap = std::polar(mag, arg);
  r.integer("seed", c.seed);
  r.finish();
  try {
    c.validate();
    doc.analysis.validate(c.slot_period);
  } catch (const ConfigError& e) {
    if (e.key_path().empty()) throw;
    throw ConfigError(e.detail(), detail::document_key(e.key_path()));
  }
  return doc;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what(), path.string());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + tmp);
    out << text;
    if (!out) throw IoError("failed writing " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp + " to " + path.string() + ": " + ec.message());
}

/// Written atomically (temp file + rename).
inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// run metadata, scans, fits

inline json to_json(const mc::RunMetadata& m) {
  return {{"software_version", m.software_version},
          {"seed", m.config.seed},
          {"seed_scheme", m.seed_scheme},
          {"chunk_slots", m.chunk_slots},
          {"config", to_json(m.config)},
          {"duration_s", m.duration},
          {"t_p_s", m.t_p},
          {"fwhm_convention", "intensity"},
          {"delta_omega_rad_s", m.delta_omega},
          {"overlap_factor", m.overlap_factor},
          {"counts", m.counts},
          {"dead_time_losses", m.dead_time_losses}};
}

inline json to_json(const ScanPoint& p) {
  return {{"delta_lambda_pm", p.delta_lambda / units::pm},
          {"coincidences", p.coincidences},
          {"singles", p.singles},
          {"accidentals", p.accidentals},
          {"integration_slots", p.integration}};
}

inline ScanPoint scan_point_from_json(const json& j, const std::string& path) {
  detail::Reader r(j, path);
  ScanPoint p;
  r.number("delta_lambda_pm", p.delta_lambda, units::pm);
  r.integer("coincidences", p.coincidences);
  if (r.has("singles")) {
    const json& s = j.at("singles");
    if (!s.is_array() || s.size() != 2 || !s[0].is_number_unsigned() || !s[1].is_number_unsigned()) {
      throw ConfigError("expected two non-negative integers", r.key("singles"));
    }
    p.singles = {s[0].get<std::uint64_t>(), s[1].get<std::uint64_t>()};
    r.mark("singles");
  }
  r.number("accidentals", p.accidentals);
  r.integer("integration_slots", p.integration);
  r.finish();
  return p;
}

inline json to_json(const DipScan& s) {
  json pts = json::array();
  for (const auto& p : s.points) pts.push_back(to_json(p));
  return {{"format", kScanFormat}, {"lambda0_nm", s.lambda0 / units::nm}, {"points", pts}, {"provenance", s.provenance}};
}

inline DipScan scan_from_json(const json& j) {
  detail::Reader r(j, "");
  std::string format;
  r.string("format", format);
  if (format != kScanFormat) throw ConfigError("expected format '" + std::string(kScanFormat) + "'", "format");
  DipScan s;
  r.number("lambda0_nm", s.lambda0, units::nm);
  if (!j.contains("points") || !j["points"].is_array()) throw ConfigError("expected an array", "points");
  r.mark("points");
  for (std::size_t i = 0; i < j["points"].size(); ++i) {
    s.points.push_back(scan_point_from_json(j["points"][i], "points[" + std::to_string(i) + "]"));
  }
  if (j.contains("provenance")) {
    r.mark("provenance");
    s.provenance = j["provenance"];
  }
  r.finish();
  return s;
}

inline json to_json(const analysis::DipFit& f) {
  json cov = json::array();
  for (int i = 0; i < 4; ++i) {
    json row = json::array();
    for (int k = 0; k < 4; ++k) row.push_back(f.covariance(i, k));
    cov.push_back(row);
  }
  json starts = json::array();
  for (const auto& s : f.starts) {
    starts.push_back({{"initial", s.initial}, {"final", s.final}, {"chi2", s.chi2},
                      {"iterations", s.iterations}, {"converged", s.converged}});
  }
  return {{"format", kFitFormat},
          {"baseline", f.baseline},
          {"baseline_sigma", f.sigma_baseline()},
          {"visibility", f.visibility},
          {"visibility_sigma", f.sigma_visibility()},
          {"t_p_s", f.t_p},
          {"t_p_sigma_s", f.sigma_t_p()},
          {"pulse_fwhm_s", f.t_p > 0 ? optics::fwhm_from_tp(f.t_p) : 0.0},
          {"fwhm_convention", "intensity"},
          {"center_m", f.center},
          {"center_sigma_m", f.sigma_center()},
          {"lambda0_m", f.lambda0},
          {"dip_half_width_m", f.t_p > 0 ? optics::dip_half_width_wavelength(f.t_p, f.lambda0) : 0.0},
          {"covariance", cov},
          {"covariance_order", {"baseline", "visibility", "t_p_s", "center_m"}},
          {"chi2", f.chi2},
          {"dof", f.dof},
          {"chi2_per_dof", f.chi2_per_dof},
          {"iterations", f.iterations},
          {"converged", f.converged},
          {"at_bound", f.at_bound},
          {"width_at_bound", f.width_at_bound},
          {"degenerate", f.degenerate},
          {"bias_subtracted", {f.bias[0], f.bias[1], f.bias[2], f.bias[3]}},
          {"starts", starts}};
}

// ---------------------------------------------------------------------------
// CSV tables

/// delta_lambda_pm,normalized_coincidence,sigma,model_value
inline std::string points_csv(const std::vector<analysis::DipPoint>& pts, const analysis::DipFit* fit,
                              double scale = 1.0) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "delta_lambda_pm,normalized_coincidence,sigma,model_value\n";
  for (const auto& p : pts) {
    out << p.delta_lambda / units::pm << ',' << p.value / scale << ',' << p.sigma / scale << ',';
    if (fit) out << fit->model(p.delta_lambda) / scale;
    out << '\n';
  }
  return out.str();
}

inline std::vector<analysis::DipPoint> read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<analysis::DipPoint> pts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (lineno == 1 && line.rfind("delta_lambda", 0) == 0)) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() < 3) throw ConfigError("expected at least 3 columns", path.string() + ":" + std::to_string(lineno));
    try {
      pts.push_back({std::stod(cols[0]) * units::pm, std::stod(cols[1]), std::stod(cols[2])});
    } catch (const std::logic_error&) {
      throw ConfigError("bad number", path.string() + ":" + std::to_string(lineno));
    }
  }
  return pts;
}

inline std::string histogram_csv(const tags::Histogram& h) {
  std::ostringstream out;
  out << std::setprecision(17) << "delta_t_ps,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) out << h.center(i) / units::ps << ',' << h.counts[i] << '\n';
  return out.str();
}

} // namespace homdip::io
