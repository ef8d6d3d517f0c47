// homdip: simulate, scan, analyze, fit and report HOM dip measurements.
//
// Exit codes: 0 success, 2 config error, 3 I/O error, 4 numerical failure.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <homdip/homdip.hpp>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace homdip;

constexpr const char* kManifestFormat = "homdip-manifest/1";

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

struct ConfigFlags {
  std::string config_path;
  std::string preset = "paper";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> slots;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("config", f.config_path, "config JSON, or a manifest to re-run (default: preset only)");
  cmd->add_option("--preset", f.preset, "base parameter preset")
      ->check(CLI::IsMember({"paper", "calibrated", "ideal", "paper-v465"}));
  cmd->add_option("--seed", f.seed, "master seed (overrides the config)");
  cmd->add_option("--slots", f.slots, "slots per run (overrides the config)");
}

io::ConfigDocument load_config(const ConfigFlags& f) {
  const auto base = mc::preset_from_name(f.preset);
  if (!base) throw ConfigError("unknown preset '" + f.preset + "'", "--preset");
  io::ConfigDocument doc;
  if (f.config_path.empty()) {
    doc = io::config_from_json(json::object(), *base);
    doc.preset = f.preset;
  } else {
    json j = io::read_json_file(f.config_path);
    if (j.is_object() && j.value("format", "") == kManifestFormat) {
      if (!j.contains("config")) throw ConfigError("manifest has no config", "config");
      j = j["config"];
    }
    doc = io::config_from_json(j, *base);
  }
  if (f.seed) doc.experiment.seed = *f.seed;
  if (f.slots) {
    if (*f.slots < 1) throw ConfigError("must be >= 1", "--slots");
    doc.experiment.n_slots = *f.slots;
  }
  doc.experiment.validate();
  return doc;
}

json manifest_base(const std::string& command, const io::ConfigDocument& doc) {
  return {{"format", kManifestFormat},
          {"command", command},
          {"software_version", kVersion},
          {"seed", doc.experiment.seed},
          {"seed_scheme", kSeedScheme},
          {"config", io::to_json(doc.experiment, doc.analysis)},
          {"timestamps", {{"started", utc_now()}}}};
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  ConfigFlags config;
  std::string out_dir;
  bool csv = false;
};

int cmd_simulate(const SimulateArgs& a, unsigned threads) {
  const auto doc = load_config(a.config);
  const fs::path out(a.out_dir);
  ensure_dir(out);
  json manifest = manifest_base("simulate", doc);

  const auto run = mc::simulate_run(doc.experiment, threads);
  json outputs = json::object();
  const std::array<std::pair<const tags::TimeTagStream*, std::string>, 2> channels{
      {{&run.channel_1, "channel_1"}, {&run.channel_2, "channel_2"}}};
  for (const auto& [stream, name] : channels) {
    const auto path = out / (name + ".htag");
    tags::write_tags(*stream, path);
    outputs[path.filename().string()] = io::file_sha256(path);
    if (a.csv) {
      const auto csv = out / (name + ".csv");
      tags::write_tags_csv(*stream, csv);
      outputs[csv.filename().string()] = io::file_sha256(csv);
    }
  }
  manifest["run"] = io::to_json(run.metadata);
  manifest["outputs"] = outputs;
  manifest["timestamps"]["finished"] = utc_now();
  io::write_json_file(out / "manifest.json", manifest);

  std::cout << "simulated " << doc.experiment.n_slots << " slots (" << run.metadata.duration << " s)\n"
            << "  channel_1: " << run.channel_1.size() << " tags, channel_2: " << run.channel_2.size() << " tags\n"
            << "  written to " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// scan

struct ScanArgs {
  ConfigFlags config;
  std::string out_dir;
  std::string points = "-60pm:60pm:41";
};

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw ConfigError("expected start:stop:n", "--points");
  const double start = parse_length(parts[0]);
  const double stop = parse_length(parts[1]);
  std::size_t n = 0;
  try {
    std::size_t used = 0;
    n = std::stoul(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument("n");
  } catch (const std::logic_error&) {
    throw ConfigError("point count must be a positive integer", "--points");
  }
  if (n == 0) throw ConfigError("point count must be >= 1", "--points");
  if (n > 1 && !(stop > start)) throw ConfigError("stop must exceed start", "--points");
  return mc::detuning_grid(start, stop, n);
}

int cmd_scan(const ScanArgs& a, unsigned threads) {
  const auto doc = load_config(a.config);
  const auto grid = parse_grid(a.points);
  const fs::path out(a.out_dir);
  const fs::path point_dir = out / "points";
  ensure_dir(point_dir);
  json manifest = manifest_base("scan", doc);
  manifest["grid"] = {{"spec", a.points}, {"delta_lambda_pm", json::array()}};
  for (double g : grid) manifest["grid"]["delta_lambda_pm"].push_back(g / units::pm);

  DipScan scan;
  scan.lambda0 = doc.experiment.source_a.lambda0;
  json point_records = json::array();
  std::size_t reused = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto cfg = mc::point_config(doc.experiment, grid[i]);
    const json identity = {{"software_version", kVersion}, {"config", io::to_json(cfg, doc.analysis)}};
    const std::string key = io::sha256_hex(identity.dump());
    char name[32];
    std::snprintf(name, sizeof name, "point_%04zu.json", i);
    const fs::path path = point_dir / name;

    std::optional<ScanPoint> point;
    if (fs::exists(path)) {
      try {
        const json prev = io::read_json_file(path);
        if (prev.value("key", "") == key) point = io::scan_point_from_json(prev.at("point"), "point");
      } catch (const Error&) {
      } catch (const json::exception&) {
      }
    }
    if (point) {
      ++reused;
      std::cerr << "point " << i + 1 << "/" << grid.size() << ": reused " << path.filename().string() << "\n";
    } else {
      try {
        point = mc::measure_point(mc::simulate_run(cfg, threads), doc.analysis);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(e.detail()) + " (scan point " + std::to_string(i) + ")", e.key_path());
      }
      io::write_json_file(path, {{"key", key}, {"index", i}, {"config", identity["config"]},
                                 {"point", io::to_json(*point)}});
      std::cerr << "point " << i + 1 << "/" << grid.size() << ": delta_lambda " << grid[i] / units::pm
                << " pm, coincidences " << point->coincidences << ", accidentals " << point->accidentals << "\n";
    }
    scan.points.push_back(*point);
    point_records.push_back({{"file", "points/" + std::string(name)}, {"key", key}, {"seed", cfg.seed}});
  }

  scan.provenance = {{"producer", "homdip-scan"},
                     {"software_version", kVersion},
                     {"seed", doc.experiment.seed},
                     {"seed_scheme", kSeedScheme},
                     {"slots_per_point", doc.experiment.n_slots},
                     {"expected_visibility", mc::expected_visibility(doc.experiment, doc.analysis)},
                     {"predicted_visibility", mc::predicted_visibility(doc.experiment, doc.analysis)},
                     {"t_p_s", doc.experiment.source_a.t_p()},
                     {"pulse_fwhm_s", doc.experiment.source_a.fwhm},
                     {"fwhm_convention", "intensity"},
                     {"analysis", io::to_json(doc.analysis)}};
  const fs::path scan_path = out / "scan.json";
  io::write_json_file(scan_path, io::to_json(scan));
  manifest["points"] = point_records;
  manifest["outputs"] = {{"scan.json", io::file_sha256(scan_path)}};
  manifest["timestamps"]["finished"] = utc_now();
  io::write_json_file(out / "manifest.json", manifest);
  std::cout << "scan of " << grid.size() << " points (" << reused << " reused) written to " << scan_path.string()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::vector<std::string> inputs;
  std::string out_dir = ".";
  std::string window = "580ps";
  std::string post_select;
  std::string post_select_center = "auto";
  std::string slot_period = "2.32ns";
  std::string histogram_range = "2.9ns";
  std::string histogram_bin = "32ps";
  std::string normalize = "fit-baseline";
  std::string nominal_fwhm = "120ps";
};

tags::TimeTagStream load_stream(const fs::path& p) {
  try {
    if (p.extension() == ".csv") return tags::read_tags_csv(p);
    return tags::read_tags(p);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), std::string(e.what()) + " (while reading " + p.string() + ")");
  }
}

analysis::Normalization parse_normalization(const std::string& s) {
  const auto n = analysis::normalization_from_name(s);
  if (!n) throw ConfigError("expected fit-baseline, wings or accidentals", "--normalize");
  return *n;
}

int analyze_scan(const AnalyzeArgs& a, const fs::path& in) {
  const DipScan scan = io::scan_from_json(io::read_json_file(in));
  scan.validate();
  analysis::NormalizeOptions opt;
  opt.strategy = parse_normalization(a.normalize);
  opt.nominal_t_p = optics::tp_from_fwhm(parse_duration(a.nominal_fwhm));
  const auto nd = analysis::normalize_dip(scan, opt);

  const fs::path out(a.out_dir);
  ensure_dir(out);
  io::write_text_file(out / "normalized.csv", io::points_csv(nd.points, nullptr));
  json pts = json::array();
  for (const auto& p : nd.points) {
    pts.push_back({{"delta_lambda_pm", p.delta_lambda / units::pm}, {"value", p.value}, {"sigma", p.sigma}});
  }
  json doc = {{"input", in.string()},
              {"input_sha256", io::file_sha256(in)},
              {"normalization", analysis::to_string(nd.strategy)},
              {"baseline", nd.baseline},
              {"nominal_pulse_fwhm_s", parse_duration(a.nominal_fwhm)},
              {"points", pts}};
  io::write_json_file(out / "normalized.json", doc);
  std::cout << "normalized " << nd.points.size() << " points (" << analysis::to_string(nd.strategy)
            << ", baseline " << nd.baseline << ") -> " << (out / "normalized.csv").string() << "\n";
  return 0;
}

int analyze_tags(const AnalyzeArgs& a, const fs::path& p1, const fs::path& p2, std::optional<double> duration) {
  auto s1 = load_stream(p1);
  auto s2 = load_stream(p2);
  const double period = parse_duration(a.slot_period);
  json thresholds = {{"window_s", parse_duration(a.window)},
                     {"slot_period_s", period},
                     {"histogram_range_s", parse_duration(a.histogram_range)},
                     {"histogram_bin_s", parse_duration(a.histogram_bin)}};
  const std::array<std::size_t, 2> raw_singles{s1.size(), s2.size()};

  if (!a.post_select.empty()) {
    const double width = parse_duration(a.post_select);
    double center = 0.0;
    if (a.post_select_center == "auto") {
      const auto merged = tags::merge(s1, s2);
      const double res = merged.resolution;
      // phase bin of half the tag resolution when that divides the period
      double bin = res;
      for (double b : {0.5 * res, res, 8e-12, 1e-12}) {
        const double n = period / b;
        if (std::abs(n - std::round(n)) < 1e-6 * n) {
          bin = b;
          break;
        }
      }
      center = tags::estimate_pulse_shape(tags::slot_phase_histogram(merged, period, bin)).center;
    } else {
      center = parse_duration(a.post_select_center);
    }
    s1 = tags::post_select(s1, period, center, width);
    s2 = tags::post_select(s2, period, center, width);
    thresholds["post_select"] = {{"width_s", width}, {"center_s", center},
                                 {"center_source", a.post_select_center == "auto" ? "estimated" : "given"}};
  }

  tags::CoincidenceOptions opt;
  opt.window = thresholds["window_s"];
  opt.histogram_range = thresholds["histogram_range_s"];
  opt.histogram_bin = thresholds["histogram_bin_s"];
  opt.duration = duration;
  const auto r = tags::count_coincidences(s1, s2, opt);

  const fs::path out(a.out_dir);
  ensure_dir(out);
  io::write_text_file(out / "histogram.csv", io::histogram_csv(r.histogram));
  json doc = {{"inputs", {{p1.string(), io::file_sha256(p1)}, {p2.string(), io::file_sha256(p2)}}},
              {"thresholds", thresholds},
              {"window_s", r.window},
              {"count", r.count},
              {"singles", r.singles},
              {"singles_before_post_select", raw_singles},
              {"duration_s", r.duration},
              {"accidental_estimate", r.accidental_estimate},
              {"histogram_file", "histogram.csv"},
              {"histogram_total", r.histogram.total()}};
  io::write_json_file(out / "coincidences.json", doc);
  std::cout << "coincidences: " << r.count << " (window " << r.window / units::ps << " ps)\n"
            << "  singles: " << r.singles[0] << ", " << r.singles[1] << "\n"
            << "  accidental estimate: " << r.accidental_estimate << "\n"
            << "  written to " << (out / "coincidences.json").string() << "\n";
  return 0;
}

int cmd_analyze(const AnalyzeArgs& a) {
  if (a.inputs.size() == 1) {
    const fs::path in(a.inputs[0]);
    if (fs::is_directory(in)) {
      std::optional<double> duration;
      if (fs::exists(in / "manifest.json")) {
        const json m = io::read_json_file(in / "manifest.json");
        if (m.contains("run") && m["run"].contains("duration_s")) duration = m["run"]["duration_s"].get<double>();
      }
      return analyze_tags(a, in / "channel_1.htag", in / "channel_2.htag", duration);
    }
    return analyze_scan(a, in);
  }
  if (a.inputs.size() == 2) return analyze_tags(a, a.inputs[0], a.inputs[1], std::nullopt);
  throw ConfigError("expected a scan JSON, a simulate output directory, or two tag files", "inputs");
}

// ---------------------------------------------------------------------------
// fit and report

struct FitArgs {
  std::string input;
  std::string out_dir = ".";
  std::string normalize = "fit-baseline";
  int bootstrap = 0;
  std::uint64_t seed = 1;
  std::string nominal_fwhm = "120ps";
  std::string lambda0 = "1550nm";
};

std::string fmt(double v, int prec) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(prec) << v;
  return s.str();
}

std::string report_text(const json& f) {
  std::ostringstream o;
  const double ps = units::ps, pm = units::pm;
  o << "HOM dip fit (" << f.value("normalization", "raw counts") << " normalization)\n";
  if (f.contains("input")) o << "  input          " << f["input"].get<std::string>() << "\n";
  o << "  visibility     V   = " << fmt(f["visibility"], 5) << " +- " << fmt(f["visibility_sigma"], 5)
    << " (covariance)\n";
  if (f.contains("bootstrap")) {
    o << "                       +- " << fmt(f["bootstrap"]["sigma_visibility"], 5) << " (bootstrap, "
      << f["bootstrap"]["resamples"].get<int>() << " resamples, " << f["bootstrap"]["failures"].get<int>()
      << " failed)\n";
  }
  o << "  pulse width    t_p = " << fmt(f["t_p_s"].get<double>() / ps, 3) << " +- "
    << fmt(f["t_p_sigma_s"].get<double>() / ps, 3) << " ps (intensity FWHM "
    << fmt(f["pulse_fwhm_s"].get<double>() / ps, 2) << " ps)\n";
  o << "  dip half-width     = " << fmt(f["dip_half_width_m"].get<double>() / pm, 3) << " pm at "
    << fmt(f["lambda0_m"].get<double>() / units::nm, 3) << " nm\n";
  o << "  centre             = " << fmt(f["center_m"].get<double>() / pm, 4) << " +- "
    << fmt(f["center_sigma_m"].get<double>() / pm, 4) << " pm\n";
  o << "  baseline       A   = " << f["baseline"].get<double>() << " +- " << f["baseline_sigma"].get<double>()
    << "\n";
  o << "  chi2/dof           = " << fmt(f["chi2"], 2) << "/" << f["dof"].get<int>() << " = "
    << fmt(f["chi2_per_dof"], 3) << "\n";
  if (f.contains("point_estimate")) {
    o << "  point estimate V   = " << fmt(f["point_estimate"]["visibility"], 5) << " +- "
      << fmt(f["point_estimate"]["sigma"], 5) << "\n";
  }
  if (f.contains("expected_visibility")) {
    o << "  expected V         = " << fmt(f["expected_visibility"], 5) << " (from scan configuration)\n";
  }
  std::vector<std::string> flags;
  flags.push_back(f["converged"].get<bool>() ? "converged" : "NOT CONVERGED");
  if (f["at_bound"].get<bool>()) flags.push_back("V AT BOUND");
  if (f.value("width_at_bound", false)) flags.push_back("WIDTH AT RESOLUTION BOUND");
  if (f["degenerate"].get<bool>()) flags.push_back("DEGENERATE (pseudo-inverse covariance)");
  o << "  status             ";
  for (std::size_t i = 0; i < flags.size(); ++i) o << (i ? ", " : "") << flags[i];
  o << " after " << f["iterations"].get<int>() << " iterations\n";
  o << "\n  start   V0      t_p0[ps]   ->  V         t_p[ps]    chi2        iter  conv\n";
  int k = 0;
  for (const auto& s : f["starts"]) {
    o << "  " << std::setw(5) << ++k << "   " << fmt(s["initial"][1], 3) << "   " << std::setw(8)
      << fmt(s["initial"][2].get<double>() / ps, 2) << "   ->  " << fmt(s["final"][1], 5) << "   " << std::setw(8)
      << fmt(s["final"][2].get<double>() / ps, 3) << "   " << std::setw(10) << fmt(s["chi2"], 3) << "  "
      << std::setw(4) << s["iterations"].get<int>() << "  " << (s["converged"].get<bool>() ? "yes" : "no") << "\n";
  }
  return o.str();
}

int cmd_fit(const FitArgs& a, unsigned threads) {
  const fs::path in(a.input);
  if (!fs::exists(in)) throw IoError("cannot open " + in.string());
  const double nominal_fwhm = parse_duration(a.nominal_fwhm);
  analysis::FitOptions fo;
  fo.nominal_t_p = optics::tp_from_fwhm(nominal_fwhm);

  std::vector<analysis::DipPoint> pts;
  double lambda0 = parse_length(a.lambda0);
  json extra = json::object();
  std::string normalization = "as given";
  if (in.extension() == ".csv") {
    pts = io::read_points_csv(in);
  } else {
    const DipScan scan = io::scan_from_json(io::read_json_file(in));
    scan.validate();
    lambda0 = scan.lambda0;
    analysis::NormalizeOptions no;
    no.strategy = parse_normalization(a.normalize);
    no.nominal_t_p = fo.nominal_t_p;
    const auto nd = analysis::normalize_dip(scan, no);
    pts = nd.points;
    normalization = analysis::to_string(nd.strategy);
    extra["raw_baseline"] = nd.baseline;
    if (scan.provenance.contains("expected_visibility")) {
      extra["expected_visibility"] = scan.provenance["expected_visibility"];
    }
    json singles = json::array();
    for (int ch = 0; ch < 2; ++ch) {
      try {
        const auto t = analysis::singles_constancy(scan, ch);
        singles.push_back({{"channel", ch}, {"chi2", t.chi2}, {"dof", t.dof}, {"p_value", t.p_value}});
      } catch (const Error&) {
      }
    }
    extra["singles_constancy"] = singles;
  }

  const auto fit = analysis::fit_dip(pts, lambda0, fo);
  json doc = io::to_json(fit);
  doc["input"] = in.string();
  doc["input_sha256"] = io::file_sha256(in);
  doc["normalization"] = normalization;
  doc["nominal_pulse_fwhm_s"] = nominal_fwhm;
  doc.update(extra);
  try {
    const auto e = analysis::visibility_point_estimate(pts, lambda0, fo.nominal_t_p);
    doc["point_estimate"] = {{"visibility", e.visibility}, {"sigma", e.sigma}};
  } catch (const Error&) {
  }
  if (a.bootstrap > 0) {
    const auto b = analysis::bootstrap_uncertainty(pts, lambda0, a.bootstrap, a.seed, fo, threads);
    doc["bootstrap"] = {{"sigma_visibility", b.sigma_visibility},
                        {"mean_visibility", b.mean_visibility},
                        {"resamples", b.resamples},
                        {"failures", b.failures},
                        {"seed", a.seed}};
  }

  const fs::path out(a.out_dir);
  ensure_dir(out);
  io::write_json_file(out / "fit.json", doc);
  io::write_text_file(out / "plot.csv", io::points_csv(pts, &fit));
  const std::string text = report_text(doc);
  io::write_text_file(out / "report.txt", text);
  std::cout << text;
  if (!fit.converged) std::cerr << "warning: best start did not converge; see the start table above\n";
  return 0;
}

int cmd_report(const std::string& input) {
  fs::path in(input);
  if (fs::is_directory(in)) in /= "fit.json";
  const json doc = io::read_json_file(in);
  if (doc.value("format", "") != io::kFitFormat) throw ConfigError("not a fit document", in.string());
  std::cout << report_text(doc);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hong-Ou-Mandel dip simulator and analyzer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  unsigned threads = default_worker_count();
  app.add_option("--threads", threads, "worker threads (default: HOMDIP_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "simulate one run and write per-channel tag files");
  add_config_flags(simulate, sim.config);
  simulate->add_option("-o,--out", sim.out_dir, "output directory")->required();
  simulate->add_flag("--csv", sim.csv, "also write channel,time_ps CSV files");

  ScanArgs sc;
  auto* scan = app.add_subcommand("scan", "simulate a detuning scan (resumable)");
  add_config_flags(scan, sc.config);
  scan->add_option("-o,--out", sc.out_dir, "output directory")->required();
  scan->add_option("--points", sc.points, "detuning grid start:stop:n (lengths, e.g. -60pm:60pm:41)");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "coincidences from tag files, or normalized points from a scan");
  analyze->add_option("inputs", an.inputs, "scan.json | simulate output dir | two tag files")->required();
  analyze->add_option("-o,--out", an.out_dir, "output directory");
  analyze->add_option("--window", an.window, "coincidence window");
  analyze->add_option("--post-select", an.post_select, "post-selection width, e.g. 175ps (default: off)");
  analyze->add_option("--post-select-center", an.post_select_center, "window centre within the slot, or auto");
  analyze->add_option("--slot-period", an.slot_period, "slot period");
  analyze->add_option("--histogram-range", an.histogram_range, "histogram half range");
  analyze->add_option("--histogram-bin", an.histogram_bin, "histogram bin width");
  analyze->add_option("--normalize", an.normalize, "fit-baseline | wings | accidentals");
  analyze->add_option("--nominal-fwhm", an.nominal_fwhm, "pulse FWHM used to locate the wings");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "fit the Gaussian dip to a scan or points CSV");
  fit->add_option("input", fa.input, "scan.json or points CSV")->required();
  fit->add_option("-o,--out", fa.out_dir, "output directory");
  fit->add_option("--normalize", fa.normalize, "fit-baseline | wings | accidentals");
  fit->add_option("--bootstrap", fa.bootstrap, "bootstrap resamples (>= 100; 0 disables)");
  fit->add_option("--seed", fa.seed, "bootstrap seed");
  fit->add_option("--nominal-fwhm", fa.nominal_fwhm, "pulse FWHM seeding the multi-start");
  fit->add_option("--lambda0", fa.lambda0, "centre wavelength for points CSV input");

  std::string report_input;
  auto* report = app.add_subcommand("report", "print the summary of a fit");
  report->add_option("input", report_input, "fit.json or a fit output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return cmd_simulate(sim, threads);
    if (*scan) return cmd_scan(sc, threads);
    if (*analyze) return cmd_analyze(an);
    if (*fit) return cmd_fit(fa, threads);
    if (*report) return cmd_report(report_input);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
