#include "cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "bgc/barrier_analysis.hpp"
#include "bgc/ensemble_io.hpp"
#include "bgc/errors.hpp"
#include "bgc/oup.hpp"
#include "bgc/psi.hpp"
#include "bgc/rng.hpp"
#include "bgc/sde_engine.hpp"
#include "bgc/serialization.hpp"

namespace bgc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Range {
  double start = 0.0;
  double stop = 0.0;
  std::size_t count = 0;
};

// `start:stop:count`
Range parse_range(const std::string& option, const std::string& text) {
  std::string_view parts[3];
  std::size_t n = 0;
  std::size_t begin = 0;
  while (n < 3) {
    const auto colon = text.find(':', begin);
    parts[n++] = std::string_view(text).substr(begin, colon - begin);
    if (colon == std::string::npos) break;
    begin = colon + 1;
  }
  auto fail = [&] {
    return UsageError(option + ": expected start:stop:count, got '" + text + "'");
  };
  if (n != 3 || text.find(':', begin) != std::string::npos) throw fail();
  Range r;
  auto number = [&](std::string_view s, double& v) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw fail();
  };
  number(parts[0], r.start);
  number(parts[1], r.stop);
  auto [ptr, ec] = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), r.count);
  if (ec != std::errc{} || ptr != parts[2].data() + parts[2].size()) throw fail();
  if (r.count < 2) throw UsageError(option + ": count must be >= 2");
  return r;
}

PsiSpec parse_psi_option(const std::string& text) {
  try {
    return parse_psi(text);
  } catch (const PreconditionError& e) {
    throw UsageError(std::string("--psi: ") + e.what());
  }
}

struct Common {
  std::string out;
  unsigned threads = 0;
};

fs::path resolve_out(const std::string& out) {
  if (!out.empty()) return out;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "bgc-out";
}

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--out", common.out,
                  std::string("Output directory (default $") + kOutputDirEnv + " or ./bgc-out)");
  cmd->add_option("--threads", common.threads, "Worker threads, 0 = all cores");
}

struct SimulateArgs {
  std::string mode = "transform";
  std::string psi = "parabolic:omega=100";
  std::string dt_rule = "paper-zero";
  double mu = 0.0;
  double sigma = 1.0;
  double horizon = 1000.0;
  double x0 = 0.0;
  std::size_t steps = 1001;
  std::size_t paths = 2000;
  std::uint64_t seed = 42;
  bool allow_any_psi = false;
};

void add_simulation_options(CLI::App* cmd, SimulateArgs& a) {
  cmd->add_option("--mode", a.mode, "unconstrained | bgc-drift | bgc-diffusion | transform")
      ->capture_default_str();
  cmd->add_option("--psi", a.psi, "Constraint, kind:key=value,...")->capture_default_str();
  cmd->add_option("--dt-rule", a.dt_rule, "paper-zero | uniform")->capture_default_str();
  cmd->add_option("--mu", a.mu, "Constant drift")->capture_default_str();
  cmd->add_option("--sigma", a.sigma, "Constant diffusion")->capture_default_str();
  cmd->add_option("--horizon", a.horizon, "Time horizon T")->capture_default_str();
  cmd->add_option("--x0", a.x0, "Initial value (unconstrained mode only)")->capture_default_str();
  cmd->add_option("--steps", a.steps, "Grid points including t = 0")->capture_default_str();
  cmd->add_option("--paths", a.paths, "Number of paths")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Master seed")->capture_default_str();
  cmd->add_flag("--allow-any-psi", a.allow_any_psi, "Permit non-parabolic psi in transform mode");
}

SimulationConfig to_config(const SimulateArgs& a) {
  SimulationConfig c;
  const auto mode = bgc_mode_from_string(a.mode);
  if (!mode) throw UsageError("--mode: unknown mode '" + a.mode + "'");
  const auto rule = dt_rule_from_string(a.dt_rule);
  if (!rule) throw UsageError("--dt-rule: unknown rule '" + a.dt_rule + "'");
  c.mode = *mode;
  c.dt_rule = *rule;
  c.psi = parse_psi_option(a.psi);
  c.mu = a.mu;
  c.sigma = a.sigma;
  c.horizon = a.horizon;
  c.x0 = a.x0;
  c.steps = a.steps;
  c.n_paths = a.paths;
  c.master_seed = a.seed;
  c.allow_any_transform_psi = a.allow_any_psi;
  c.validate();
  return c;
}

struct OupArgs {
  double kappa = 0.01;
  double alpha = 25.0;
  double sigma = 1.0;
  double x0 = 0.0;
  std::size_t steps = 1001;
  double horizon = 1000.0;
  std::string scheme = "exact";
  std::size_t paths = 2000;
  std::uint64_t seed = 42;
};

OupConfig to_config(const OupArgs& a) {
  OupConfig c;
  c.params = {a.kappa, a.alpha, a.sigma, a.x0};
  const auto scheme = oup_scheme_from_string(a.scheme);
  if (!scheme) throw UsageError("--scheme: unknown scheme '" + a.scheme + "'");
  c.scheme = *scheme;
  c.steps = a.steps;
  c.horizon = a.horizon;
  c.n_paths = a.paths;
  c.master_seed = a.seed;
  c.validate();
  return c;
}

std::string ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir.string();
}

// Writes `<subcommand>.manifest.json` listing the invocation and output digests.
void write_run_manifest(const fs::path& dir, const std::string& subcommand,
                        const std::vector<std::string>& args,
                        const std::vector<std::pair<std::string, std::string>>& outputs) {
  json files = json::array();
  for (const auto& [name, text] : outputs) {
    files.push_back({{"file", name}, {"content_digest", content_digest(text)}});
  }
  const json j = {
      {"subcommand", subcommand},
      {"arguments", args},
      {"tool_version", std::string(tool_version())},
      {"seed_algorithm_id", std::string(kSeedAlgorithmId)},
      {"outputs", files},
  };
  write_file_atomic(dir / (subcommand + ".manifest.json"), j.dump(2) + "\n");
}

// Writes each (name, text) pair atomically, then the run manifest.
void emit(const fs::path& dir, const std::string& subcommand, const std::vector<std::string>& args,
          const std::vector<std::pair<std::string, std::string>>& outputs, std::ostream& out) {
  ensure_dir(dir);
  for (const auto& [name, text] : outputs) {
    write_file_atomic(dir / name, text);
    out << "wrote " << (dir / name).string() << '\n';
  }
  write_run_manifest(dir, subcommand, args, outputs);
}

double max_abs_value(const PathEnsemble& e) {
  double m = 0.0;
  for (const auto& p : e.paths) {
    for (double v : p.values) {
      if (std::isfinite(v)) m = std::max(m, std::abs(v));
    }
  }
  return m;
}

json fit_json(const BarrierFit& fit) { return json::parse(to_json(fit)); }

int cmd_simulate(const SimulateArgs& a, const Common& common, const std::vector<std::string>&,
                 std::ostream& out) {
  const auto config = to_config(a);
  const auto ensemble = simulate_ensemble(config, common.threads);
  const fs::path dir = resolve_out(common.out);
  const auto manifest = write_ensemble(ensemble, dir);
  out << "wrote " << (dir / kPathsFile).string() << " (" << manifest.content_digest << ")\n";
  if (ensemble.diverged_count() < ensemble.n_paths()) {
    write_file_atomic(dir / kSummaryFile, to_json(summarize(ensemble)) + "\n");
    out << "wrote " << (dir / kSummaryFile).string() << '\n';
  }
  out << "diverged paths: " << ensemble.diverged_count() << '\n';
  return kOk;
}

int cmd_simulate_oup(const OupArgs& a, const Common& common, std::ostream& out) {
  const auto config = to_config(a);
  const auto ensemble = simulate_oup(config, common.threads);
  const fs::path dir = resolve_out(common.out);
  const auto manifest = write_ensemble(ensemble, dir);
  write_file_atomic(dir / kSummaryFile, to_json(summarize(ensemble)) + "\n");
  out << "wrote " << (dir / kPathsFile).string() << " (" << manifest.content_digest << ")\n";
  out << "wrote " << (dir / kSummaryFile).string() << '\n';
  return kOk;
}

struct FitArgs {
  std::string in;
  double quantile = 0.995;
  std::string side = "joint";
  bool free_offset = false;
  bool no_verify = false;
};

int cmd_fit_barrier(const FitArgs& a, const Common& common, const std::vector<std::string>& args,
                    std::ostream& out) {
  const auto side = barrier_side_from_string(a.side);
  if (!side) throw UsageError("--side: expected lower, upper or joint, got '" + a.side + "'");
  const auto ensemble = read_ensemble(a.in, !a.no_verify);
  const auto envelope = empirical_envelope(ensemble, a.quantile);
  const auto fit = fit_barrier(envelope, *side, !a.free_offset, ensemble);
  const auto containment = check_barrier_bound(ensemble, fit);

  std::ostringstream env_csv;
  write_envelope_csv(envelope, env_csv);
  const fs::path dir = common.out.empty() ? fs::path(a.in) : fs::path(common.out);
  emit(dir, "fit-barrier", args,
       {{"barrier_fit.json", to_json(fit) + "\n"},
        {"envelope.csv", env_csv.str()},
        {"containment.json", to_json(containment) + "\n"}},
       out);
  out << "A = " << format_double(fit.A) << ", theta = " << format_double(fit.theta)
      << ", C = " << format_double(fit.C) << ", containment = " << format_double(containment.overall)
      << '\n';
  return kOk;
}

struct BandArgs {
  std::string in;
  std::size_t bins = 256;
  std::size_t window = 0;
  bool no_verify = false;
};

int cmd_detect_bands(const BandArgs& a, const Common& common, const std::vector<std::string>& args,
                     std::ostream& out) {
  const auto ensemble = read_ensemble(a.in, !a.no_verify);
  const auto report = detect_bands(ensemble, a.bins,
                                   a.window ? std::optional<std::size_t>(a.window) : std::nullopt);
  const fs::path dir = common.out.empty() ? fs::path(a.in) : fs::path(common.out);
  emit(dir, "detect-bands", args, {{"bands.json", to_json(report) + "\n"}}, out);
  out << "peaks = " << report.peaks.size()
      << ", score = " << format_double(report.multimodality_score) << '\n';
  return kOk;
}

struct CompareArgs {
  SimulateArgs sim;
  double kappa = 0.01;
  double alpha = 25.0;
  double quantile = 0.995;
  std::string side = "joint";
  bool save_runs = false;
};

int cmd_compare(const CompareArgs& a, const Common& common, const std::vector<std::string>& args,
                std::ostream& out) {
  const auto side = barrier_side_from_string(a.side);
  if (!side) throw UsageError("--side: expected lower, upper or joint, got '" + a.side + "'");
  const auto config = to_config(a.sim);
  SimulationConfig twin_config = config;
  twin_config.mode = BgcMode::Unconstrained;
  OupConfig oup_config;
  oup_config.params = {a.kappa, a.alpha, config.sigma, 0.0};
  oup_config.steps = config.steps;
  oup_config.horizon = config.horizon;
  oup_config.scheme = OupScheme::Exact;
  oup_config.master_seed = config.master_seed;
  oup_config.n_paths = config.n_paths;
  oup_config.validate();

  const auto bgc = simulate_ensemble(config, common.threads);
  const auto twin = simulate_ensemble(twin_config, common.threads);
  const auto oup = simulate_oup(oup_config, common.threads);

  const auto bgc_env = empirical_envelope(bgc, a.quantile);
  const auto twin_env = empirical_envelope(twin, a.quantile);
  const auto oup_env = empirical_envelope(oup, a.quantile);
  const auto fit = fit_barrier(bgc_env, *side, true, bgc);
  const auto bgc_containment = check_barrier_bound(bgc, fit);
  const auto oup_containment = check_barrier_bound(oup, fit);
  const auto oup_summary = summarize(oup);

  bool raw_matches = config.mode == BgcMode::Transform;
  for (std::size_t i = 0; raw_matches && i < bgc.n_paths(); ++i) {
    raw_matches = bgc.paths[i].raw_values == twin.paths[i].values;
  }

  const json report = {
      {"bgc",
       {{"mode", std::string(to_string(config.mode))},
        {"psi", format_psi(config.psi)},
        {"fit", fit_json(fit)},
        {"containment", bgc_containment.overall},
        {"max_abs", max_abs_value(bgc)},
        {"diverged", bgc.diverged_count()}}},
      {"twin",
       {{"max_abs", max_abs_value(twin)},
        {"diverged", twin.diverged_count()},
        {"raw_values_match_twin", raw_matches}}},
      {"oup",
       {{"kappa", a.kappa},
        {"alpha", a.alpha},
        {"sigma", config.sigma},
        {"analytic_terminal_mean", oup_mean(oup_config.params, config.horizon)},
        {"sample_terminal_mean", oup_summary.mean_path.back()},
        {"containment_under_bgc_fit", oup_containment.overall}}},
      {"association",
       {{"A", fit.A}, {"alpha", a.alpha}, {"theta", fit.theta}, {"kappa", a.kappa}}},
      {"quantile", a.quantile},
  };

  std::ostringstream csv;
  csv << "t,bgc_lower,bgc_upper,twin_lower,twin_upper,barrier_lower,barrier_upper,"
         "barrier_rate,oup_lower,oup_upper,oup_sample_mean,oup_analytic_mean\n";
  for (std::size_t j = 0; j < bgc.steps(); ++j) {
    const double t = bgc.times[j];
    csv << format_double(t) << ',' << format_double(bgc_env.lower[j]) << ','
        << format_double(bgc_env.upper[j]) << ',' << format_double(twin_env.lower[j]) << ','
        << format_double(twin_env.upper[j]) << ',' << format_double(fit.lower_at(t)) << ','
        << format_double(fit.upper_at(t)) << ',' << format_double(fit.rate_at(t)) << ','
        << format_double(oup_env.lower[j]) << ',' << format_double(oup_env.upper[j]) << ','
        << format_double(oup_summary.mean_path[j]) << ','
        << format_double(oup_mean(oup_config.params, t)) << '\n';
  }

  const fs::path dir = resolve_out(common.out);
  emit(dir, "compare", args, {{"compare.json", report.dump(2) + "\n"}, {"overlay.csv", csv.str()}},
       out);
  if (a.save_runs) {
    write_ensemble(bgc, dir / "bgc");
    write_ensemble(twin, dir / "twin");
    write_ensemble(oup, dir / "oup");
    out << "wrote run directories bgc/, twin/, oup/ under " << dir.string() << '\n';
  }
  out << "A = " << format_double(fit.A) << ", theta = " << format_double(fit.theta)
      << ", bgc containment = " << format_double(bgc_containment.overall)
      << ", oup containment = " << format_double(oup_containment.overall) << '\n';
  return kOk;
}

struct FieldArgs {
  std::string psi = "parabolic:omega=100";
  std::string x = "-50:50:101";
  std::string t = "0:1000:11";
  bool no_force = false;
};

int cmd_export_field(const FieldArgs& a, const Common& common, const std::vector<std::string>& args,
                     std::ostream& out) {
  const auto spec = parse_psi_option(a.psi);
  const auto xr = parse_range("--x", a.x);
  const auto tr = parse_range("--t", a.t);
  auto grid = sample_surface(spec, {xr.start, xr.stop}, {tr.start, tr.stop}, xr.count, tr.count);
  if (!a.no_force) grid = export_vector_field(spec, grid);

  std::ostringstream csv;
  write_field_csv(grid, csv);
  const json sidecar = {
      {"psi", json::parse(to_json(spec))},
      {"x", {{"start", xr.start}, {"stop", xr.stop}, {"count", xr.count}}},
      {"t", {{"start", tr.start}, {"stop", tr.stop}, {"count", tr.count}}},
      {"columns", grid.force ? json{"t", "x", "psi", "force"} : json{"t", "x", "psi"}},
  };
  emit(resolve_out(common.out), "export-field", args,
       {{"field.csv", csv.str()}, {"field.json", sidecar.dump(2) + "\n"}}, out);
  return kOk;
}

struct ClassifyArgs {
  std::string psi = "parabolic:omega=100";
  std::string x = "-50:50:101";
  double t = 0.0;
  double tolerance = 1e-9;
};

int cmd_classify(const ClassifyArgs& a, const Common& common, const std::vector<std::string>& args,
                 std::ostream& out) {
  const auto spec = parse_psi_option(a.psi);
  const auto xr = parse_range("--x", a.x);
  const auto grid = linspace(xr.start, xr.stop, xr.count);
  const auto report = classify_convexity(spec, grid, a.tolerance, a.t);
  emit(resolve_out(common.out), "classify-psi", args, {{"convexity.json", to_json(report) + "\n"}},
       out);
  out << "convex=" << report.is_convex << " strictly=" << report.is_strictly_convex
      << " bidirectional=" << report.is_bidirectional
      << " bidirectionally_convex=" << report.is_bidirectionally_convex << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bi-directional grid constrained process toolkit", "bgc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version()));

  Common common;
  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a path ensemble");
  add_simulation_options(simulate, sim);
  add_common(simulate, common);

  OupArgs oup;
  auto* simulate_oup_cmd = app.add_subcommand("simulate-oup", "Simulate an Ornstein-Uhlenbeck ensemble");
  simulate_oup_cmd->add_option("--kappa", oup.kappa, "Mean-reversion speed")->capture_default_str();
  simulate_oup_cmd->add_option("--alpha", oup.alpha, "Long-term mean")->capture_default_str();
  simulate_oup_cmd->add_option("--sigma", oup.sigma, "Diffusion")->capture_default_str();
  simulate_oup_cmd->add_option("--x0", oup.x0, "Initial value")->capture_default_str();
  simulate_oup_cmd->add_option("--steps", oup.steps, "Grid points including t = 0")->capture_default_str();
  simulate_oup_cmd->add_option("--horizon", oup.horizon, "Time horizon T")->capture_default_str();
  simulate_oup_cmd->add_option("--scheme", oup.scheme, "exact | euler")->capture_default_str();
  simulate_oup_cmd->add_option("--paths", oup.paths, "Number of paths")->capture_default_str();
  simulate_oup_cmd->add_option("--seed", oup.seed, "Master seed")->capture_default_str();
  add_common(simulate_oup_cmd, common);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit-barrier", "Fit the hidden barrier to a run's envelope");
  fit_cmd->add_option("--in", fit.in, "Run directory")->required();
  fit_cmd->add_option("--quantile", fit.quantile, "Envelope quantile in (0.5, 1]")->capture_default_str();
  fit_cmd->add_option("--side", fit.side, "lower | upper | joint")->capture_default_str();
  fit_cmd->add_flag("--free-offset", fit.free_offset, "Fit the offset C (single-side fits)");
  fit_cmd->add_flag("--no-verify", fit.no_verify, "Skip the digest check");
  add_common(fit_cmd, common);

  BandArgs bands;
  auto* bands_cmd = app.add_subcommand("detect-bands", "Histogram banding report for a run");
  bands_cmd->add_option("--in", bands.in, "Run directory")->required();
  bands_cmd->add_option("--bins", bands.bins, "Histogram bins (>= 32)")->capture_default_str();
  bands_cmd->add_option("--window", bands.window, "Smoothing window in bins (default bins/64)");
  bands_cmd->add_flag("--no-verify", bands.no_verify, "Skip the digest check");
  add_common(bands_cmd, common);

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Constrained run vs unconstrained twin and OUP");
  add_simulation_options(compare, cmp.sim);
  compare->add_option("--kappa", cmp.kappa, "OUP mean-reversion speed")->capture_default_str();
  compare->add_option("--alpha", cmp.alpha, "OUP long-term mean")->capture_default_str();
  compare->add_option("--quantile", cmp.quantile, "Envelope quantile")->capture_default_str();
  compare->add_option("--side", cmp.side, "lower | upper | joint")->capture_default_str();
  compare->add_flag("--save-runs", cmp.save_runs, "Also write the three ensembles");
  add_common(compare, common);

  FieldArgs field;
  auto* field_cmd = app.add_subcommand("export-field", "Sample psi and its restoring force on a grid");
  field_cmd->add_option("--psi", field.psi, "Constraint, kind:key=value,...")->capture_default_str();
  field_cmd->add_option("--x", field.x, "x grid start:stop:count")->capture_default_str();
  field_cmd->add_option("--t", field.t, "t grid start:stop:count")->capture_default_str();
  field_cmd->add_flag("--no-force", field.no_force, "Omit the force column");
  add_common(field_cmd, common);

  ClassifyArgs classify;
  auto* classify_cmd = app.add_subcommand("classify-psi", "Convexity report for psi");
  classify_cmd->add_option("--psi", classify.psi, "Constraint, kind:key=value,...")->capture_default_str();
  classify_cmd->add_option("--x", classify.x, "Symmetric x grid start:stop:count")->capture_default_str();
  classify_cmd->add_option("--t", classify.t, "Time at which to classify")->capture_default_str();
  classify_cmd->add_option("--tolerance", classify.tolerance, "Second-difference tolerance")
      ->capture_default_str();
  add_common(classify_cmd, common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, common, args, out);
    if (*simulate_oup_cmd) return cmd_simulate_oup(oup, common, out);
    if (*fit_cmd) return cmd_fit_barrier(fit, common, args, out);
    if (*bands_cmd) return cmd_detect_bands(bands, common, args, out);
    if (*compare) return cmd_compare(cmp, common, args, out);
    if (*field_cmd) return cmd_export_field(field, common, args, out);
    if (*classify_cmd) return cmd_classify(classify, common, args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const AnalysisError& e) {
    err << "analysis error: " << e.what() << '\n';
    return kAnalysis;
  } catch (const PreconditionError& e) {
    err << "precondition error: " << e.what() << '\n';
    return kPrecondition;
  } catch (const DomainError& e) {
    err << "precondition error: " << e.what() << '\n';
    return kPrecondition;
  } catch (const IoError& e) {
    err << "input error: " << e.what() << '\n';
    return kPrecondition;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << '\n';
    return kPrecondition;
  }
  return kUsage;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace bgc::cli
