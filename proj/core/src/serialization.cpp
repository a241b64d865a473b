#include "bgc/serialization.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "bgc/errors.hpp"
#include "json_codec.hpp"

namespace bgc {

using nlohmann::json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, result.ptr);
}

namespace detail {

void reject_unknown_keys(const json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  if (!j.is_object()) throw IoError("manifest: " + std::string(where) + " is not an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw IoError("manifest: unknown key '" + key + "' in " + std::string(where));
    }
  }
}

json psi_to_json(const PsiSpec& spec) {
  json j = {
      {"kind", std::string(to_string(spec.kind))},
      {"text", format_psi(spec)},
      {"omega", spec.omega},
      {"omega1", spec.omega1},
      {"omega2", spec.omega2},
      {"exponent", spec.exponent},
      {"splice", spec.splice},
  };
  if (spec.kind == PsiKind::Tabulated) {
    j["table_x"] = spec.table_x;
    j["table_y"] = spec.table_y;
  }
  return j;
}

PsiSpec psi_from_json(const json& j) {
  reject_unknown_keys(j, {"kind", "text", "omega", "omega1", "omega2", "exponent", "splice",
                          "table_x", "table_y"}, "psi");
  const auto kind = psi_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw IoError("manifest: unknown psi kind");
  PsiSpec spec;
  spec.kind = *kind;
  spec.omega = j.at("omega").get<double>();
  spec.omega1 = j.at("omega1").get<double>();
  spec.omega2 = j.at("omega2").get<double>();
  spec.exponent = j.at("exponent").get<int>();
  spec.splice = j.at("splice").get<bool>();
  if (j.contains("table_x")) spec.table_x = j.at("table_x").get<std::vector<double>>();
  if (j.contains("table_y")) spec.table_y = j.at("table_y").get<std::vector<double>>();
  return spec;
}

json config_to_json(const EnsembleSource& source) {
  if (const auto* cfg = std::get_if<SimulationConfig>(&source)) {
    return {
        {"process", "bgc"},
        {"mu", cfg->mu},
        {"sigma", cfg->sigma},
        {"steps", cfg->steps},
        {"horizon", cfg->horizon},
        {"dt_rule", std::string(to_string(cfg->dt_rule))},
        {"mode", std::string(to_string(cfg->mode))},
        {"psi", psi_to_json(cfg->psi)},
        {"x0", cfg->x0},
        {"master_seed", cfg->master_seed},
        {"n_paths", cfg->n_paths},
        {"allow_any_transform_psi", cfg->allow_any_transform_psi},
    };
  }
  const auto& oup = std::get<OupConfig>(source);
  return {
      {"process", "oup"},
      {"kappa", oup.params.kappa},
      {"alpha", oup.params.alpha},
      {"sigma", oup.params.sigma},
      {"x0", oup.params.x0},
      {"steps", oup.steps},
      {"horizon", oup.horizon},
      {"scheme", std::string(to_string(oup.scheme))},
      {"master_seed", oup.master_seed},
      {"n_paths", oup.n_paths},
  };
}

EnsembleSource config_from_json(const json& j) {
  const auto process = j.at("process").get<std::string>();
  if (process == "bgc") {
    reject_unknown_keys(j, {"process", "mu", "sigma", "steps", "horizon", "dt_rule", "mode", "psi",
                            "x0", "master_seed", "n_paths", "allow_any_transform_psi"}, "config");
    SimulationConfig cfg;
    cfg.mu = j.at("mu").get<double>();
    cfg.sigma = j.at("sigma").get<double>();
    cfg.steps = j.at("steps").get<std::size_t>();
    cfg.horizon = j.at("horizon").get<double>();
    const auto rule = dt_rule_from_string(j.at("dt_rule").get<std::string>());
    const auto mode = bgc_mode_from_string(j.at("mode").get<std::string>());
    if (!rule || !mode) throw IoError("manifest: unknown dt_rule or mode");
    cfg.dt_rule = *rule;
    cfg.mode = *mode;
    cfg.psi = psi_from_json(j.at("psi"));
    cfg.x0 = j.at("x0").get<double>();
    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    cfg.n_paths = j.at("n_paths").get<std::size_t>();
    cfg.allow_any_transform_psi = j.value("allow_any_transform_psi", false);
    return cfg;
  }
  if (process == "oup") {
    reject_unknown_keys(j, {"process", "kappa", "alpha", "sigma", "x0", "steps", "horizon", "scheme",
                            "master_seed", "n_paths"}, "config");
    OupConfig cfg;
    cfg.params.kappa = j.at("kappa").get<double>();
    cfg.params.alpha = j.at("alpha").get<double>();
    cfg.params.sigma = j.at("sigma").get<double>();
    cfg.params.x0 = j.at("x0").get<double>();
    cfg.steps = j.at("steps").get<std::size_t>();
    cfg.horizon = j.at("horizon").get<double>();
    const auto scheme = oup_scheme_from_string(j.at("scheme").get<std::string>());
    if (!scheme) throw IoError("manifest: unknown oup scheme");
    cfg.scheme = *scheme;
    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    cfg.n_paths = j.at("n_paths").get<std::size_t>();
    return cfg;
  }
  throw IoError("manifest: unknown process '" + process + "'");
}

}  // namespace detail

std::string to_json(const PsiSpec& spec) { return detail::psi_to_json(spec).dump(2); }

std::string to_json(const ConvexityReport& report) {
  json j = {
      {"is_convex", report.is_convex},
      {"is_strictly_convex", report.is_strictly_convex},
      {"strong_convexity_m", nullptr},
      {"is_bidirectional", report.is_bidirectional},
      {"is_bidirectionally_convex", report.is_bidirectionally_convex},
      {"grid_used",
       {{"x_min", report.grid_used.x_min},
        {"x_max", report.grid_used.x_max},
        {"count", report.grid_used.count},
        {"t", report.grid_used.t},
        {"tolerance", report.grid_used.tolerance}}},
  };
  if (report.strong_convexity_m) j["strong_convexity_m"] = *report.strong_convexity_m;
  return j.dump(2);
}

std::string to_json(const BarrierFit& fit) {
  json j = {
      {"A", fit.A},
      {"theta", fit.theta},
      {"C", fit.C},
      {"rmse", fit.rmse},
      {"containment", nullptr},
      {"side", std::string(to_string(fit.side))},
  };
  if (fit.containment) j["containment"] = *fit.containment;
  return j.dump(2);
}

std::string to_json(const BandReport& report) {
  json peaks = json::array();
  for (const auto& p : report.peaks) {
    peaks.push_back({{"location", p.location}, {"prominence", p.prominence}});
  }
  json j = {
      {"bin_centers", report.bin_centers},
      {"counts", report.counts},
      {"peaks", peaks},
      {"score", report.multimodality_score},
  };
  return j.dump(2);
}

std::string to_json(const EnsembleSummary& summary) {
  json j = {
      {"mean_path", summary.mean_path},
      {"std_path", summary.std_path},
      {"terminal_histogram",
       {{"edges", summary.terminal_histogram.edges},
        {"counts", summary.terminal_histogram.counts}}},
      {"path_integral",
       {{"mean", summary.path_integral.mean},
        {"std", summary.path_integral.std},
        {"min", summary.path_integral.min},
        {"max", summary.path_integral.max}}},
      {"diverged_count", summary.diverged_count},
  };
  return j.dump(2);
}

std::string to_json(const ContainmentReport& report) {
  json j = {
      {"overall", report.overall},
      {"inside", report.inside},
      {"total", report.total},
      {"required", report.required},
      {"meets_bound", report.meets_bound},
      {"per_step", report.per_step},
  };
  return j.dump(2);
}

void write_field_csv(const FieldGrid& grid, std::ostream& out) {
  const bool with_force = grid.force.has_value();
  out << (with_force ? "t,x,psi,force\n" : "t,x,psi\n");
  for (std::size_t j = 0; j < grid.nt(); ++j) {
    for (std::size_t i = 0; i < grid.nx(); ++i) {
      out << format_double(grid.t_values[j]) << ',' << format_double(grid.x_values[i]) << ','
          << format_double(grid.value(j, i));
      if (with_force) out << ',' << format_double(grid.force_at(j, i));
      out << '\n';
    }
  }
}

void write_envelope_csv(const Envelope& envelope, std::ostream& out) {
  out << "t,lower,upper\n";
  for (std::size_t j = 0; j < envelope.times.size(); ++j) {
    out << format_double(envelope.times[j]) << ',' << format_double(envelope.lower[j]) << ','
        << format_double(envelope.upper[j]) << '\n';
  }
}

}  // namespace bgc
