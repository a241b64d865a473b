#include "bgc/psi.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "bgc/errors.hpp"

namespace bgc {
namespace {

struct KindName {
  PsiKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {PsiKind::Wedge, "wedge"},       {PsiKind::ParabolicCylinder, "parabolic"},
    {PsiKind::DoubleExpCylinder, "doubleexp"}, {PsiKind::RampedParabola, "ramped"},
    {PsiKind::SplicedPolynomial, "spliced"},   {PsiKind::Zero, "zero"},
    {PsiKind::Tabulated, "table"},
};

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

double parse_number(std::string_view key, std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw PreconditionError("psi parameter '" + std::string(key) + "' is not a number: '" +
                            std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw PreconditionError("psi parameter '" + std::string(key) + "' must be true or false");
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(';', start), text.size());
    out.push_back(parse_number(key, text.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

// Piecewise-linear interpolation with flat extrapolation.
double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto hi = static_cast<std::size_t>(it - xs.begin());
  const auto lo = hi - 1;
  const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + w * (ys[hi] - ys[lo]);
}

}  // namespace

std::string_view to_string(PsiKind kind) {
  for (const auto& entry : kKindNames) {
    if (entry.kind == kind) return entry.name;
  }
  return "unknown";
}

std::optional<PsiKind> psi_kind_from_string(std::string_view name) {
  for (const auto& entry : kKindNames) {
    if (entry.name == name) return entry.kind;
  }
  return std::nullopt;
}

void PsiSpec::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  switch (kind) {
    case PsiKind::ParabolicCylinder:
    case PsiKind::DoubleExpCylinder:
    case PsiKind::RampedParabola:
      if (!positive(omega)) throw PreconditionError("psi omega must be finite and > 0");
      break;
    case PsiKind::SplicedPolynomial:
      if (!positive(omega1)) throw PreconditionError("psi omega1 must be finite and > 0");
      if (!std::isfinite(omega2)) throw PreconditionError("psi omega2 must be finite");
      if (exponent < 1) throw PreconditionError("psi exponent must be a positive integer");
      break;
    case PsiKind::Tabulated:
      if (table_x.size() < 2 || table_x.size() != table_y.size()) {
        throw PreconditionError("psi table needs >= 2 knots with matching x and y");
      }
      for (std::size_t i = 0; i < table_x.size(); ++i) {
        if (!std::isfinite(table_x[i]) || !std::isfinite(table_y[i])) {
          throw PreconditionError("psi table knots must be finite");
        }
        if (i > 0 && !(table_x[i] > table_x[i - 1])) {
          throw PreconditionError("psi table x must be strictly increasing");
        }
      }
      break;
    case PsiKind::Wedge:
    case PsiKind::Zero:
      break;
  }
}

PsiSpec PsiSpec::wedge() {
  PsiSpec spec;
  spec.kind = PsiKind::Wedge;
  return spec;
}

PsiSpec PsiSpec::parabolic(double omega) {
  PsiSpec spec;
  spec.kind = PsiKind::ParabolicCylinder;
  spec.omega = omega;
  return spec;
}

PsiSpec PsiSpec::double_exp(double omega) {
  PsiSpec spec;
  spec.kind = PsiKind::DoubleExpCylinder;
  spec.omega = omega;
  return spec;
}

PsiSpec PsiSpec::ramped(double omega) {
  PsiSpec spec;
  spec.kind = PsiKind::RampedParabola;
  spec.omega = omega;
  return spec;
}

PsiSpec PsiSpec::spliced(double omega1, double omega2, int exponent, bool splice) {
  PsiSpec spec;
  spec.kind = PsiKind::SplicedPolynomial;
  spec.omega1 = omega1;
  spec.omega2 = omega2;
  spec.exponent = exponent;
  spec.splice = splice;
  return spec;
}

PsiSpec PsiSpec::zero() {
  PsiSpec spec;
  spec.kind = PsiKind::Zero;
  return spec;
}

PsiSpec PsiSpec::tabulated(std::vector<double> xs, std::vector<double> ys) {
  PsiSpec spec;
  spec.kind = PsiKind::Tabulated;
  spec.table_x = std::move(xs);
  spec.table_y = std::move(ys);
  return spec;
}

PsiSpec parse_psi(std::string_view text) {
  const auto colon = text.find(':');
  const auto kind_name = text.substr(0, colon);
  const auto kind = psi_kind_from_string(kind_name);
  if (!kind) throw PreconditionError("unknown psi kind '" + std::string(kind_name) + "'");

  PsiSpec spec;
  spec.kind = *kind;
  if (colon != std::string_view::npos) {
    auto rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        throw PreconditionError("psi parameter '" + std::string(item) + "' is not key=value");
      }
      const auto key = item.substr(0, eq);
      const auto value = item.substr(eq + 1);
      if (key == "omega") {
        spec.omega = parse_number(key, value);
      } else if (key == "omega1") {
        spec.omega1 = parse_number(key, value);
      } else if (key == "omega2") {
        spec.omega2 = parse_number(key, value);
      } else if (key == "n" || key == "exponent") {
        const double n = parse_number(key, value);
        if (n != std::floor(n)) throw PreconditionError("psi exponent must be an integer");
        spec.exponent = static_cast<int>(n);
      } else if (key == "splice") {
        spec.splice = parse_bool(key, value);
      } else if (key == "x") {
        spec.table_x = parse_list(key, value);
      } else if (key == "y") {
        spec.table_y = parse_list(key, value);
      } else {
        throw PreconditionError("unknown psi parameter '" + std::string(key) + "' for kind '" +
                                std::string(kind_name) + "'");
      }
    }
  }
  spec.validate();
  return spec;
}

std::string format_psi(const PsiSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  out << to_string(spec.kind);
  switch (spec.kind) {
    case PsiKind::ParabolicCylinder:
    case PsiKind::DoubleExpCylinder:
    case PsiKind::RampedParabola:
      out << ":omega=" << spec.omega;
      break;
    case PsiKind::SplicedPolynomial:
      out << ":omega1=" << spec.omega1 << ",omega2=" << spec.omega2 << ",n=" << spec.exponent
          << ",splice=" << (spec.splice ? "true" : "false");
      break;
    case PsiKind::Tabulated: {
      auto list = [&](const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ";" : "") << v[i];
      };
      out << ":x=";
      list(spec.table_x);
      out << ",y=";
      list(spec.table_y);
      break;
    }
    case PsiKind::Wedge:
    case PsiKind::Zero:
      break;
  }
  return out.str();
}

double eval_psi(const PsiSpec& spec, double x, double t) {
  if (!std::isfinite(x) || !std::isfinite(t)) {
    throw DomainError("eval_psi: non-finite input");
  }
  switch (spec.kind) {
    case PsiKind::Wedge:
      return std::abs(x);
    case PsiKind::ParabolicCylinder:
      return x * x / spec.omega;
    case PsiKind::DoubleExpCylinder:
      return (std::exp(x) + std::exp(-x)) / spec.omega;
    case PsiKind::RampedParabola:
      return x * x * t / spec.omega;
    case PsiKind::SplicedPolynomial: {
      const double base = spec.splice ? std::abs(x) : x;
      return std::pow(base, spec.exponent) / spec.omega1 + spec.omega2;
    }
    case PsiKind::Zero:
      return 0.0;
    case PsiKind::Tabulated:
      return interpolate(spec.table_x, spec.table_y, x);
  }
  return 0.0;
}

ConvexityReport classify_convexity(const PsiSpec& spec, std::span<const double> x_grid,
                                   double tolerance, double t) {
  spec.validate();
  const auto n = x_grid.size();
  if (n < 5) throw PreconditionError("classify_convexity: grid needs at least 5 points");
  if (!(tolerance > 0.0)) throw PreconditionError("classify_convexity: tolerance must be > 0");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_grid[i] > x_grid[i - 1])) {
      throw PreconditionError("classify_convexity: grid must be strictly increasing");
    }
  }
  const double scale = std::max(std::abs(x_grid.front()), std::abs(x_grid.back()));
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(x_grid[i] + x_grid[n - 1 - i]) > 1e-12 * std::max(scale, 1.0)) {
      throw PreconditionError("classify_convexity: grid must be symmetric about 0");
    }
  }

  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = eval_psi(spec, x_grid[i], t);

  bool convex = true;
  bool strict = true;
  double min_second = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hl = x_grid[i] - x_grid[i - 1];
    const double hr = x_grid[i + 1] - x_grid[i];
    const double second =
        2.0 * ((f[i + 1] - f[i]) / hr - (f[i] - f[i - 1]) / hl) / (hl + hr);
    min_second = std::min(min_second, second);
    if (!(second >= -tolerance)) convex = false;
    if (!(second > tolerance)) strict = false;
  }

  double asymmetry = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    asymmetry = std::max(asymmetry, std::abs(f[i] - f[n - 1 - i]));
  }

  ConvexityReport report;
  report.is_convex = convex;
  report.is_strictly_convex = strict && convex;
  if (report.is_strictly_convex) report.strong_convexity_m = min_second;
  report.is_bidirectional = asymmetry <= tolerance;
  report.is_bidirectionally_convex = report.is_strictly_convex && report.is_bidirectional;
  report.grid_used = GridDescriptor{x_grid.front(), x_grid.back(), n, t, tolerance};
  return report;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

FieldGrid sample_surface(const PsiSpec& spec, Interval x_range, Interval t_range,
                         std::size_t nx, std::size_t nt) {
  spec.validate();
  if (nx < 2 || nt < 2) throw PreconditionError("sample_surface: nx and nt must be >= 2");
  if (!(x_range.hi > x_range.lo)) throw PreconditionError("sample_surface: empty x range");
  if (!(t_range.hi > t_range.lo)) throw PreconditionError("sample_surface: empty t range");
  if (t_range.lo < 0.0) throw PreconditionError("sample_surface: t must be >= 0");

  FieldGrid grid;
  grid.x_values = linspace(x_range.lo, x_range.hi, nx);
  grid.t_values = linspace(t_range.lo, t_range.hi, nt);
  grid.values.resize(nx * nt);
  for (std::size_t j = 0; j < nt; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      grid.values[j * nx + i] = eval_psi(spec, grid.x_values[i], grid.t_values[j]);
    }
  }
  return grid;
}

FieldGrid export_vector_field(const PsiSpec& spec, const FieldGrid& grid) {
  if (grid.values.size() != grid.nx() * grid.nt() || grid.values.empty()) {
    throw PreconditionError("export_vector_field: grid values not populated");
  }
  FieldGrid out = grid;
  std::vector<double> force(grid.values.size());
  for (std::size_t j = 0; j < grid.nt(); ++j) {
    for (std::size_t i = 0; i < grid.nx(); ++i) {
      const double x = grid.x_values[i];
      const double psi = eval_psi(spec, x, grid.t_values[j]);
      force[j * grid.nx() + i] = -static_cast<double>(sign_of(x)) * psi;
    }
  }
  out.force = std::move(force);
  return out;
}

}  // namespace bgc
