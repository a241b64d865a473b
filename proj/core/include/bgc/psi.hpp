#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bgc {

/// Family of the constraint surface Psi(x, t).
enum class PsiKind {
  Wedge,              // |x|
  ParabolicCylinder,  // x^2 / omega
  DoubleExpCylinder,  // (e^x + e^-x) / omega
  RampedParabola,     // x^2 t / omega
  SplicedPolynomial,  // |x|^n / omega1 + omega2 (or x^n / omega1 + omega2 unspliced)
  Zero,               // constraint disabled
  Tabulated,          // piecewise linear in x, constant in t
};

std::string_view to_string(PsiKind kind);
std::optional<PsiKind> psi_kind_from_string(std::string_view name);

/// Parameterised constraint function. Only the fields used by `kind` matter.
struct PsiSpec {
  PsiKind kind = PsiKind::ParabolicCylinder;
  double omega = 100.0;
  double omega1 = 200.0;
  double omega2 = 5.0;
  int exponent = 3;
  // false selects the signed x^n form (the concave-for-negative-x cubic).
  bool splice = true;
  // Tabulated knots; x strictly increasing, flat extrapolation outside.
  std::vector<double> table_x;
  std::vector<double> table_y;

  /// Throws PreconditionError when a parameter used by `kind` is invalid.
  void validate() const;

  /// True when Psi(x, t) does not depend on t.
  bool time_independent() const { return kind != PsiKind::RampedParabola; }

  static PsiSpec wedge();
  static PsiSpec parabolic(double omega);
  static PsiSpec double_exp(double omega);
  static PsiSpec ramped(double omega);
  static PsiSpec spliced(double omega1, double omega2, int exponent = 3, bool splice = true);
  static PsiSpec zero();
  static PsiSpec tabulated(std::vector<double> xs, std::vector<double> ys);

  friend bool operator==(const PsiSpec&, const PsiSpec&) = default;
};

/// Parses the `kind:key=value,...` grammar, e.g. `parabolic:omega=100` or
/// `spliced:omega1=200,omega2=5,splice=false`. Unknown kinds or keys throw
/// PreconditionError.
PsiSpec parse_psi(std::string_view text);

/// Inverse of parse_psi; round-trips every field used by the kind.
std::string format_psi(const PsiSpec& spec);

/// Evaluates Psi(x, t). Throws DomainError for non-finite x or t.
double eval_psi(const PsiSpec& spec, double x, double t);

struct GridDescriptor {
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t count = 0;
  double t = 0.0;
  double tolerance = 0.0;
};

struct ConvexityReport {
  bool is_convex = false;
  bool is_strictly_convex = false;
  // Smallest discrete second derivative; present only when strictly convex.
  std::optional<double> strong_convexity_m;
  bool is_bidirectional = false;
  bool is_bidirectionally_convex = false;
  GridDescriptor grid_used;
};

/// Classifies Psi(., t) on `x_grid` from discrete second differences.
///
/// The grid must be sorted, hold at least 5 points and be symmetric about 0
/// so that Psi(x) = Psi(-x) can be checked pointwise. Non-uniform spacing is
/// allowed; the three-point second-derivative stencil handles it.
ConvexityReport classify_convexity(const PsiSpec& spec, std::span<const double> x_grid,
                                   double tolerance = 1e-9, double t = 0.0);

/// Evenly spaced grid of `count` points over [lo, hi], both ends included.
std::vector<double> linspace(double lo, double hi, std::size_t count);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Psi sampled on a tensor grid; row j holds time t_values[j].
struct FieldGrid {
  std::vector<double> x_values;
  std::vector<double> t_values;
  std::vector<double> values;  // row-major, t_values.size() x x_values.size()
  std::optional<std::vector<double>> force;

  std::size_t nx() const { return x_values.size(); }
  std::size_t nt() const { return t_values.size(); }
  double value(std::size_t j, std::size_t i) const { return values[j * nx() + i]; }
  double force_at(std::size_t j, std::size_t i) const { return (*force)[j * nx() + i]; }
};

FieldGrid sample_surface(const PsiSpec& spec, Interval x_range, Interval t_range,
                         std::size_t nx, std::size_t nt);

/// Returns a copy of `grid` with force[j][i] = -sgn(x_i) * Psi(x_i, t_j), the
/// restoring component the constraint adds to the drift.
FieldGrid export_vector_field(const PsiSpec& spec, const FieldGrid& grid);

}  // namespace bgc
