#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "bgc/psi.hpp"

namespace bgc {

enum class DtRule {
  // dt = 0 in the drift and one raw unit normal per step as the increment.
  PaperZero,
  // dt = horizon / (steps - 1) with sqrt(dt)-scaled increments.
  Uniform,
};

enum class BgcMode {
  Unconstrained,
  BgcDrift,      // Euler on dX = (mu - sgn(X) Psi) dt + sigma dW
  BgcDiffusion,  // Euler on dX = mu dt + (sigma - sgn(X) Psi) dW
  Transform,     // X = CX - sgn(CX) Psi(CX) applied to the running unconstrained sum
};

std::string_view to_string(DtRule rule);
std::string_view to_string(BgcMode mode);
std::optional<DtRule> dt_rule_from_string(std::string_view name);
std::optional<BgcMode> bgc_mode_from_string(std::string_view name);

struct SimulationConfig {
  double mu = 0.0;
  double sigma = 1.0;
  std::size_t steps = 1001;  // grid points including t = 0
  double horizon = 1000.0;
  DtRule dt_rule = DtRule::PaperZero;
  BgcMode mode = BgcMode::Transform;
  PsiSpec psi = PsiSpec::parabolic(100.0);
  double x0 = 0.0;
  std::uint64_t master_seed = 42;
  std::size_t n_paths = 1000;
  // Lets Transform mode run with a non-parabolic Psi.
  bool allow_any_transform_psi = false;

  void validate() const;

  /// Grid spacing horizon / (steps - 1).
  double grid_dt() const { return horizon / static_cast<double>(steps - 1); }
  /// dt entering the drift term: 0 under PaperZero.
  double drift_dt() const { return dt_rule == DtRule::PaperZero ? 0.0 : grid_dt(); }
  /// Multiplier on each unit normal draw: 1 under PaperZero, sqrt(dt) otherwise.
  double noise_scale() const;
  double time_at(std::size_t step) const { return grid_dt() * static_cast<double>(step); }

  friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

struct OupParams {
  double kappa = 0.01;
  double alpha = 25.0;
  double sigma = 1.0;
  double x0 = 0.0;

  void validate() const;
  friend bool operator==(const OupParams&, const OupParams&) = default;
};

enum class OupScheme { Euler, Exact };

std::string_view to_string(OupScheme scheme);
std::optional<OupScheme> oup_scheme_from_string(std::string_view name);

struct OupConfig {
  OupParams params;
  std::size_t steps = 1001;
  double horizon = 1000.0;
  OupScheme scheme = OupScheme::Exact;
  std::uint64_t master_seed = 42;
  std::size_t n_paths = 1000;

  void validate() const;
  double grid_dt() const { return horizon / static_cast<double>(steps - 1); }
  double time_at(std::size_t step) const { return grid_dt() * static_cast<double>(step); }

  friend bool operator==(const OupConfig&, const OupConfig&) = default;
};

}  // namespace bgc
