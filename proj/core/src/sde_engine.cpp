#include "bgc/sde_engine.hpp"

#include <cmath>
#include <limits>

#include "bgc/errors.hpp"
#include "bgc/rng.hpp"

namespace bgc {
namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

// Marks `path` diverged at `step`; every later value stays NaN.
void mark_diverged(Path& path, std::size_t step) {
  path.diverged_at = step;
  std::fill(path.values.begin() + static_cast<std::ptrdiff_t>(step), path.values.end(), kUnset);
}

}  // namespace

double transform_step(double cx, double omega) {
  if (cx > 0.0) return cx - cx * cx / omega;
  return cx + cx * cx / omega;
}

std::vector<double> path_noise(std::uint64_t master_seed, std::size_t path_id, std::size_t steps) {
  NormalStream stream(derive_path_seed(master_seed, path_id));
  std::vector<double> noise(steps - 1);
  for (auto& z : noise) z = stream.next();
  return noise;
}

Path simulate_path(const SimulationConfig& config, std::size_t path_id,
                   std::span<const double> noise) {
  config.validate();
  if (noise.size() != config.steps - 1) {
    throw PreconditionError("simulate_path: need exactly steps - 1 noise draws");
  }

  Path path;
  path.path_id = path_id;
  path.seed = derive_path_seed(config.master_seed, path_id);
  path.values.assign(config.steps, kUnset);
  path.values[0] = config.x0;

  const bool transform = config.mode == BgcMode::Transform;
  const bool parabolic = config.psi.kind == PsiKind::ParabolicCylinder;
  if (transform) {
    path.raw_values.assign(config.steps, kUnset);
    path.raw_values[0] = config.x0;
  }

  const double drift_dt = config.drift_dt();
  const double scale = config.noise_scale();
  double x = config.x0;
  double integral = config.x0;

  for (std::size_t j = 1; j < config.steps; ++j) {
    const double increment = scale * noise[j - 1];
    const double t_prev = config.time_at(j - 1);
    double next = 0.0;
    switch (config.mode) {
      case BgcMode::Unconstrained:
        // Same grouping as Transform so the twin reproduces raw_values exactly.
        next = x + (config.mu * drift_dt + config.sigma * increment);
        break;
      case BgcMode::BgcDrift: {
        const double restoring = sgn(x) * eval_psi(config.psi, x, t_prev);
        next = x + (config.mu - restoring) * drift_dt + config.sigma * increment;
        break;
      }
      case BgcMode::BgcDiffusion: {
        const double restoring = sgn(x) * eval_psi(config.psi, x, t_prev);
        next = x + config.mu * drift_dt + (config.sigma - restoring) * increment;
        break;
      }
      case BgcMode::Transform: {
        // x carries the unconstrained running sum CX here.
        next = x + (config.mu * drift_dt + config.sigma * increment);
        path.raw_values[j] = next;
        break;
      }
    }

    if (!std::isfinite(next)) {
      mark_diverged(path, j);
      break;
    }
    x = next;

    double value = x;
    if (transform) {
      value = parabolic ? transform_step(x, config.psi.omega)
                        : x - sgn(x) * eval_psi(config.psi, x, config.time_at(j));
      if (!std::isfinite(value)) {
        mark_diverged(path, j);
        break;
      }
    }
    path.values[j] = value;
    integral += value;
  }
  path.path_integral = integral;
  return path;
}

Path simulate_path(const SimulationConfig& config, std::size_t path_id) {
  config.validate();
  const auto noise = path_noise(config.master_seed, path_id, config.steps);
  return simulate_path(config, path_id, noise);
}

PathEnsemble simulate_ensemble(const SimulationConfig& config, unsigned threads) {
  config.validate();
  PathEnsemble ensemble;
  ensemble.source = config;
  ensemble.times = uniform_times(config.steps, config.horizon);
  ensemble.paths.resize(config.n_paths);
  parallel_for_index(config.n_paths, threads,
                     [&](std::size_t i) { ensemble.paths[i] = simulate_path(config, i); });
  return ensemble;
}

}  // namespace bgc
