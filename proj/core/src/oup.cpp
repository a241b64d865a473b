#include "bgc/oup.hpp"

#include <cmath>
#include <limits>

#include "bgc/errors.hpp"
#include "bgc/rng.hpp"
#include "bgc/sde_engine.hpp"

namespace bgc {

double oup_mean(const OupParams& params, double horizon) {
  params.validate();
  if (horizon < 0.0) throw PreconditionError("oup_mean: horizon must be >= 0");
  const double decay = std::exp(-params.kappa * horizon);
  // alpha (1 - e^{-kT}) via expm1 keeps precision for small kT.
  return params.x0 * decay - params.alpha * std::expm1(-params.kappa * horizon);
}

double oup_transition_variance(const OupParams& params, double dt) {
  params.validate();
  return -params.sigma * params.sigma * std::expm1(-2.0 * params.kappa * dt) /
         (2.0 * params.kappa);
}

Path simulate_oup_path(const OupConfig& config, std::size_t path_id,
                       std::span<const double> noise) {
  config.validate();
  if (noise.size() != config.steps - 1) {
    throw PreconditionError("simulate_oup_path: need exactly steps - 1 noise draws");
  }
  const auto& p = config.params;
  const double dt = config.grid_dt();
  const double decay = std::exp(-p.kappa * dt);
  const double pull = -std::expm1(-p.kappa * dt);
  const double exact_sd = std::sqrt(oup_transition_variance(p, dt));
  const double euler_sd = p.sigma * std::sqrt(dt);

  Path path;
  path.path_id = path_id;
  path.seed = derive_path_seed(config.master_seed, path_id);
  path.values.assign(config.steps, std::numeric_limits<double>::quiet_NaN());
  path.values[0] = p.x0;

  double x = p.x0;
  double integral = x;
  for (std::size_t j = 1; j < config.steps; ++j) {
    const double z = noise[j - 1];
    const double next = config.scheme == OupScheme::Exact
                            ? x * decay + p.alpha * pull + exact_sd * z
                            : x + p.kappa * (p.alpha - x) * dt + euler_sd * z;
    if (!std::isfinite(next)) {
      path.diverged_at = j;
      break;
    }
    x = next;
    path.values[j] = x;
    integral += x;
  }
  path.path_integral = integral;
  return path;
}

PathEnsemble simulate_oup(const OupConfig& config, unsigned threads) {
  config.validate();
  PathEnsemble ensemble;
  ensemble.source = config;
  ensemble.times = uniform_times(config.steps, config.horizon);
  ensemble.paths.resize(config.n_paths);
  parallel_for_index(config.n_paths, threads, [&](std::size_t i) {
    const auto noise = path_noise(config.master_seed, i, config.steps);
    ensemble.paths[i] = simulate_oup_path(config, i, noise);
  });
  return ensemble;
}

}  // namespace bgc
