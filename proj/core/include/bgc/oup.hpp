#pragma once

#include <cstddef>
#include <span>

#include "bgc/config.hpp"
#include "bgc/ensemble.hpp"

namespace bgc {

/// E[X_T] = x0 e^{-kappa T} + alpha (1 - e^{-kappa T}).
double oup_mean(const OupParams& params, double horizon);

/// Var[X_{t+dt} | X_t] = sigma^2 (1 - e^{-2 kappa dt}) / (2 kappa).
double oup_transition_variance(const OupParams& params, double dt);

/// One path from caller-supplied unit normals (`noise.size() == steps - 1`).
Path simulate_oup_path(const OupConfig& config, std::size_t path_id,
                       std::span<const double> noise);

/// Same seed derivation and determinism contract as simulate_ensemble.
PathEnsemble simulate_oup(const OupConfig& config, unsigned threads = 0);

}  // namespace bgc
