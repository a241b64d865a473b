#pragma once

#include <cstddef>
#include <span>

#include "bgc/config.hpp"
#include "bgc/ensemble.hpp"

namespace bgc {

/// Sign function with sgn(0) = 0 and no dead zone around the origin.
constexpr int sgn(double x) noexcept { return (x > 0.0) - (x < 0.0); }

/// The per-step map of the transform scheme: cx - cx^2/omega for cx > 0,
/// cx + cx^2/omega otherwise. Peaks at omega/4 when cx = omega/2.
double transform_step(double cx, double omega);

/// Simulates one path with the normals drawn from the path's derived stream.
Path simulate_path(const SimulationConfig& config, std::size_t path_id);

/// Simulates one path driven by caller-supplied unit normals, one per step
/// after t = 0 (`noise.size() == config.steps - 1`). The seeded overload is
/// this function applied to the derived stream.
Path simulate_path(const SimulationConfig& config, std::size_t path_id,
                   std::span<const double> noise);

/// Draws the `steps - 1` normals every mode consumes for `path_id`.
std::vector<double> path_noise(std::uint64_t master_seed, std::size_t path_id, std::size_t steps);

/// Generates `config.n_paths` paths. The result is bit-identical for any
/// `threads` value (0 means hardware concurrency).
PathEnsemble simulate_ensemble(const SimulationConfig& config, unsigned threads = 0);

}  // namespace bgc
