#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "bgc/config.hpp"

namespace bgc {

struct Path {
  std::size_t path_id = 0;
  std::uint64_t seed = 0;
  // X at every grid step; NaN from `diverged_at` onwards.
  std::vector<double> values;
  // Transform mode only: the unconstrained running sum CX.
  std::vector<double> raw_values;
  // Sum of the finite values (the per-path T_1000 statistic).
  double path_integral = 0.0;
  std::optional<std::size_t> diverged_at;

  bool diverged() const { return diverged_at.has_value(); }
  bool has_raw() const { return !raw_values.empty(); }

  // Bitwise on values so the NaN tail of a diverged path compares equal.
  friend bool operator==(const Path& a, const Path& b);
};

using EnsembleSource = std::variant<SimulationConfig, OupConfig>;

struct PathEnsemble {
  EnsembleSource source;
  std::vector<double> times;
  std::vector<Path> paths;

  std::size_t steps() const { return times.size(); }
  std::size_t n_paths() const { return paths.size(); }
  std::size_t diverged_count() const;
  std::vector<std::uint64_t> per_path_seeds() const;
  std::uint64_t master_seed() const;

  friend bool operator==(const PathEnsemble&, const PathEnsemble&) = default;
};

/// Runs `fn(i)` for every i in [0, n) across `threads` workers (0 picks the
/// hardware concurrency). Work is split into contiguous blocks; callers must
/// only write to slot i.
void parallel_for_index(std::size_t n, unsigned threads,
                        const std::function<void(std::size_t)>& fn);

/// Times of a uniform grid: step * horizon / (steps - 1).
std::vector<double> uniform_times(std::size_t steps, double horizon);

}  // namespace bgc
