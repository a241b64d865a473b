#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bgc {

/// Identifier recorded in run manifests. Bump the suffix whenever the seed
/// mixer, the engine or the normal transform changes.
inline constexpr std::string_view kSeedAlgorithmId =
    "splitmix64-pair/mt19937_64/marsaglia-polar/v1";

/// One round of splitmix64 finalisation applied to `x`.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed of path `path_id` under `master_seed`; a pure function of both.
std::uint64_t derive_path_seed(std::uint64_t master_seed, std::uint64_t path_id) noexcept;

/// Standard normal stream over mt19937_64.
///
/// Uniforms are built from the top 53 bits and normals from the Marsaglia
/// polar method (the spare variate is kept), so the sequence only depends on
/// the seed and not on the standard library's distribution implementations.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() noexcept;  // in [0, 1)
  double next() noexcept;

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bgc
