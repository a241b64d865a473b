#include "bgc/ensemble.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "bgc/errors.hpp"

namespace bgc {
namespace {

struct Name {
  int value;
  std::string_view name;
};

template <typename Enum, std::size_t N>
std::string_view lookup(const Name (&table)[N], Enum e) {
  for (const auto& entry : table) {
    if (entry.value == static_cast<int>(e)) return entry.name;
  }
  return "unknown";
}

template <typename Enum, std::size_t N>
std::optional<Enum> reverse_lookup(const Name (&table)[N], std::string_view name) {
  for (const auto& entry : table) {
    if (entry.name == name) return static_cast<Enum>(entry.value);
  }
  return std::nullopt;
}

constexpr Name kDtRules[] = {
    {static_cast<int>(DtRule::PaperZero), "paper-zero"},
    {static_cast<int>(DtRule::Uniform), "uniform"},
};

constexpr Name kModes[] = {
    {static_cast<int>(BgcMode::Unconstrained), "unconstrained"},
    {static_cast<int>(BgcMode::BgcDrift), "bgc-drift"},
    {static_cast<int>(BgcMode::BgcDiffusion), "bgc-diffusion"},
    {static_cast<int>(BgcMode::Transform), "transform"},
};

constexpr Name kSchemes[] = {
    {static_cast<int>(OupScheme::Euler), "euler"},
    {static_cast<int>(OupScheme::Exact), "exact"},
};

bool finite(double v) { return std::isfinite(v); }

}  // namespace

std::string_view to_string(DtRule rule) { return lookup(kDtRules, rule); }
std::string_view to_string(BgcMode mode) { return lookup(kModes, mode); }
std::string_view to_string(OupScheme scheme) { return lookup(kSchemes, scheme); }

std::optional<DtRule> dt_rule_from_string(std::string_view name) {
  return reverse_lookup<DtRule>(kDtRules, name);
}
std::optional<BgcMode> bgc_mode_from_string(std::string_view name) {
  return reverse_lookup<BgcMode>(kModes, name);
}
std::optional<OupScheme> oup_scheme_from_string(std::string_view name) {
  return reverse_lookup<OupScheme>(kSchemes, name);
}

double SimulationConfig::noise_scale() const {
  return dt_rule == DtRule::PaperZero ? 1.0 : std::sqrt(grid_dt());
}

void SimulationConfig::validate() const {
  if (steps < 2) throw PreconditionError("steps must be >= 2");
  if (n_paths < 1) throw PreconditionError("n_paths must be >= 1");
  if (!finite(mu)) throw PreconditionError("mu must be finite");
  if (!finite(sigma) || sigma < 0.0) throw PreconditionError("sigma must be finite and >= 0");
  if (!finite(horizon) || horizon <= 0.0) throw PreconditionError("horizon must be > 0");
  if (!finite(x0)) throw PreconditionError("x0 must be finite");
  psi.validate();
  if (mode != BgcMode::Unconstrained && x0 != 0.0) {
    throw PreconditionError("x0 must be 0 for constrained modes");
  }
  if (mode == BgcMode::Transform && psi.kind != PsiKind::ParabolicCylinder &&
      !allow_any_transform_psi) {
    throw PreconditionError(
        "transform mode requires a parabolic psi (set allow_any_transform_psi to override)");
  }
}

void OupParams::validate() const {
  if (!finite(kappa) || kappa <= 0.0) throw PreconditionError("kappa must be finite and > 0");
  if (!finite(alpha)) throw PreconditionError("alpha must be finite");
  if (!finite(sigma) || sigma < 0.0) throw PreconditionError("sigma must be finite and >= 0");
  if (!finite(x0)) throw PreconditionError("x0 must be finite");
}

void OupConfig::validate() const {
  params.validate();
  if (steps < 2) throw PreconditionError("steps must be >= 2");
  if (n_paths < 1) throw PreconditionError("n_paths must be >= 1");
  if (!finite(horizon) || horizon <= 0.0) throw PreconditionError("horizon must be > 0");
}

namespace {

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](double x, double y) {
           return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
         });
}

}  // namespace

bool operator==(const Path& a, const Path& b) {
  return a.path_id == b.path_id && a.seed == b.seed && a.diverged_at == b.diverged_at &&
         std::bit_cast<std::uint64_t>(a.path_integral) ==
             std::bit_cast<std::uint64_t>(b.path_integral) &&
         bitwise_equal(a.values, b.values) && bitwise_equal(a.raw_values, b.raw_values);
}

std::size_t PathEnsemble::diverged_count() const {
  return static_cast<std::size_t>(
      std::count_if(paths.begin(), paths.end(), [](const Path& p) { return p.diverged(); }));
}

std::vector<std::uint64_t> PathEnsemble::per_path_seeds() const {
  std::vector<std::uint64_t> seeds;
  seeds.reserve(paths.size());
  for (const auto& p : paths) seeds.push_back(p.seed);
  return seeds;
}

std::uint64_t PathEnsemble::master_seed() const {
  return std::visit([](const auto& cfg) { return cfg.master_seed; }, source);
}

std::vector<double> uniform_times(std::size_t steps, double horizon) {
  std::vector<double> times(steps);
  const double dt = horizon / static_cast<double>(steps - 1);
  for (std::size_t j = 0; j < steps; ++j) times[j] = dt * static_cast<double>(j);
  return times;
}

void parallel_for_index(std::size_t n, unsigned threads,
                        const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t block = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * block;
    const std::size_t end = std::min(n, begin + block);
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bgc
