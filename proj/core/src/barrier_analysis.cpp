#include "bgc/barrier_analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace bgc {
namespace {

// Type-7 (linear interpolation) quantile of sorted data.
double sorted_quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct Sample {
  double t;
  double y;
  double sign;  // +1 upper, -1 lower
};

std::vector<Sample> collect_samples(const Envelope& env, BarrierSide side) {
  std::vector<Sample> samples;
  samples.reserve(env.times.size() * 2);
  for (std::size_t j = 0; j < env.times.size(); ++j) {
    if (side != BarrierSide::Lower) samples.push_back({env.times[j], env.upper[j], 1.0});
    if (side != BarrierSide::Upper) samples.push_back({env.times[j], env.lower[j], -1.0});
  }
  return samples;
}

double saturation(double theta, double t) { return -std::expm1(-theta * t); }

struct Params {
  double A = 0.0;
  double theta = 0.0;
  double C = 0.0;
};

double sse(const std::vector<Sample>& samples, const Params& p) {
  double total = 0.0;
  for (const auto& s : samples) {
    const double r = s.y - (s.sign * p.A * saturation(p.theta, s.t) + p.C);
    total += r * r;
  }
  return total;
}

// Best (A, C) at fixed theta by linear least squares, with A clamped at 0.
Params profile(const std::vector<Sample>& samples, double theta, bool free_c) {
  double sbb = 0.0, sb = 0.0, sby = 0.0, sy = 0.0;
  for (const auto& s : samples) {
    const double b = s.sign * saturation(theta, s.t);
    sbb += b * b;
    sb += b;
    sby += b * s.y;
    sy += s.y;
  }
  const double n = static_cast<double>(samples.size());
  Params p{0.0, theta, 0.0};
  if (free_c) {
    const double det = sbb * n - sb * sb;
    if (det > 0.0) {
      p.A = (sby * n - sb * sy) / det;
      p.C = (sbb * sy - sb * sby) / det;
    }
    if (!(p.A > 0.0)) {
      p.A = 0.0;
      p.C = sy / n;
    }
  } else if (sbb > 0.0) {
    p.A = std::max(0.0, sby / sbb);
  }
  return p;
}

// Solves the (up to) 3x3 system m x = rhs by Gaussian elimination with
// partial pivoting. Returns false when singular.
bool solve(std::array<std::array<double, 3>, 3> m, std::array<double, 3> rhs, int n,
           std::array<double, 3>& x) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (m[pivot][col] == 0.0) return false;
    std::swap(m[col], m[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (int r = col + 1; r < n; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < n; ++c) m[r][c] -= f * m[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double acc = rhs[r];
    for (int c = r + 1; c < n; ++c) acc -= m[r][c] * x[c];
    x[r] = acc / m[r][r];
  }
  return true;
}

struct Refinement {
  Params params;
  bool converged = false;
};

// Levenberg-Marquardt (Marquardt diagonal scaling) on (A, theta[, C]).
Refinement refine(const std::vector<Sample>& samples, Params start, bool free_c) {
  constexpr int kMaxIterations = 500;
  constexpr double kStepTolerance = 1e-14;
  const int n = free_c ? 3 : 2;

  Params p = start;
  double current = sse(samples, p);
  double lambda = 1e-3;

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    std::array<std::array<double, 3>, 3> jtj{};
    std::array<double, 3> jtr{};
    for (const auto& s : samples) {
      const double e = std::exp(-p.theta * s.t);
      const double g = -std::expm1(-p.theta * s.t);
      const std::array<double, 3> jac{s.sign * g, s.sign * p.A * s.t * e, 1.0};
      const double r = s.y - (s.sign * p.A * g + p.C);
      for (int a = 0; a < n; ++a) {
        jtr[a] += jac[a] * r;
        for (int b = 0; b < n; ++b) jtj[a][b] += jac[a] * jac[b];
      }
    }

    bool accepted = false;
    while (lambda < 1e16) {
      auto damped = jtj;
      for (int a = 0; a < n; ++a) damped[a][a] += lambda * std::max(jtj[a][a], 1e-300);
      std::array<double, 3> delta{};
      if (!solve(damped, jtr, n, delta)) {
        lambda *= 10.0;
        continue;
      }
      Params trial = p;
      trial.A = std::max(0.0, p.A + delta[0]);
      trial.theta = std::clamp(p.theta + delta[1], kThetaMin, kThetaMax);
      if (free_c) trial.C = p.C + delta[2];
      const double candidate = sse(samples, trial);
      if (candidate <= current) {
        const double moved = std::max({std::abs(trial.A - p.A) / std::max(1.0, std::abs(p.A)),
                                       std::abs(trial.theta - p.theta) / p.theta,
                                       std::abs(trial.C - p.C) / std::max(1.0, std::abs(p.C))});
        p = trial;
        current = candidate;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (moved < kStepTolerance) return {p, true};
        break;
      }
      lambda *= 4.0;
    }
    // No descent direction left at any damping: a (local) minimum.
    if (!accepted) return {p, true};
  }
  return {p, false};
}

struct Extent {
  double lo;
  double hi;
};

}  // namespace

std::string_view to_string(BarrierSide side) {
  switch (side) {
    case BarrierSide::Lower:
      return "lower";
    case BarrierSide::Upper:
      return "upper";
    case BarrierSide::SymmetricJoint:
      return "joint";
  }
  return "unknown";
}

std::optional<BarrierSide> barrier_side_from_string(std::string_view name) {
  if (name == "lower") return BarrierSide::Lower;
  if (name == "upper") return BarrierSide::Upper;
  if (name == "joint" || name == "symmetric") return BarrierSide::SymmetricJoint;
  return std::nullopt;
}

Envelope empirical_envelope(const PathEnsemble& ensemble, double quantile) {
  if (!(quantile > 0.5 && quantile <= 1.0)) {
    throw PreconditionError("empirical_envelope: quantile must lie in (0.5, 1]");
  }
  std::vector<const Path*> live;
  for (const auto& p : ensemble.paths) {
    if (!p.diverged()) live.push_back(&p);
  }
  if (live.empty()) {
    throw AnalysisError(AnalysisErrorKind::EmptyInput,
                        "empirical_envelope: no non-diverged paths");
  }

  Envelope env;
  env.quantile = quantile;
  env.times = ensemble.times;
  env.lower.resize(ensemble.steps());
  env.upper.resize(ensemble.steps());
  std::vector<double> column(live.size());
  for (std::size_t j = 0; j < ensemble.steps(); ++j) {
    for (std::size_t i = 0; i < live.size(); ++i) column[i] = live[i]->values[j];
    std::sort(column.begin(), column.end());
    env.lower[j] = sorted_quantile(column, 1.0 - quantile);
    env.upper[j] = sorted_quantile(column, quantile);
  }
  return env;
}

double BarrierFit::upper_at(double t) const { return A * saturation(theta, t) + C; }
double BarrierFit::lower_at(double t) const { return -A * saturation(theta, t) + C; }
double BarrierFit::rate_at(double t) const { return A * theta * std::exp(-theta * t); }

BarrierFit fit_barrier(const Envelope& envelope, BarrierSide side, bool fix_c_zero) {
  const auto n = envelope.times.size();
  if (n < 10) throw PreconditionError("fit_barrier: envelope needs at least 10 time points");
  if (envelope.lower.size() != n || envelope.upper.size() != n) {
    throw PreconditionError("fit_barrier: envelope arrays differ in length");
  }

  const auto samples = collect_samples(envelope, side);
  const bool free_c = side != BarrierSide::SymmetricJoint && !fix_c_zero;

  double magnitude = 0.0;
  for (const auto& s : samples) {
    if (!std::isfinite(s.y)) throw PreconditionError("fit_barrier: non-finite envelope value");
    magnitude = std::max(magnitude, std::abs(s.y));
  }
  if (magnitude == 0.0) {
    throw AnalysisError(AnalysisErrorKind::UnidentifiableTheta,
                        "fit_barrier: envelope is identically zero, theta is unidentifiable");
  }

  constexpr std::size_t kGridSize = 401;
  const double log_lo = std::log(kThetaMin);
  const double log_hi = std::log(kThetaMax);
  Params best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < kGridSize; ++k) {
    const double theta =
        std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(k) / (kGridSize - 1));
    const Params p = profile(samples, theta, free_c);
    const double value = sse(samples, p);
    if (value < best_sse) {
      best_sse = value;
      best = p;
    }
  }

  const double count = static_cast<double>(samples.size());
  if (best.A == 0.0) {
    throw AnalysisError(AnalysisErrorKind::UnidentifiableTheta,
                        "fit_barrier: best amplitude is zero, theta is unidentifiable");
  }

  const auto refined = refine(samples, best, free_c);
  if (!refined.converged) {
    throw FitError("fit_barrier: refinement did not converge",
                   FitCandidate{best.A, best.theta, best.C, std::sqrt(best_sse / count)});
  }

  BarrierFit fit;
  fit.A = refined.params.A;
  fit.theta = refined.params.theta;
  fit.C = refined.params.C;
  fit.rmse = std::sqrt(sse(samples, refined.params) / count);
  fit.side = side;
  fit.quantile = envelope.quantile;
  fit.times = envelope.times;
  return fit;
}

BarrierFit fit_barrier(const Envelope& envelope, BarrierSide side, bool fix_c_zero,
                       const PathEnsemble& ensemble) {
  auto fit = fit_barrier(envelope, side, fix_c_zero);
  fit.containment = check_barrier_bound(ensemble, fit).overall;
  return fit;
}

ContainmentReport check_barrier_bound(const PathEnsemble& ensemble, const BarrierFit& fit) {
  if (!fit.times.empty()) {
    bool same = fit.times.size() == ensemble.times.size();
    for (std::size_t j = 0; same && j < fit.times.size(); ++j) {
      same = std::abs(fit.times[j] - ensemble.times[j]) <=
             1e-12 * std::max(1.0, std::abs(ensemble.times[j]));
    }
    if (!same) throw PreconditionError("check_barrier_bound: time grids differ");
  }

  ContainmentReport report;
  report.per_step.assign(ensemble.steps(), 0.0);
  for (std::size_t j = 0; j < ensemble.steps(); ++j) {
    const double t = ensemble.times[j];
    const double lo = fit.lower_at(t);
    const double hi = fit.upper_at(t);
    const double slack = 1e-9 * std::max({1.0, std::abs(lo), std::abs(hi)});
    std::size_t inside = 0;
    std::size_t total = 0;
    for (const auto& p : ensemble.paths) {
      if (p.diverged()) continue;
      const double v = p.values[j];
      ++total;
      if (v >= lo - slack && v <= hi + slack) ++inside;
    }
    report.per_step[j] = total ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
    report.inside += inside;
    report.total += total;
  }
  if (report.total == 0) {
    throw AnalysisError(AnalysisErrorKind::EmptyInput,
                        "check_barrier_bound: no non-diverged paths");
  }
  report.overall = static_cast<double>(report.inside) / static_cast<double>(report.total);
  report.required = 2.0 * fit.quantile - 1.0;
  report.meets_bound = report.overall >= report.required;
  return report;
}

std::vector<PeakRun> find_peaks(std::span<const double> s) {
  std::vector<PeakRun> peaks;
  const std::size_t n = s.size();
  std::size_t a = 0;
  while (a < n) {
    std::size_t b = a;
    while (b + 1 < n && s[b + 1] == s[a]) ++b;
    const bool rises = a == 0 || s[a - 1] < s[a];
    const bool falls = b + 1 == n || s[b + 1] < s[b];
    if (rises && falls) {
      const double h = s[a];
      std::optional<double> left_min;
      for (std::size_t k = a; k-- > 0;) {
        if (s[k] > h) break;
        left_min = std::min(left_min.value_or(s[k]), s[k]);
      }
      std::optional<double> right_min;
      for (std::size_t k = b + 1; k < n; ++k) {
        if (s[k] > h) break;
        right_min = std::min(right_min.value_or(s[k]), s[k]);
      }
      double base = h;
      if (left_min && right_min) {
        base = std::max(*left_min, *right_min);
      } else if (left_min || right_min) {
        base = left_min ? *left_min : *right_min;
      } else {
        base = 0.0;
      }
      peaks.push_back({a, b, h - base});
    }
    a = b + 1;
  }
  return peaks;
}

BandReport detect_bands(const PathEnsemble& ensemble, std::size_t n_bins,
                        std::optional<std::size_t> smoothing_window) {
  if (n_bins < 32) throw PreconditionError("detect_bands: n_bins must be >= 32");
  const std::size_t window = smoothing_window.value_or(std::max<std::size_t>(1, n_bins / 64));
  if (window < 1) throw PreconditionError("detect_bands: smoothing_window must be >= 1");

  Extent extent{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  std::size_t pooled = 0;
  for (const auto& p : ensemble.paths) {
    for (double v : p.values) {
      if (!std::isfinite(v)) continue;
      extent.lo = std::min(extent.lo, v);
      extent.hi = std::max(extent.hi, v);
      ++pooled;
    }
  }
  if (pooled == 0) {
    throw AnalysisError(AnalysisErrorKind::EmptyInput, "detect_bands: no finite values");
  }

  const double span = extent.hi - extent.lo;
  double width = 0.0;
  double origin = 0.0;
  if (span <= 1e-12 * std::max(1.0, std::abs(extent.lo))) {
    // Single value: centre it in the middle bin.
    width = 1.0 / static_cast<double>(n_bins);
    origin = extent.lo - (static_cast<double>(n_bins / 2) + 0.5) * width;
  } else {
    width = span / static_cast<double>(n_bins);
    origin = extent.lo;
  }

  BandReport report;
  report.counts.assign(n_bins, 0);
  report.bin_centers.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    report.bin_centers[k] = origin + (static_cast<double>(k) + 0.5) * width;
  }
  for (const auto& p : ensemble.paths) {
    for (double v : p.values) {
      if (!std::isfinite(v)) continue;
      const double pos = std::floor((v - origin) / width);
      const auto k = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(n_bins - 1)));
      ++report.counts[k];
    }
  }

  const std::size_t half = window / 2;
  report.smoothed.assign(n_bins, 0.0);
  for (std::size_t k = 0; k < n_bins; ++k) {
    const std::size_t from = k >= half ? k - half : 0;
    const std::size_t to = std::min(n_bins - 1, k + half);
    double acc = 0.0;
    for (std::size_t m = from; m <= to; ++m) acc += static_cast<double>(report.counts[m]);
    report.smoothed[k] = acc / static_cast<double>(to - from + 1);
  }

  const double peak_height = *std::max_element(report.smoothed.begin(), report.smoothed.end());
  double top_prominence = 0.0;
  for (const auto& run : find_peaks(report.smoothed)) {
    if (run.prominence <= kPeakProminenceFraction * peak_height) continue;
    const double location = 0.5 * (report.bin_centers[run.first] + report.bin_centers[run.last]);
    report.peaks.push_back({location, run.prominence});
    top_prominence = std::max(top_prominence, run.prominence);
  }
  double score = 0.0;
  for (const auto& peak : report.peaks) score += peak.prominence / top_prominence;
  report.multimodality_score = score;
  return report;
}

}  // namespace bgc
