#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bgc/ensemble.hpp"
#include "bgc/errors.hpp"

namespace bgc {

/// Per-time cross-path quantile band.
struct Envelope {
  std::vector<double> times;
  std::vector<double> lower;
  std::vector<double> upper;
  double quantile = 1.0;
};

/// Lower = (1 - q) and upper = q empirical quantiles of the non-diverged
/// path values at every step; q = 1 gives min/max. Quantiles use linear
/// interpolation between order statistics.
///
/// Throws PreconditionError for q outside (0.5, 1] and AnalysisError
/// (EmptyInput) when every path diverged.
Envelope empirical_envelope(const PathEnsemble& ensemble, double quantile);

enum class BarrierSide { Lower, Upper, SymmetricJoint };

std::string_view to_string(BarrierSide side);
std::optional<BarrierSide> barrier_side_from_string(std::string_view name);

/// B_U(t) = A (1 - e^{-theta t}) + C and B_L(t) = -A (1 - e^{-theta t}) + C.
struct BarrierFit {
  double A = 0.0;
  double theta = 0.0;
  double C = 0.0;
  double rmse = 0.0;
  // Fraction of (path, step) values inside [B_L, B_U]; absent when the fit
  // was made from an envelope alone.
  std::optional<double> containment;
  BarrierSide side = BarrierSide::SymmetricJoint;
  double quantile = 1.0;
  std::vector<double> times;

  double upper_at(double t) const;
  double lower_at(double t) const;
  /// dB_U/dt = A theta e^{-theta t}.
  double rate_at(double t) const;
};

struct FitCandidate {
  double A = 0.0;
  double theta = 0.0;
  double C = 0.0;
  double rmse = 0.0;
};

/// Refinement failed to converge; carries the best grid-search node.
class FitError : public AnalysisError {
 public:
  FitError(const std::string& what, FitCandidate best)
      : AnalysisError(AnalysisErrorKind::NonConvergent, what), best_(best) {}

  const FitCandidate& best_candidate() const noexcept { return best_; }

 private:
  FitCandidate best_;
};

/// Smallest and largest admissible theta.
inline constexpr double kThetaMin = 1e-4;
inline constexpr double kThetaMax = 1.0;

/// Least-squares fit of the saturating barrier to one or both envelope sides.
///
/// Search: log-spaced theta grid over [kThetaMin, kThetaMax] with A (and C)
/// solved in closed form at every node, then damped Gauss-Newton on all free
/// parameters. SymmetricJoint shares (A, theta) between sides and pins C = 0.
///
/// Throws PreconditionError for fewer than 10 points, AnalysisError
/// (UnidentifiableTheta) for a flat-zero envelope, and FitError when the
/// refinement does not converge.
BarrierFit fit_barrier(const Envelope& envelope, BarrierSide side, bool fix_c_zero = true);

/// As above, then fills `containment` from `ensemble`.
BarrierFit fit_barrier(const Envelope& envelope, BarrierSide side, bool fix_c_zero,
                       const PathEnsemble& ensemble);

struct ContainmentReport {
  std::vector<double> per_step;  // fraction inside at each step
  double overall = 0.0;
  std::size_t inside = 0;
  std::size_t total = 0;
  // 2q - 1 for the quantile the fit was made from.
  double required = 0.0;
  bool meets_bound = false;
};

/// Fraction of non-diverged values inside [B_L(t), B_U(t)]. Throws
/// PreconditionError when the fit's time grid differs from the ensemble's.
ContainmentReport check_barrier_bound(const PathEnsemble& ensemble, const BarrierFit& fit);

struct BandPeak {
  double location = 0.0;
  double prominence = 0.0;  // in smoothed-count units
};

struct BandReport {
  std::vector<double> bin_centers;
  std::vector<std::size_t> counts;
  std::vector<double> smoothed;
  std::vector<BandPeak> peaks;  // sorted by location
  double multimodality_score = 0.0;
};

inline constexpr double kPeakProminenceFraction = 0.05;

/// Occupancy histogram of all values pooled over paths and steps, smoothed by
/// a centred moving average over 2 * (smoothing_window / 2) + 1 bins (default
/// window n_bins / 64; truncated at the ends), with peaks whose topographic
/// prominence exceeds 5% of the smoothed maximum.
///
/// The score is the peak count weighted by prominence relative to the most
/// prominent peak: exactly 1 for a unimodal histogram, 1 + sum of the other
/// ratios otherwise.
BandReport detect_bands(const PathEnsemble& ensemble, std::size_t n_bins = 256,
                        std::optional<std::size_t> smoothing_window = std::nullopt);

/// A local maximum of a series; equal-height plateaus form one run.
struct PeakRun {
  std::size_t first = 0;
  std::size_t last = 0;
  double prominence = 0.0;
};

/// Every local maximum with its topographic prominence: height minus the
/// higher of the lowest points on each side before higher ground (or the
/// series end). A side that does not exist is ignored.
std::vector<PeakRun> find_peaks(std::span<const double> series);

}  // namespace bgc
