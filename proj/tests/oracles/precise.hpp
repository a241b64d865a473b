#pragma once

// 50-digit reference evaluations, independent of the double-precision code
// under test.

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace bgc::oracle {

using Precise = boost::multiprecision::cpp_bin_float_50;

inline double spliced_polynomial(double x, double omega1, double omega2, int n) {
  const Precise ax = boost::multiprecision::abs(Precise(x));
  return static_cast<double>(boost::multiprecision::pow(ax, n) / Precise(omega1) + Precise(omega2));
}

inline double oup_mean(double x0, double alpha, double kappa, double horizon) {
  const Precise decay = boost::multiprecision::exp(-Precise(kappa) * Precise(horizon));
  return static_cast<double>(Precise(x0) * decay + Precise(alpha) * (1 - decay));
}

inline double oup_step_mean(double x, double alpha, double kappa, double dt) {
  return oup_mean(x, alpha, kappa, dt);
}

inline double oup_step_variance(double sigma, double kappa, double dt) {
  const Precise k(kappa);
  const Precise s(sigma);
  return static_cast<double>(s * s * (1 - boost::multiprecision::exp(-2 * k * Precise(dt))) / (2 * k));
}

}  // namespace bgc::oracle
