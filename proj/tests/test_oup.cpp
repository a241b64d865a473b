#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bgc/errors.hpp"
#include "bgc/oup.hpp"
#include "bgc/sde_engine.hpp"
#include "oracles/precise.hpp"

using namespace bgc;

TEST_CASE("analytic mean matches a 50-digit evaluation") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> kappa(1e-6, 2.0), alpha(-50, 50), x0(-50, 50), T(0, 5000);
  for (int i = 0; i < 500; ++i) {
    OupParams p;
    p.kappa = kappa(gen);
    p.alpha = alpha(gen);
    p.x0 = x0(gen);
    const double t = T(gen);
    const double expected = oracle::oup_mean(p.x0, p.alpha, p.kappa, t);
    CHECK(oup_mean(p, t) == doctest::Approx(expected).epsilon(1e-13).scale(std::abs(p.alpha) + 1));
  }
  OupParams p;
  CHECK(oup_mean(p, 1000.0) == doctest::Approx(25.0 * (1.0 - std::exp(-10.0))).epsilon(1e-15));
  CHECK(oup_mean(p, 0.0) == 0.0);
}

TEST_CASE("transition variance matches a 50-digit evaluation") {
  for (double kappa : {1e-8, 1e-3, 0.01, 0.5, 3.0}) {
    for (double dt : {0.01, 1.0, 10.0}) {
      OupParams p;
      p.kappa = kappa;
      p.sigma = 1.3;
      CHECK(oup_transition_variance(p, dt) ==
            doctest::Approx(oracle::oup_step_variance(1.3, kappa, dt)).epsilon(1e-12));
    }
  }
}

TEST_CASE("exact step uses the transition mean and standard deviation") {
  OupConfig c;
  c.steps = 4;
  c.horizon = 3.0;
  c.params.kappa = 0.2;
  c.params.alpha = 5.0;
  c.params.sigma = 0.7;
  const std::vector<double> noise{0.5, -1.0, 0.0};
  const auto p = simulate_oup_path(c, 0, noise);
  double x = 0.0;
  for (std::size_t j = 1; j < 4; ++j) {
    x = oracle::oup_step_mean(x, 5.0, 0.2, 1.0) +
        std::sqrt(oracle::oup_step_variance(0.7, 0.2, 1.0)) * noise[j - 1];
    CHECK(p.values[j] == doctest::Approx(x).epsilon(1e-14));
  }
}

TEST_CASE("exact single-step moments match high precision over random parameters") {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> kappa(1e-4, 1.0), sigma(0.1, 3.0), dt(0.01, 20.0),
      x(-30, 30), alpha(-30, 30);
  for (int i = 0; i < 200; ++i) {
    OupConfig c;
    c.params.kappa = kappa(gen);
    c.params.sigma = sigma(gen);
    c.params.alpha = alpha(gen);
    c.params.x0 = x(gen);
    c.steps = 2;
    c.horizon = dt(gen);
    // Mean from a zero draw; variance from the response to a unit draw.
    const std::vector<double> zero{0.0}, one{1.0};
    const double m = simulate_oup_path(c, 0, zero).values[1];
    auto centred = c;
    centred.params.x0 = 0.0;
    centred.params.alpha = 0.0;
    const double sd = simulate_oup_path(centred, 0, one).values[1];
    const double ref_m = oracle::oup_step_mean(c.params.x0, c.params.alpha, c.params.kappa, c.horizon);
    const double ref_v = oracle::oup_step_variance(c.params.sigma, c.params.kappa, c.horizon);
    CHECK(m == doctest::Approx(ref_m).epsilon(1e-12).scale(30.0));
    CHECK(sd * sd == doctest::Approx(ref_v).epsilon(1e-12));
  }
}

TEST_CASE("Euler scheme converges to the exact mean as dt shrinks") {
  auto error_at = [](std::size_t steps) {
    OupConfig c;
    c.scheme = OupScheme::Euler;
    c.steps = steps;
    c.params.sigma = 0.0;
    const std::vector<double> noise(steps - 1, 0.0);
    const auto p = simulate_oup_path(c, 0, noise);
    return std::abs(p.values.back() - oup_mean(c.params, c.horizon));
  };
  const double coarse = error_at(101);
  const double fine = error_at(1001);
  CHECK(fine < coarse);
  CHECK(fine < 1e-4);
  CHECK(coarse / fine > 5.0);
}

TEST_CASE("sample mean of the terminal value is within three standard errors") {
  OupConfig c;
  c.n_paths = 4000;
  c.steps = 201;
  const auto ens = simulate_oup(c, 2);
  double sum = 0.0, sq = 0.0;
  for (const auto& p : ens.paths) {
    sum += p.values.back();
    sq += p.values.back() * p.values.back();
  }
  const double n = double(ens.n_paths());
  const double mean = sum / n;
  const double sd = std::sqrt((sq - n * mean * mean) / (n - 1));
  CHECK(std::abs(mean - oup_mean(c.params, c.horizon)) < 3.0 * sd / std::sqrt(n));

  c.scheme = OupScheme::Euler;
  const auto euler = simulate_oup(c, 2);
  double esum = 0.0;
  for (const auto& p : euler.paths) esum += p.values.back();
  CHECK(std::abs(esum / n - oup_mean(c.params, c.horizon)) < 4.0 * sd / std::sqrt(n));
}

TEST_CASE("OUP shares the BGC seed contract") {
  OupConfig c;
  c.n_paths = 20;
  c.steps = 101;
  const auto a = simulate_oup(c, 1);
  CHECK(simulate_oup(c, 3) == a);
  CHECK(a.per_path_seeds() == [&] {
    SimulationConfig s;
    s.n_paths = 20;
    s.steps = 101;
    return simulate_ensemble(s, 1).per_path_seeds();
  }());
  CHECK_FALSE(a.paths[0].has_raw());
}

TEST_CASE("OUP preconditions") {
  OupConfig c;
  c.params.kappa = 0.0;
  CHECK_THROWS_AS(simulate_oup(c), PreconditionError);
  c = OupConfig{};
  c.params.sigma = -1.0;
  CHECK_THROWS_AS(simulate_oup(c), PreconditionError);
  c = OupConfig{};
  c.steps = 1;
  CHECK_THROWS_AS(simulate_oup(c), PreconditionError);
  CHECK(oup_scheme_from_string("exact") == OupScheme::Exact);
  CHECK_FALSE(oup_scheme_from_string("milstein").has_value());
}

TEST_CASE("mean edge values") {
  OupParams p;
  p.x0 = 5.0;
  CHECK(oup_mean(p, 0.0) == 5.0);
  p.x0 = 0.0;
  CHECK(oup_mean(p, 1e6) == doctest::Approx(25.0).epsilon(1e-15));
  p.kappa = 1e3;
  CHECK(oup_mean(p, 1.0) == doctest::Approx(25.0).epsilon(1e-15));
}

TEST_CASE("noise-free paths") {
  for (auto scheme : {OupScheme::Exact, OupScheme::Euler}) {
    OupConfig c;
    c.scheme = scheme;
    c.params.sigma = 0.0;
    c.params.x0 = 25.0;
    c.steps = 101;
    const std::vector<double> zeros(100, 0.0);
    for (double v : simulate_oup_path(c, 0, zeros).values) CHECK(v == doctest::Approx(25.0).epsilon(1e-15));

    for (double x0 : {-40.0, 0.0, 60.0}) {
      c.params.x0 = x0;
      const auto p = simulate_oup_path(c, 0, zeros);
      for (std::size_t j = 1; j < p.values.size(); ++j) {
        CHECK(std::abs(p.values[j] - 25.0) < std::abs(p.values[j - 1] - 25.0));
      }
    }
  }

  OupConfig c;
  c.params.sigma = 0.0;
  c.steps = 37;
  const std::vector<double> zeros(36, 0.0);
  const auto p = simulate_oup_path(c, 0, zeros);
  for (std::size_t j = 0; j < p.values.size(); ++j) {
    CHECK(p.values[j] == doctest::Approx(oup_mean(c.params, c.time_at(j))).epsilon(1e-12));
  }
}
