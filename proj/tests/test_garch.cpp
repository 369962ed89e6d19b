#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "volfc/errors.hpp"
#include "volfc/garch.hpp"

using namespace volfc;

TEST_CASE("constraints") {
  CHECK(satisfies_constraints({0.1, 0.1, 0.8}));
  CHECK_FALSE(satisfies_constraints({0.0, 0.1, 0.8}));
  CHECK_FALSE(satisfies_constraints({0.1, -0.1, 0.8}));
  CHECK_FALSE(satisfies_constraints({0.1, 0.2, 0.8}));
  CHECK_THROWS_AS(garch_filter(std::vector<double>{0.1, 0.2}, {0.1, 0.5, 0.5}), ConfigError);
}

TEST_CASE("filter without dynamics is constant omega") {
  const std::vector<double> r{0.3, -1.2, 0.5, 2.0};
  const auto h2 = garch_filter(r, {0.7, 0.0, 0.0}, 0.7);
  for (double v : h2) CHECK(v == 0.7);
}

TEST_CASE("zero returns converge to omega / (1 - beta)") {
  const std::vector<double> r(400, 0.0);
  const auto h2 = garch_filter(r, {0.2, 0.3, 0.6}, 1.0);
  CHECK(h2.back() == doctest::Approx(0.2 / 0.4).epsilon(1e-12));
}

TEST_CASE("three-step reference") {
  const std::vector<double> r{0.1, -0.2, 0.15};
  const GarchParams p{0.1, 0.2, 0.3};
  const auto h2 = garch_filter(r, p);
  REQUIRE(h2.size() == 3);
  CHECK(h2[0] == doctest::Approx(0.02388888888888889).epsilon(1e-14));
  CHECK(h2[1] == doctest::Approx(0.10916666666666667).epsilon(1e-14));
  CHECK(h2[2] == doctest::Approx(0.14075).epsilon(1e-14));
  // 30-digit reference for sqrt(0.146725).
  CHECK(garch_forecast(p, r) == doctest::Approx(0.383046994505896103891718743089).epsilon(1e-14));
}

TEST_CASE("log-likelihood") {
  const std::vector<double> zeros(10, 0.0);
  const double ll = garch_loglik(zeros, {1.0, 0.0, 0.0}, 1.0);
  CHECK(ll == doctest::Approx(-5.0 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));

  const GarchParams truth{0.05, 0.10, 0.85};
  const auto r = simulate_garch(truth, 2000, 3);
  const double base = garch_loglik(r, truth);
  CHECK(garch_loglik(r, {truth.omega * 100.0, truth.alpha, truth.beta}) < base);

  std::vector<double> twice = r;
  twice.insert(twice.end(), r.begin(), r.end());
  CHECK(std::abs(garch_loglik(twice, truth) - 2.0 * base) > 1e-6);
}

TEST_CASE("filter is causal") {
  const GarchParams p{0.05, 0.10, 0.85};
  const auto r = simulate_garch(p, 300, 9);
  const auto clean = garch_filter(r, p, 1.0);
  for (std::size_t cut : {1u, 50u, 299u}) {
    auto poisoned = r;
    for (std::size_t t = cut; t < poisoned.size(); ++t) poisoned[t] = std::numeric_limits<double>::quiet_NaN();
    const auto dirty = garch_filter(poisoned, p, 1.0);
    // h2_t reads returns through t - 1.
    for (std::size_t t = 0; t <= cut; ++t) CHECK(dirty[t] == clean[t]);
    if (cut + 1 < r.size()) CHECK(std::isnan(dirty[cut + 1]));
  }
}

TEST_CASE("conditional variance is bounded below by omega") {
  const GarchParams p{0.02, 0.15, 0.80};
  const auto r = simulate_garch(p, 1000, 1);
  const auto h2 = garch_filter(r, p);
  for (std::size_t t = 1; t < h2.size(); ++t) CHECK(h2[t] >= p.omega);
}

TEST_CASE("contemporaneous timing solves its own quadratic") {
  const GarchParams p{0.05, 0.10, 0.85};
  const auto r = simulate_garch(p, 200, 4);
  const auto h2 = garch_filter(r, p, 1.0, GarchTiming::Contemporaneous);
  for (std::size_t t = 1; t < h2.size(); ++t) {
    const double eps2 = r[t] * r[t] / h2[t];
    CHECK(h2[t] == doctest::Approx(p.omega + h2[t - 1] * (p.beta + p.alpha * eps2)).epsilon(1e-12));
  }
  CHECK(garch_filter(r, p, 1.0) != h2);
}

TEST_CASE("simulation") {
  const GarchParams p{0.05, 0.10, 0.85};
  const auto path = simulate_garch_path(p, 400000, 12);
  const double mean_sq =
      std::inner_product(path.returns.begin(), path.returns.end(), path.returns.begin(), 0.0) / 400000.0;
  CHECK(std::abs(mean_sq - 1.0) < 0.1);
  CHECK(simulate_garch(p, 100, 5) == simulate_garch(p, 100, 5));
  CHECK(simulate_garch(p, 100, 5) != simulate_garch(p, 100, 6));
  CHECK(std::vector<double>(path.returns.begin(), path.returns.begin() + 100) == simulate_garch(p, 100, 12));
}

TEST_CASE("nelder-mead minimizes a quadratic") {
  const auto res = nelder_mead(
      [](std::span<const double> x) { return (x[0] - 1.0) * (x[0] - 1.0) + 4.0 * (x[1] + 2.0) * (x[1] + 2.0); },
      {0.0, 0.0}, 0.5, 1e-10, 5000);
  CHECK(res.converged);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.x[1] == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("fit improves on every start and recovers parameters") {
  const GarchParams truth{0.05, 0.10, 0.85};
  const auto r = simulate_garch(truth, 2000, 1);
  const auto fit = fit_garch(r);
  CHECK(fit.converged);
  CHECK(satisfies_constraints(fit.params));
  REQUIRE(fit.start_log_likelihoods.size() == 3);
  for (double s : fit.start_log_likelihoods) CHECK(fit.log_likelihood >= s);
  CHECK(fit.log_likelihood == doctest::Approx(garch_loglik(r, fit.params, fit.initial_variance)).epsilon(1e-12));
  CHECK(fit.params.beta == doctest::Approx(0.85).epsilon(0.2));
  CHECK(garch_forecast(fit, r) > 0.0);

  const auto again = fit_garch(r);
  CHECK(again.params.omega == fit.params.omega);
  CHECK(again.params.alpha == fit.params.alpha);
  CHECK(again.params.beta == fit.params.beta);

  std::ostringstream out;
  write_garch_fit_json(out, fit, r.size());
  CHECK(out.str().find("\"n_obs\": 2000") != std::string::npos);
}

TEST_CASE("fit input errors") {
  CHECK_THROWS_AS(fit_garch(std::vector<double>(100, 0.0)), NumericError);
  CHECK_THROWS_AS(fit_garch(std::vector<double>(10, 0.1)), DataError);
}
