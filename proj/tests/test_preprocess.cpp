#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "test_support.hpp"
#include "volfc/errors.hpp"
#include "volfc/preprocess.hpp"

using namespace volfc;
using volfc::testing::panel_from_columns;
using volfc::testing::random_panel;

TEST_CASE("aggregation over blocks") {
  const std::vector<double> r{0.01, -0.02, 0.03, 0.04, 0.05, 0.06, 0.07};
  const auto rp = aggregate_returns(r, 3);
  REQUIRE(rp.size() == 2);
  CHECK(rp[0] == doctest::Approx(0.02));
  CHECK(rp[1] == doctest::Approx(0.15));

  const auto dp = aggregate_trend(std::vector<double>{1, 2, 3, 4, 5, 6}, 2);
  CHECK(dp == std::vector<double>{1.5, 3.5, 5.5});

  const auto hp = aggregate_vol(std::vector<double>{3, 4, 1}, 2);
  REQUIRE(hp.size() == 1);
  CHECK(hp[0] == doctest::Approx(5.0));

  CHECK(aggregate_returns(r, 1) == r);
  CHECK_THROWS_AS(aggregate_returns(r, 0), ConfigError);
  CHECK_THROWS_AS(aggregate_returns(r, 8), DataError);
}

TEST_CASE("rolling normalization") {
  SUBCASE("step at the end of the window") {
    const auto n = rolling_normalize(std::vector<double>{0, 0, 0, 1}, 3);
    REQUIRE(n.values.size() == 1);
    CHECK(n.values[0] == doctest::Approx(1.5));
    CHECK(n.mean[0] == doctest::Approx(0.25));
    CHECK(n.stddev[0] == doctest::Approx(0.5));
  }
  SUBCASE("linear ramp normalizes to a constant") {
    std::vector<double> ramp(40);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 3.0 + 0.5 * static_cast<double>(i);
    const auto n = rolling_normalize(ramp, 4);
    for (double v : n.values) CHECK(v == doctest::Approx(n.values.front()).epsilon(1e-12));
    CHECK(n.values.front() > 0.0);
  }
  SUBCASE("constant window is degenerate") {
    const auto n = rolling_normalize(std::vector<double>{2, 2, 2, 2, 5}, 2);
    CHECK(n.values[0] == 0.0);
    CHECK(n.degenerate[0] == 1);
    CHECK(n.degenerate[2] == 0);
  }
  SUBCASE("affine invariance") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    std::vector<double> z(200), w(200);
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] = g(rng);
      w[i] = 7.5 * z[i] - 40.0;
    }
    const auto a = rolling_normalize(z, 6);
    const auto b = rolling_normalize(w, 6);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(std::abs(a.values[i] - b.values[i]) < 1e-9);
  }
  CHECK_THROWS_AS(rolling_normalize(std::vector<double>{1, 2, 3}, 1), ConfigError);
  CHECK_THROWS_AS(rolling_normalize(std::vector<double>{1, 2, 3}, 3), DataError);
}

TEST_CASE("scheme dataset shape") {
  const auto panel = random_panel(503, 4, 9);
  for (int dt : {1, 3, 5, 7}) {
    for (int k : {2, 5, 11}) {
      const Scheme s{dt, k};
      const auto ds = build_scheme_dataset(panel, s);
      const long expected = static_cast<long>(503 / dt) - k - 1;
      CHECK(expected_rows(503, s) == expected);
      CHECK(static_cast<long>(ds.rows()) == expected);
      CHECK(ds.input_dim() == 6);
      CHECK(ds.columns.size() == 6);
      CHECK(ds.columns[0] == "r");
      CHECK(ds.columns[1] == "h");
      CHECK(ds.target_dates.size() == ds.rows());
    }
  }
  CHECK_THROWS_AS(build_scheme_dataset(random_panel(20, 1, 1), Scheme{5, 5}), DataError);
  CHECK_THROWS_AS(build_scheme_dataset(panel, Scheme{0, 5}), ConfigError);
  CHECK_THROWS_AS(build_scheme_dataset(panel, Scheme{5, 1}), ConfigError);
}

TEST_CASE("target is the next period's volatility") {
  const std::size_t days = 60;
  std::vector<double> r(days, 0.0), h(days), d(days, 1.0);
  for (std::size_t t = 0; t < days; ++t) h[t] = 0.01 * static_cast<double>(t + 1);
  const auto panel = panel_from_columns(r, h, {d});
  const Scheme s{2, 3};
  const auto ds = build_scheme_dataset(panel, s);
  const auto hp = aggregate_vol(h, 2);
  for (std::size_t j = 0; j < ds.rows(); ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    CHECK(ds.raw_target(row) == hp[3 + j + 1]);
    // Increasing h: the target always lies above its normalization window.
    CHECK(ds.target(row) > 0.0);
    CHECK(denormalize(ds, j, ds.target(row)) == doctest::Approx(ds.raw_target(row)).epsilon(1e-12));
  }
  // Constant trend column is degenerate and reads 0.
  CHECK(ds.features.col(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("degenerate target windows fall back to unit scale") {
  const std::size_t days = 40;
  std::vector<double> r(days, 0.001), h(days, 0.02), d(days);
  for (std::size_t t = 0; t < days; ++t) d[t] = static_cast<double>(t % 7);
  h[days - 1] = 0.05;
  const auto ds = build_scheme_dataset(panel_from_columns(r, h, {d}), Scheme{1, 3});
  const auto last = static_cast<Eigen::Index>(ds.rows() - 1);
  CHECK(ds.degenerate_target[ds.rows() - 1] == 1);
  CHECK(ds.norm_std(last) == 1.0);
  CHECK(ds.target(last) == doctest::Approx(0.03));
}

TEST_CASE("preprocessing is causal") {
  const auto panel = random_panel(400, 3, 21);
  const Scheme s{4, 6};
  const auto clean = build_scheme_dataset(panel, s);
  const std::size_t cut = 250;
  auto poisoned = panel;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t t = cut; t < poisoned.size(); ++t) {
    poisoned.r[t] = nan;
    poisoned.h[t] = nan;
    for (auto& col : poisoned.trends) col.values[t] = nan;
  }
  const auto dirty = build_scheme_dataset(poisoned, s);
  REQUIRE(dirty.rows() == clean.rows());
  std::size_t checked = 0;
  for (std::size_t j = 0; j < clean.rows(); ++j) {
    // Row j reads periods up to k + j + 1, i.e. days before (k + j + 2) * dt.
    if ((static_cast<std::size_t>(s.k) + j + 2) * static_cast<std::size_t>(s.delta_t) > cut) break;
    const auto row = static_cast<Eigen::Index>(j);
    CHECK(dirty.features.row(row) == clean.features.row(row));
    CHECK(dirty.target(row) == clean.target(row));
    CHECK(dirty.raw_target(row) == clean.raw_target(row));
    ++checked;
  }
  CHECK(checked > 40);
}

TEST_CASE("dataset csv has one header and one line per row") {
  const auto ds = build_scheme_dataset(random_panel(120, 2, 2), Scheme{2, 3});
  std::ostringstream out;
  write_dataset_csv(out, ds);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "r,h,t1,t2,target,raw_target,norm_mean,norm_std");
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  CHECK(n == ds.rows());
}

TEST_CASE("adf separates white noise from a random walk") {
  int noise_rejects = 0;
  int walk_rejects = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> noise(1000), walk(1000);
    double level = 0.0;
    for (std::size_t t = 0; t < noise.size(); ++t) {
      noise[t] = g(rng);
      level += g(rng);
      walk[t] = level;
    }
    const auto a = adf_test(noise, 5, "noise");
    CHECK(a.series_name == "noise");
    CHECK(a.lags == 5);
    noise_rejects += a.reject_unit_root_5pct ? 1 : 0;
    walk_rejects += adf_test(walk).reject_unit_root_5pct ? 1 : 0;
  }
  CHECK(noise_rejects == 20);
  CHECK(walk_rejects <= 3);
}

TEST_CASE("adf input errors") {
  CHECK_THROWS_AS(adf_test(std::vector<double>(100, 1.0)), NumericError);
  CHECK_THROWS_AS(adf_test(std::vector<double>(10, 1.0)), DataError);
}
