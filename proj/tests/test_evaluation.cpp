#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "volfc/errors.hpp"
#include "volfc/evaluation.hpp"

using namespace volfc;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("volfc-test-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<double> ar1(double phi, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> z(n);
  double x = 0.0;
  for (auto& v : z) {
    x = phi * x + g(rng);
    v = x;
  }
  return z;
}

}  // namespace

TEST_CASE("mse and mape") {
  CHECK(mse(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
  CHECK(mse(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 1.0);
  CHECK(mse(std::vector<double>{1, 2}, std::vector<double>{0, 0}) == 2.5);
  CHECK_THROWS_AS(mse(std::vector<double>{1}, std::vector<double>{1, 2}), DataError);
  CHECK(mape(std::vector<double>{1.1}, std::vector<double>{1.0}) == doctest::Approx(0.1));
}

TEST_CASE("acf and pacf of an AR(1) process") {
  const auto z = ar1(0.5, 100000, 3);
  const auto a = acf(z, 5);
  const auto p = pacf(z, 5);
  CHECK(a[0] == 1.0);
  CHECK(p[0] == 1.0);
  CHECK(a[1] > 0.48);
  CHECK(a[1] < 0.52);
  CHECK(a[2] == doctest::Approx(0.25).epsilon(0.1));
  CHECK(p[1] == doctest::Approx(a[1]).epsilon(1e-12));
  CHECK(std::abs(p[2]) < 0.02);
}

TEST_CASE("acf of white noise") {
  const auto z = ar1(0.0, 100000, 4);
  const auto a = acf(z, 20);
  REQUIRE(a.size() == 21);
  for (std::size_t k = 1; k < a.size(); ++k) CHECK(std::abs(a[k]) < 0.02);
  CHECK_THROWS_AS(acf(std::vector<double>(50, 1.0), 3), DataError);
  CHECK_THROWS_AS(acf(std::vector<double>{1, 2, 3}, 2), DataError);
}

TEST_CASE("make_metrics") {
  const auto actual = ar1(0.3, 200, 5);
  std::vector<double> pred(actual.size(), 0.0);
  const auto m = make_metrics("lstm", pred, actual, 10);
  CHECK(m.model_name == "lstm");
  CHECK(m.n_test == 200);
  CHECK(m.residual_acf.size() == 11);
  CHECK(m.residual_pacf.size() == 11);
  CHECK(m.residual_acf[0] == 1.0);
  const auto flat = make_metrics("garch", actual, actual, 10);
  CHECK(flat.mse == 0.0);
  CHECK(flat.residual_acf.empty());
}

TEST_CASE("synthetic generator") {
  SynthConfig cfg;
  cfg.n_days = 600;
  cfg.n_trends = 4;
  const auto a = synth_generate(cfg);
  CHECK(a.bars.size() == 600);
  CHECK(a.trends.size() == 4);
  CHECK(a.trends[0].keyword == "insur");
  for (const auto& b : a.bars) {
    CHECK(b.low <= std::min(b.open, b.close));
    CHECK(b.high >= std::max(b.open, b.close));
  }
  for (const auto& t : a.trends) {
    for (const auto& v : t.values) CHECK(*v > 0.0);
  }

  const auto dir1 = fresh_dir("synth-a");
  const auto dir2 = fresh_dir("synth-b");
  write_synth_files(a, dir1.string());
  write_synth_files(synth_generate(cfg), dir2.string());
  CHECK(slurp(dir1 / "ohlc.csv") == slurp(dir2 / "ohlc.csv"));
  CHECK(slurp(dir1 / "trends.csv") == slurp(dir2 / "trends.csv"));

  const auto panel = align(read_ohlc_file((dir1 / "ohlc.csv").string()), read_trends_file((dir1 / "trends.csv").string()));
  CHECK(panel.size() == 599);
  CHECK(static_cast<double>(panel.gk_clamped) <= 0.05 * static_cast<double>(panel.size()));

  auto other = cfg;
  other.seed = 8;
  CHECK(synth_generate(other).bars[10].close != a.bars[10].close);

  auto bad = cfg;
  bad.n_days = 100;
  CHECK_THROWS_AS(synth_generate(bad), ConfigError);
  bad = cfg;
  bad.trend_coupling = 1.5;
  CHECK_THROWS_AS(synth_generate(bad), ConfigError);
}

TEST_CASE("simulated days match their variance on average") {
  std::mt19937_64 rng(1);
  const Date d = *parse_date("2010-01-04");
  const double variance = 1e-4;
  double sum = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    std::normal_distribution<double> g(0.0, std::sqrt(variance));
    sum += gk_volatility(simulate_day(rng, d, 100.0, g(rng), variance, kIntradaySteps));
  }
  CHECK(sum / n == doctest::Approx(variance).epsilon(0.1));
}

namespace {

/// Plug-in MI in excess of its mean over seeded permutations of `x`.
double mi_excess(std::vector<double> x, const std::vector<double>& y, std::uint64_t seed) {
  const double observed = empirical_mi(x, y, kDefaultBins);
  std::mt19937_64 rng(seed);
  double null_mean = 0.0;
  const int rounds = 20;
  for (int i = 0; i < rounds; ++i) {
    std::shuffle(x.begin(), x.end(), rng);
    null_mean += empirical_mi(x, y, kDefaultBins) / rounds;
  }
  return observed - null_mean;
}

}  // namespace

TEST_CASE("uncoupled trends carry no information about volatility") {
  SynthConfig cfg;
  cfg.n_days = 2001;
  cfg.n_trends = 5;
  for (double coupling : {0.0, 0.8}) {
    cfg.trend_coupling = coupling;
    const auto data = synth_generate(cfg);
    const auto panel = align(data.bars, data.trends);
    REQUIRE(panel.size() == 2000);
    for (const auto& t : panel.trends) {
      const double excess = mi_excess(t.values, panel.h, 1);
      MESSAGE("coupling " << coupling << ", " << t.keyword << ": MI above permutation null " << excess);
      if (coupling == 0.0) {
        CHECK(excess < 0.15);
      } else {
        CHECK(excess > 0.05);
      }
    }
  }
}

TEST_CASE("coupled trends lead volatility") {
  SynthConfig cfg;
  cfg.n_days = 2001;
  cfg.n_trends = 2;
  cfg.trend_coupling = 1.0;
  const auto data = synth_generate(cfg);
  std::vector<double> lead(data.latent_variance.begin() + 1, data.latent_variance.end());
  std::vector<double> trend;
  for (std::size_t t = 0; t + 1 < data.trends[0].values.size(); ++t) trend.push_back(*data.trends[0].values[t]);
  double mt = 0, ml = 0;
  for (std::size_t i = 0; i < trend.size(); ++i) {
    mt += trend[i];
    ml += lead[i];
  }
  mt /= static_cast<double>(trend.size());
  ml /= static_cast<double>(lead.size());
  double c = 0, vt = 0, vl = 0;
  for (std::size_t i = 0; i < trend.size(); ++i) {
    c += (trend[i] - mt) * (lead[i] - ml);
    vt += (trend[i] - mt) * (trend[i] - mt);
    vl += (lead[i] - ml) * (lead[i] - ml);
  }
  CHECK(c / std::sqrt(vt * vl) > 0.9);
}

TEST_CASE("small experiment end to end") {
  ExperimentConfig cfg;
  cfg.synth.n_days = 400;
  cfg.synth.n_trends = 3;
  cfg.scheme = Scheme{2, 3};
  cfg.train.lag = 5;
  cfg.train.epochs = 2;
  cfg.train.hidden_dim = 4;
  cfg.diagnostic_lags = 5;
  cfg.out_dir = fresh_dir("run").string();
  const auto report = run_experiment(cfg);
  REQUIRE(report.models.size() == 2);
  CHECK(report.models[0].model_name == "lstm");
  CHECK(report.models[1].model_name == "garch");
  CHECK(report.dataset_rows == 195);
  CHECK(report.train_rows == 156);
  CHECK(report.actual.size() == 39);
  CHECK(report.lstm_pred.size() == 39);
  CHECK(report.garch_pred.size() == 39);
  CHECK(report.adf.size() == 5);
  for (const char* f : {"report.json", "predictions.csv", "history.csv", "model.json"}) {
    CHECK(std::filesystem::exists(std::filesystem::path(cfg.out_dir) / f));
  }
  CHECK_FALSE(std::filesystem::exists(std::filesystem::path(cfg.out_dir) / "mi-surface.csv"));
  const std::string first = slurp(std::filesystem::path(cfg.out_dir) / "report.json");
  const std::string preds = slurp(std::filesystem::path(cfg.out_dir) / "predictions.csv");
  CHECK(preds.rfind("date,actual,lstm,garch\n", 0) == 0);

  run_experiment(cfg);
  CHECK(slurp(std::filesystem::path(cfg.out_dir) / "report.json") == first);
  CHECK(slurp(std::filesystem::path(cfg.out_dir) / "predictions.csv") == preds);
}

TEST_CASE("grid-selected experiment writes the surface") {
  ExperimentConfig cfg;
  cfg.synth.n_days = 400;
  cfg.synth.n_trends = 2;
  cfg.scheme.reset();
  cfg.delta_t_range = {1, 3};
  cfg.k_range = {2, 4};
  cfg.mi_bins = 10;
  cfg.train.lag = 5;
  cfg.train.epochs = 1;
  cfg.train.hidden_dim = 3;
  cfg.out_dir = fresh_dir("grid").string();
  const auto report = run_experiment(cfg);
  REQUIRE(report.surface.has_value());
  CHECK(report.scheme == report.surface->best);
  CHECK(std::filesystem::exists(std::filesystem::path(cfg.out_dir) / "mi-surface.csv"));
}

TEST_CASE("stage errors carry the stage name") {
  ExperimentConfig cfg;
  cfg.synth.n_days = 200;
  cfg.synth.n_trends = 1;
  cfg.scheme = Scheme{5, 5};
  try {
    run_experiment(cfg);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("stage '") == 0);
  }
  cfg.ohlc_path = "x.csv";
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}
