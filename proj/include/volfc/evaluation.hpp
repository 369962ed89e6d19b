#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "volfc/garch.hpp"
#include "volfc/infometrics.hpp"
#include "volfc/lstm.hpp"
#include "volfc/marketdata.hpp"
#include "volfc/preprocess.hpp"

namespace volfc {

double mse(std::span<const double> pred, std::span<const double> actual);
/// Evaluation MAPE: never drops samples; denominators floored at `epsilon`.
double mape(std::span<const double> pred, std::span<const double> actual, double epsilon = 1e-8);

/// Sample autocorrelation for lags 0..max_lag (acf[0] = 1).
std::vector<double> acf(std::span<const double> z, int max_lag);
/// Partial autocorrelation for lags 0..max_lag via Durbin-Levinson (pacf[0] = 1).
std::vector<double> pacf(std::span<const double> z, int max_lag);

struct MetricsReport {
  std::string model_name;
  double mse = 0.0;
  double mape = 0.0;
  std::size_t n_test = 0;
  std::vector<double> residual_acf;
  std::vector<double> residual_pacf;
};

/// Residual = actual - pred. acf/pacf are left empty when the residual series is
/// too short or constant.
MetricsReport make_metrics(std::string name, std::span<const double> pred, std::span<const double> actual,
                           int max_lag);

struct SynthConfig {
  std::size_t n_days = 2500;
  std::size_t n_trends = 28;
  /// Latent daily GARCH(1,1) for log returns (unconditional daily vol 1%).
  GarchParams garch{5e-6, 0.10, 0.85};
  double trend_coupling = 0.8;
  std::uint64_t seed = 7;
};

void validate(const SynthConfig& config);

inline constexpr int kIntradaySteps = 20;

struct SynthData {
  std::vector<OhlcBar> bars;
  std::vector<TrendSeries> trends;
  /// Latent daily variance that generated each bar.
  std::vector<double> latent_variance;
};

/// Synthetic OHLC + search-volume panel. Each day is 20 Gaussian sub-steps whose
/// Brownian-bridge extremes set high and low; trend j on day t mixes the
/// standardized latent volatility of day t+1 with seeded noise.
SynthData synth_generate(const SynthConfig& config);

/// Simulates one day starting at `open` with total log variance `variance`,
/// split over `steps` sub-steps; the day's log return is `log_return`.
template <typename Rng>
OhlcBar simulate_day(Rng& rng, const Date& date, double open, double log_return, double variance, int steps);

void write_synth_files(const SynthData& data, const std::string& dir);

inline constexpr const char* kTrendPrefix = "kw";

struct ExperimentConfig {
  std::string ohlc_path;
  std::string trends_path;
  /// Used when no input paths are given.
  SynthConfig synth;
  /// std::nullopt selects the scheme by grid search.
  std::optional<Scheme> scheme = Scheme{5, 5};
  IntRange delta_t_range{1, 10};
  IntRange k_range{2, 20};
  int mi_bins = kDefaultBins;
  TrainConfig train;
  int adf_lags = kAdfDefaultLags;
  int diagnostic_lags = 10;
  std::string out_dir;
};

struct ExperimentReport {
  Scheme scheme;
  std::size_t panel_days = 0;
  std::size_t gk_clamped = 0;
  std::size_t dataset_rows = 0;
  std::size_t train_rows = 0;
  std::vector<StationarityReport> adf;
  std::optional<MiSurface> surface;
  GarchFit garch;
  std::vector<MetricsReport> models;

  std::vector<Date> test_dates;
  std::vector<double> actual;
  std::vector<double> lstm_pred;
  std::vector<double> garch_pred;
  TrainedModel model;
};

/// ADF on r, h and every trend column of the panel.
std::vector<StationarityReport> panel_stationarity(const AlignedPanel& panel, int lags);

/// GARCH one-step forecasts for the test rows [first_row, rows) of `dataset`,
/// from a fit on the aggregated returns up to the last training target period.
struct GarchBenchmark {
  GarchFit fit;
  std::vector<double> forecasts;
};
GarchBenchmark garch_benchmark(const AlignedPanel& panel, const SchemeDataset& dataset, std::size_t first_test_row);

/// ingest -> align -> ADF -> scheme selection -> dataset -> LSTM -> GARCH -> metrics.
/// Writes report.json, predictions.csv, history.csv (and mi-surface.csv for grid
/// selection) into config.out_dir when it is non-empty.
ExperimentReport run_experiment(const ExperimentConfig& config);

void write_report_json(std::ostream& out, const ExperimentReport& report, const ExperimentConfig& config);
void write_predictions_csv(std::ostream& out, const ExperimentReport& report);

}  // namespace volfc

#include "volfc/detail/simulate_day.hpp"
