#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "json.hpp"
#include "volfc/errors.hpp"
#include "volfc/evaluation.hpp"

namespace volfc {
namespace {

using Json = nlohmann::ordered_json;

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  const auto prefix = std::string("stage '") + name + "': ";
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  }
}

Json metrics_json(const MetricsReport& m) {
  return Json{{"name", m.model_name},       {"mse", m.mse},
              {"mape", m.mape},             {"n_test", m.n_test},
              {"residual_acf", m.residual_acf}, {"residual_pacf", m.residual_pacf}};
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<StationarityReport> panel_stationarity(const AlignedPanel& panel, int lags) {
  std::vector<StationarityReport> out;
  auto run = [&](const std::string& name, const std::vector<double>& z) {
    try {
      out.push_back(adf_test(z, lags, name));
    } catch (const NumericError&) {
      out.push_back(StationarityReport{name, std::nan(""), lags, false});
    }
  };
  run("r", panel.r);
  run("h", panel.h);
  for (const auto& t : panel.trends) run(t.keyword, t.values);
  return out;
}

GarchBenchmark garch_benchmark(const AlignedPanel& panel, const SchemeDataset& dataset, std::size_t first_test_row) {
  const auto rp = aggregate_returns(panel.r, dataset.scheme.delta_t);
  const auto k = static_cast<std::size_t>(dataset.scheme.k);
  const std::size_t rows = dataset.rows();
  if (first_test_row == 0 || first_test_row >= rows) throw DataError("invalid train/test split for the GARCH benchmark");

  // Row j predicts period k + j + 1 from returns through period k + j.
  const std::size_t fit_len = k + first_test_row + 1;
  GarchBenchmark bench;
  bench.fit = fit_garch(std::span<const double>(rp.data(), fit_len));

  const std::size_t last_period = k + rows - 1;
  const auto h2 = garch_filter(std::span<const double>(rp.data(), last_period + 1), bench.fit.params,
                               bench.fit.initial_variance);
  const auto& p = bench.fit.params;
  for (std::size_t j = first_test_row; j < rows; ++j) {
    const std::size_t period = k + j;
    bench.forecasts.push_back(std::sqrt(p.omega + p.alpha * rp[period] * rp[period] + p.beta * h2[period]));
  }
  return bench;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  if (config.ohlc_path.empty() != config.trends_path.empty()) {
    throw ConfigError("give both an OHLC and a trends file, or neither for synthetic data");
  }
  validate(config.train);
  if (config.scheme) validate(*config.scheme);

  std::vector<OhlcBar> bars;
  std::vector<TrendSeries> trends;
  stage("ingest", [&] {
    if (config.ohlc_path.empty()) {
      auto synth = synth_generate(config.synth);
      bars = std::move(synth.bars);
      trends = std::move(synth.trends);
    } else {
      bars = read_ohlc_file(config.ohlc_path);
      trends = read_trends_file(config.trends_path);
    }
  });
  const auto panel = stage("align", [&] { return align(bars, trends); });

  ExperimentReport report;
  report.panel_days = panel.size();
  report.gk_clamped = panel.gk_clamped;
  report.adf = stage("adf", [&] { return panel_stationarity(panel, config.adf_lags); });

  if (config.scheme) {
    report.scheme = *config.scheme;
  } else {
    report.surface = stage("mi-grid", [&] {
      return grid_search(panel, config.delta_t_range, config.k_range, config.mi_bins);
    });
    report.scheme = report.surface->best;
  }

  const auto dataset = stage("dataset", [&] { return build_scheme_dataset(panel, report.scheme); });
  report.dataset_rows = dataset.rows();
  report.model = stage("train", [&] { return train(dataset, config.train); });
  report.train_rows = report.model.train_rows;
  const auto prediction = stage("predict", [&] { return predict(report.model, dataset); });
  const auto bench = stage("garch", [&] { return garch_benchmark(panel, dataset, report.train_rows); });
  report.garch = bench.fit;

  for (std::size_t i = 0; i < prediction.rows.size(); ++i) {
    const std::size_t row = prediction.rows[i];
    if (row < report.train_rows) continue;
    report.test_dates.push_back(dataset.target_dates[row]);
    report.actual.push_back(dataset.raw_target(static_cast<Eigen::Index>(row)));
    report.lstm_pred.push_back(prediction.volatility[i]);
  }
  report.garch_pred = bench.forecasts;

  stage("metrics", [&] {
    report.models.push_back(make_metrics("lstm", report.lstm_pred, report.actual, config.diagnostic_lags));
    report.models.push_back(make_metrics("garch", report.garch_pred, report.actual, config.diagnostic_lags));
  });

  if (!config.out_dir.empty()) {
    stage("write", [&] {
      const std::filesystem::path dir(config.out_dir);
      std::filesystem::create_directories(dir);
      auto rep = open_out(dir / "report.json");
      write_report_json(rep, report, config);
      auto pred = open_out(dir / "predictions.csv");
      write_predictions_csv(pred, report);
      auto hist = open_out(dir / "history.csv");
      write_history_csv(hist, report.model);
      auto model = open_out(dir / "model.json");
      write_model_json(model, report.model);
      if (report.surface) {
        auto surf = open_out(dir / "mi-surface.csv");
        write_surface_csv(surf, *report.surface);
      }
    });
  }
  return report;
}

void write_report_json(std::ostream& out, const ExperimentReport& report, const ExperimentConfig& config) {
  Json j;
  Json input;
  if (config.ohlc_path.empty()) {
    input = {{"source", "synthetic"},
             {"n_days", config.synth.n_days},
             {"n_trends", config.synth.n_trends},
             {"trend_coupling", config.synth.trend_coupling},
             {"seed", config.synth.seed}};
  } else {
    input = {{"source", "files"}, {"ohlc", config.ohlc_path}, {"trends", config.trends_path}};
  }
  j["input"] = input;
  j["scheme"] = {{"delta_t", report.scheme.delta_t},
                 {"k", report.scheme.k},
                 {"selection", report.surface ? "mi-grid" : "fixed"}};
  if (report.surface) {
    j["scheme"]["mi_score"] = report.surface->best_score;
    j["scheme"]["mi_bins"] = config.mi_bins;
  }
  const auto& t = config.train;
  j["train_config"] = {{"lag", t.lag},       {"batch_size", t.batch_size},       {"epochs", t.epochs},
                       {"hidden_dim", t.hidden_dim}, {"learning_rate", t.learning_rate}, {"seed", t.seed},
                       {"mape_epsilon", t.mape_epsilon}};
  j["panel_days"] = report.panel_days;
  j["gk_clamped"] = report.gk_clamped;
  j["dataset_rows"] = report.dataset_rows;
  j["train_rows"] = report.train_rows;
  j["test_rows"] = report.actual.size();
  Json adf = Json::array();
  for (const auto& a : report.adf) {
    adf.push_back({{"series", a.series_name},
                   {"statistic", std::isfinite(a.adf_statistic) ? Json(a.adf_statistic) : Json(nullptr)},
                   {"lags", a.lags},
                   {"reject_unit_root_5pct", a.reject_unit_root_5pct}});
  }
  j["adf"] = std::move(adf);
  j["garch_fit"] = {{"omega", report.garch.params.omega},
                    {"alpha", report.garch.params.alpha},
                    {"beta", report.garch.params.beta},
                    {"log_likelihood", report.garch.log_likelihood},
                    {"converged", report.garch.converged},
                    {"iterations", report.garch.iterations}};
  if (!report.model.history.empty()) {
    const auto& last = report.model.history.back();
    j["lstm_final_epoch"] = {{"epoch", last.epoch}, {"train_mape", last.train_mape}, {"test_mape", last.test_mape}};
  }
  Json models = Json::array();
  for (const auto& m : report.models) models.push_back(metrics_json(m));
  j["models"] = std::move(models);
  out << j.dump(2) << '\n';
}

void write_predictions_csv(std::ostream& out, const ExperimentReport& report) {
  out << "date,actual,lstm,garch\n";
  for (std::size_t i = 0; i < report.actual.size(); ++i) {
    out << format_date(report.test_dates[i]) << ',' << format_double(report.actual[i]) << ','
        << format_double(report.lstm_pred[i]) << ',' << format_double(report.garch_pred[i]) << '\n';
  }
}

}  // namespace volfc
