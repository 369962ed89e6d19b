// volfc: command-line front end for the volatility forecasting pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "volfc/errors.hpp"
#include "volfc/evaluation.hpp"

namespace fs = std::filesystem;
using namespace volfc;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kNumeric = 4 };

struct Options {
  std::uint64_t seed = 7;
  std::string out = ".";

  std::string ohlc;
  std::string trends;

  SynthConfig synth;
  int delta_t = 5;
  int k = 5;
  std::string scheme_mode = "fixed";
  IntRange dt_range{1, 10};
  IntRange k_range{2, 20};
  int bins = kDefaultBins;
  TrainConfig train;
  int adf_lags = kAdfDefaultLags;
  int diag_lags = 10;
  std::string report_in;
};

std::ofstream open_out(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  const auto path = fs::path(o.out) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

AlignedPanel load_panel(const Options& o) {
  if (o.ohlc.empty() || o.trends.empty()) throw ConfigError("--ohlc and --trends are required");
  const auto bars = read_ohlc_file(o.ohlc);
  const auto trends = read_trends_file(o.trends);
  return align(bars, trends);
}

/// Panel from files, or the synthetic generator when no files are given.
AlignedPanel load_or_synth(const Options& o) {
  if (o.ohlc.empty() && o.trends.empty()) {
    auto cfg = o.synth;
    cfg.seed = o.seed;
    const auto data = synth_generate(cfg);
    return align(data.bars, data.trends);
  }
  return load_panel(o);
}

void add_data_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--ohlc", o.ohlc, "OHLC csv (date,open,high,low,close)");
  cmd->add_option("--trends", o.trends, "search volume csv (date,<keyword>...)");
}

void add_synth_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--n-days", o.synth.n_days, "synthetic trading days")->capture_default_str();
  cmd->add_option("--n-trends", o.synth.n_trends, "synthetic trend columns")->capture_default_str();
  cmd->add_option("--coupling", o.synth.trend_coupling, "trend/volatility coupling in [0,1]")->capture_default_str();
}

void add_scheme_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--dt", o.delta_t, "observation interval (days)")->capture_default_str();
  cmd->add_option("--k", o.k, "normalization look-back window")->capture_default_str();
}

void add_grid_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--dt-min", o.dt_range.lo)->capture_default_str();
  cmd->add_option("--dt-max", o.dt_range.hi)->capture_default_str();
  cmd->add_option("--k-min", o.k_range.lo)->capture_default_str();
  cmd->add_option("--k-max", o.k_range.hi)->capture_default_str();
  cmd->add_option("--bins", o.bins, "histogram bins per axis")->capture_default_str();
}

void add_train_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--lag", o.train.lag)->capture_default_str();
  cmd->add_option("--batch", o.train.batch_size)->capture_default_str();
  cmd->add_option("--epochs", o.train.epochs)->capture_default_str();
  cmd->add_option("--hidden", o.train.hidden_dim)->capture_default_str();
  cmd->add_option("--lr", o.train.learning_rate)->capture_default_str();
}

void cmd_synth(const Options& o) {
  auto cfg = o.synth;
  cfg.seed = o.seed;
  const auto data = synth_generate(cfg);
  write_synth_files(data, o.out);
  std::cout << "wrote " << data.bars.size() << " bars and " << data.trends.size() << " trend series to " << o.out
            << "\n";
}

void cmd_ingest_check(const Options& o) {
  if (o.ohlc.empty() || o.trends.empty()) throw ConfigError("--ohlc and --trends are required");
  const auto bars = read_ohlc_file(o.ohlc);
  const auto trends = read_trends_file(o.trends);
  const auto panel = align(bars, trends);
  const auto adf = panel_stationarity(panel, o.adf_lags);

  nlohmann::ordered_json j;
  j["bars"] = bars.size();
  j["trend_series"] = trends.size();
  j["panel_days"] = panel.size();
  j["first_date"] = format_date(panel.dates.front());
  j["last_date"] = format_date(panel.dates.back());
  j["gk_clamped"] = panel.gk_clamped;
  auto arr = nlohmann::ordered_json::array();
  std::size_t stationary = 0;
  for (const auto& a : adf) {
    arr.push_back({{"series", a.series_name},
                   {"statistic", std::isfinite(a.adf_statistic) ? nlohmann::ordered_json(a.adf_statistic)
                                                                 : nlohmann::ordered_json(nullptr)},
                   {"lags", a.lags},
                   {"reject_unit_root_5pct", a.reject_unit_root_5pct}});
    stationary += a.reject_unit_root_5pct ? 1 : 0;
  }
  j["adf"] = arr;
  auto out = open_out(o, "ingest-check.json");
  out << j.dump(2) << '\n';
  std::cout << "panel: " << panel.size() << " days (" << j["first_date"].get<std::string>() << " .. "
            << j["last_date"].get<std::string>() << "), " << panel.gk_clamped << " clamped GK values, " << stationary
            << "/" << adf.size() << " series reject a unit root at 5%\n";
}

void cmd_gk(const Options& o) {
  if (o.ohlc.empty()) throw ConfigError("--ohlc is required");
  const auto bars = read_ohlc_file(o.ohlc);
  const auto r = log_return(bars);
  auto out = open_out(o, "gk.csv");
  out << "date,close,r,h,clamped\n";
  std::size_t clamped = 0;
  for (std::size_t t = 0; t < bars.size(); ++t) {
    const bool neg = gk_raw(bars[t]) < 0.0;
    clamped += neg ? 1 : 0;
    out << format_date(bars[t].date) << ',' << format_double(bars[t].close) << ','
        << (t == 0 ? std::string() : format_double(r[t - 1])) << ',' << format_double(gk_volatility(bars[t])) << ','
        << (neg ? 1 : 0) << '\n';
  }
  std::cout << "gk: " << bars.size() << " bars, " << clamped << " clamped\n";
}

void cmd_mi_grid(const Options& o) {
  const auto panel = load_or_synth(o);
  const auto surface = grid_search(panel, o.dt_range, o.k_range, o.bins);
  auto out = open_out(o, "mi-surface.csv");
  write_surface_csv(out, surface);
  std::cout << "best scheme: dt=" << surface.best.delta_t << " k=" << surface.best.k
            << " mi=" << format_double(surface.best_score) << "\n";
}

void cmd_train(const Options& o) {
  const auto panel = load_or_synth(o);
  const auto ds = build_scheme_dataset(panel, Scheme{o.delta_t, o.k});
  auto cfg = o.train;
  cfg.seed = o.seed;
  const auto model = train(ds, cfg);
  auto mj = open_out(o, "model.json");
  write_model_json(mj, model);
  auto hist = open_out(o, "history.csv");
  write_history_csv(hist, model);
  if (!model.history.empty()) {
    std::cout << "epoch " << model.history.back().epoch << ": train MAPE "
              << format_double(model.history.back().train_mape) << ", test MAPE "
              << format_double(model.history.back().test_mape) << "\n";
  }
}

void cmd_fit_garch(const Options& o) {
  if (o.ohlc.empty()) throw ConfigError("--ohlc is required");
  const auto bars = read_ohlc_file(o.ohlc);
  const auto r = aggregate_returns(log_return(bars), o.delta_t);
  const auto fit = fit_garch(r);
  auto out = open_out(o, "garch-fit.json");
  write_garch_fit_json(out, fit, r.size());
  std::cout << "omega=" << format_double(fit.params.omega) << " alpha=" << format_double(fit.params.alpha)
            << " beta=" << format_double(fit.params.beta) << " loglik=" << format_double(fit.log_likelihood)
            << (fit.converged ? "" : " (not converged)") << "\n";
}

std::string table(const nlohmann::json& report) {
  std::ostringstream s;
  s << "scheme: dt=" << report["scheme"]["delta_t"] << " k=" << report["scheme"]["k"] << "\n";
  s << "model   MSE                     MAPE                    n_test\n";
  for (const auto& m : report["models"]) {
    char line[160];
    std::snprintf(line, sizeof line, "%-7s %-23.10g %-23.10g %zu\n", m["name"].get<std::string>().c_str(),
                  m["mse"].get<double>(), m["mape"].get<double>(), m["n_test"].get<std::size_t>());
    s << line;
  }
  return s.str();
}

void cmd_run(const Options& o) {
  ExperimentConfig cfg;
  cfg.ohlc_path = o.ohlc;
  cfg.trends_path = o.trends;
  cfg.synth = o.synth;
  cfg.synth.seed = o.seed;
  if (o.scheme_mode == "auto") {
    cfg.scheme.reset();
  } else if (o.scheme_mode == "fixed") {
    cfg.scheme = Scheme{o.delta_t, o.k};
  } else {
    throw ConfigError("--scheme must be 'fixed' or 'auto'");
  }
  cfg.delta_t_range = o.dt_range;
  cfg.k_range = o.k_range;
  cfg.mi_bins = o.bins;
  cfg.train = o.train;
  cfg.train.seed = o.seed;
  cfg.adf_lags = o.adf_lags;
  cfg.diagnostic_lags = o.diag_lags;
  cfg.out_dir = o.out;
  run_experiment(cfg);
  std::ifstream in(fs::path(o.out) / "report.json");
  std::cout << table(nlohmann::json::parse(in));
}

void cmd_report(const Options& o) {
  const auto dir = o.report_in.empty() ? o.out : o.report_in;
  std::ifstream in(fs::path(dir) / "report.json");
  if (!in) throw DataError("no report.json in " + dir);
  nlohmann::json report;
  try {
    report = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("unreadable report.json: ") + e.what());
  }
  const auto text = table(report);
  auto out = open_out(o, "report.txt");
  out << text;
  std::cout << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volatility forecasting: Garman-Klass, MI scheme selection, LSTM and GARCH(1,1)"};
  app.set_config("--config", "", "TOML configuration file");
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--seed", o.seed, "random seed")->capture_default_str();
  app.add_option("--out", o.out, "output directory")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "generate a synthetic ohlc.csv / trends.csv pair");
  add_synth_options(synth, o);

  auto* ingest = app.add_subcommand("ingest-check", "validate and align input files, report stationarity");
  add_data_options(ingest, o);
  ingest->add_option("--adf-lags", o.adf_lags)->capture_default_str();

  auto* gk = app.add_subcommand("gk", "daily returns and Garman-Klass volatility");
  gk->add_option("--ohlc", o.ohlc, "OHLC csv");

  auto* mi = app.add_subcommand("mi-grid", "mutual information surface over (dt, k)");
  add_data_options(mi, o);
  add_synth_options(mi, o);
  add_grid_options(mi, o);

  auto* tr = app.add_subcommand("train", "train the LSTM on one scheme");
  add_data_options(tr, o);
  add_synth_options(tr, o);
  add_scheme_options(tr, o);
  add_train_options(tr, o);

  auto* fg = app.add_subcommand("fit-garch", "fit GARCH(1,1) to aggregated returns");
  fg->add_option("--ohlc", o.ohlc, "OHLC csv");
  fg->add_option("--dt", o.delta_t, "observation interval (days)")->capture_default_str();

  auto* run = app.add_subcommand("run", "full experiment: LSTM vs GARCH");
  add_data_options(run, o);
  add_synth_options(run, o);
  add_scheme_options(run, o);
  add_grid_options(run, o);
  add_train_options(run, o);
  run->add_option("--scheme", o.scheme_mode, "fixed or auto (MI grid search)")->capture_default_str();
  run->add_option("--adf-lags", o.adf_lags)->capture_default_str();
  run->add_option("--diag-lags", o.diag_lags, "residual ACF/PACF lags")->capture_default_str();

  auto* rep = app.add_subcommand("report", "print the LSTM/GARCH comparison from report.json");
  rep->add_option("--in", o.report_in, "directory holding report.json (defaults to --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*synth) cmd_synth(o);
    if (*ingest) cmd_ingest_check(o);
    if (*gk) cmd_gk(o);
    if (*mi) cmd_mi_grid(o);
    if (*tr) cmd_train(o);
    if (*fg) cmd_fit_garch(o);
    if (*run) cmd_run(o);
    if (*rep) cmd_report(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
