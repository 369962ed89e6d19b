#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "volfc/errors.hpp"
#include "volfc/evaluation.hpp"

namespace volfc {
namespace {

// Default keyword names: the 28 search-term abbreviations of the original study.
constexpr const char* kKeywords[] = {"insur",  "fisrev", "loan",   "anti-cor", "reaest", "debt",   "lever",
                                     "equity", "adver",  "airtic", "educa",    "marri",  "fininv", "finder",
                                     "econo",  "profi",  "trave",  "autbuy",   "autfin", "luxgoo", "infla",
                                     "crisi",  "defau",  "offbui", "crecar",   "bank",   "incre",  "bond"};

std::string keyword(std::size_t j) {
  if (j < std::size(kKeywords)) return kKeywords[j];
  return kTrendPrefix + std::to_string(j + 1);
}

std::vector<Date> business_days(Date start, std::size_t n) {
  using namespace std::chrono;
  std::vector<Date> out;
  sys_days d{start};
  while (out.size() < n) {
    const weekday wd{d};
    if (wd != Saturday && wd != Sunday) out.emplace_back(d);
    d += days{1};
  }
  return out;
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

}  // namespace

void validate(const SynthConfig& c) {
  if (c.n_days < 200) throw ConfigError("synthetic n_days must be >= 200");
  if (c.n_trends < 1) throw ConfigError("synthetic n_trends must be >= 1");
  if (!(c.trend_coupling >= 0.0 && c.trend_coupling <= 1.0)) throw ConfigError("trend_coupling must lie in [0, 1]");
  if (!satisfies_constraints(c.garch)) throw ConfigError("synthetic GARCH parameters violate the constraints");
}

SynthData synth_generate(const SynthConfig& config) {
  validate(config);
  const std::size_t n = config.n_days;
  // One extra latent step so that day n-1 can see the next day's volatility.
  const auto path = simulate_garch_path(config.garch, n + 1, config.seed);
  const auto dates = business_days(Date{std::chrono::year{2006}, std::chrono::June, std::chrono::day{1}}, n);

  SynthData data;
  data.latent_variance.assign(path.variance.begin(), path.variance.begin() + static_cast<std::ptrdiff_t>(n));
  auto intraday = stream(config.seed, 1);
  double open = 100.0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto bar = simulate_day(intraday, dates[t], open, path.returns[t], path.variance[t], kIntradaySteps);
    data.bars.push_back(bar);
    open = bar.close;
  }

  std::vector<double> lead_vol(n);
  for (std::size_t t = 0; t < n; ++t) lead_vol[t] = std::sqrt(path.variance[t + 1]);
  double mean = 0.0;
  for (double v : lead_vol) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : lead_vol) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  const double c = config.trend_coupling;
  for (std::size_t j = 0; j < config.n_trends; ++j) {
    auto noise_rng = stream(config.seed, 2 + j);
    std::normal_distribution<double> normal(0.0, 1.0);
    TrendSeries s{keyword(j), dates, {}};
    const double base = 1000.0 + 100.0 * static_cast<double>(j);
    for (std::size_t t = 0; t < n; ++t) {
      const double signal = sd > 0.0 ? (lead_vol[t] - mean) / sd : 0.0;
      const double mix = c * signal + (1.0 - c) * normal(noise_rng);
      // Volumes are whole searches per day.
      s.values.emplace_back(std::round(base * std::exp(0.25 * mix)));
    }
    data.trends.push_back(std::move(s));
  }
  return data;
}

void write_synth_files(const SynthData& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream ohlc(std::filesystem::path(dir) / "ohlc.csv", std::ios::binary);
  std::ofstream trends(std::filesystem::path(dir) / "trends.csv", std::ios::binary);
  if (!ohlc || !trends) throw DataError("cannot write synthetic files into " + dir);
  write_ohlc_csv(ohlc, data.bars);
  write_trends_csv(trends, data.trends);
}

}  // namespace volfc
