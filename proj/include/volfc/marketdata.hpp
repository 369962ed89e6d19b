#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace volfc {

using Date = std::chrono::year_month_day;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD).
std::optional<Date> parse_date(std::string_view text);
std::string format_date(const Date& date);

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

/// One trading day. Invariants: 0 < low <= {open, close} <= high.
struct OhlcBar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
};

/// Search volume for one keyword. A missing cell is stored as std::nullopt.
struct TrendSeries {
  std::string keyword;
  std::vector<Date> dates;
  std::vector<std::optional<double>> values;
};

/// Gap-free trend column on a panel's date axis.
struct PanelTrend {
  std::string keyword;
  std::vector<double> values;
};

/// Date-aligned daily data: return r, Garman-Klass volatility h and the
/// trend columns. Every column has dates.size() entries.
///
/// `anchor` is the trading day preceding the first panel date; it supplies
/// the previous close for the first return and is kept so the panel can be
/// written back to the CSV pair it came from.
struct AlignedPanel {
  OhlcBar anchor;
  std::vector<OhlcBar> bars;
  std::vector<Date> dates;
  std::vector<double> r;
  std::vector<double> h;
  std::vector<PanelTrend> trends;
  /// Days whose raw Garman-Klass value was negative and got clamped to 0.
  std::size_t gk_clamped = 0;

  std::size_t size() const { return dates.size(); }
};

std::vector<OhlcBar> parse_ohlc_csv(std::istream& in);
std::vector<TrendSeries> parse_trends_csv(std::istream& in);

std::vector<OhlcBar> read_ohlc_file(const std::string& path);
std::vector<TrendSeries> read_trends_file(const std::string& path);

void write_ohlc_csv(std::ostream& out, std::span<const OhlcBar> bars);
/// Writes the trends on the given date axis; a nullopt value becomes a blank cell.
void write_trends_csv(std::ostream& out, std::span<const TrendSeries> trends);

/// Writes the panel back as the (ohlc.csv, trends.csv) pair. The anchor bar
/// is included in the OHLC file with blank trend cells.
void write_panel_csv(const AlignedPanel& panel, std::ostream& ohlc_out, std::ostream& trends_out);

/// r_t = ln(Cl_t / Cl_{t-1}); output has bars.size() - 1 entries.
std::vector<double> log_return(std::span<const OhlcBar> bars);

/// The raw Garman-Klass quadratic form; may be negative for rare bar shapes.
double gk_raw(const OhlcBar& bar);

/// Garman-Klass daily volatility h_t, clamped at 0.
double gk_volatility(const OhlcBar& bar);

/// Builds the panel on the trading dates of `bars`. Trend gaps are forward
/// filled from the latest prior observation; dates before a trend's first
/// observation are dropped.
AlignedPanel align(std::span<const OhlcBar> bars, std::span<const TrendSeries> trends);

}  // namespace volfc
