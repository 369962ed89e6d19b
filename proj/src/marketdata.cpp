#include "volfc/marketdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "volfc/errors.hpp"

namespace volfc {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      return cells;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  throw DataError(what + " at line " + std::to_string(line));
}

std::string strip_bom(std::string line) {
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  return line;
}

void check_date_order(const std::vector<Date>& dates, const Date& next, std::size_t line) {
  if (dates.empty()) return;
  if (next == dates.back()) fail_at(line, "duplicate date " + format_date(next));
  if (next < dates.back()) fail_at(line, "dates not increasing (" + format_date(next) + ")");
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto field = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
    if (ec != std::errc{} || ptr != text.data() + pos + len) return std::nullopt;
    return v;
  };
  const auto y = field(0, 4);
  const auto m = field(5, 2);
  const auto d = field(8, 2);
  if (!y || !m || !d) return std::nullopt;
  const Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                  std::chrono::day{static_cast<unsigned>(*d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::vector<OhlcBar> parse_ohlc_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty OHLC stream");
  {
    line = strip_bom(line);
    const auto header = split_csv(line);
    const std::vector<std::string_view> expected{"date", "open", "high", "low", "close"};
    if (header != expected) {
      throw DataError("OHLC header must be 'date,open,high,low,close' at line 1");
    }
  }

  std::vector<OhlcBar> bars;
  std::vector<Date> dates;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 5) fail_at(line_no, "malformed row (expected 5 fields)");
    const auto date = parse_date(cells[0]);
    if (!date) fail_at(line_no, "malformed date '" + std::string(cells[0]) + "'");
    double px[4];
    for (int c = 0; c < 4; ++c) {
      const auto v = parse_number(cells[c + 1]);
      if (!v) fail_at(line_no, "malformed price '" + std::string(cells[c + 1]) + "'");
      px[c] = *v;
    }
    const OhlcBar bar{*date, px[0], px[1], px[2], px[3]};
    if (bar.open <= 0 || bar.high <= 0 || bar.low <= 0 || bar.close <= 0) {
      fail_at(line_no, "non-positive price");
    }
    if (bar.high < bar.low) fail_at(line_no, "inverted range");
    if (bar.open < bar.low || bar.open > bar.high || bar.close < bar.low || bar.close > bar.high) {
      fail_at(line_no, "open/close outside [low, high]");
    }
    check_date_order(dates, bar.date, line_no);
    dates.push_back(bar.date);
    bars.push_back(bar);
  }
  return bars;
}

std::vector<TrendSeries> parse_trends_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty trends stream");
  const std::string header_line = strip_bom(line);
  const auto header = split_csv(header_line);
  if (header.size() < 2 || header[0] != "date") {
    throw DataError("trends header must be 'date,<keyword>,...' at line 1");
  }
  std::vector<TrendSeries> series;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty()) throw DataError("empty keyword header in column " + std::to_string(c + 1));
    series.push_back(TrendSeries{std::string(header[c]), {}, {}});
  }

  std::vector<Date> dates;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) fail_at(line_no, "malformed row (wrong field count)");
    const auto date = parse_date(cells[0]);
    if (!date) fail_at(line_no, "malformed date '" + std::string(cells[0]) + "'");
    check_date_order(dates, *date, line_no);
    dates.push_back(*date);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      auto& s = series[c - 1];
      s.dates.push_back(*date);
      if (cells[c].empty()) {
        s.values.push_back(std::nullopt);
        continue;
      }
      const auto v = parse_number(cells[c]);
      if (!v) fail_at(line_no, "malformed volume '" + std::string(cells[c]) + "'");
      if (*v < 0) fail_at(line_no, "negative volume");
      s.values.push_back(*v);
    }
  }
  if (dates.empty()) throw DataError("trends file has no data rows");
  return series;
}

std::vector<OhlcBar> read_ohlc_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  try {
    return parse_ohlc_csv(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<TrendSeries> read_trends_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  try {
    return parse_trends_csv(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_ohlc_csv(std::ostream& out, std::span<const OhlcBar> bars) {
  out << "date,open,high,low,close\n";
  for (const auto& b : bars) {
    out << format_date(b.date) << ',' << format_double(b.open) << ',' << format_double(b.high) << ','
        << format_double(b.low) << ',' << format_double(b.close) << '\n';
  }
}

void write_trends_csv(std::ostream& out, std::span<const TrendSeries> trends) {
  if (trends.empty()) throw DataError("no trend series to write");
  const auto& axis = trends.front().dates;
  for (const auto& t : trends) {
    if (t.dates != axis || t.values.size() != axis.size()) {
      throw DataError("trend series '" + t.keyword + "' is not on the shared date axis");
    }
  }
  out << "date";
  for (const auto& t : trends) out << ',' << t.keyword;
  out << '\n';
  for (std::size_t i = 0; i < axis.size(); ++i) {
    out << format_date(axis[i]);
    for (const auto& t : trends) {
      out << ',';
      if (t.values[i]) out << format_double(*t.values[i]);
    }
    out << '\n';
  }
}

void write_panel_csv(const AlignedPanel& panel, std::ostream& ohlc_out, std::ostream& trends_out) {
  std::vector<OhlcBar> bars;
  bars.reserve(panel.size() + 1);
  bars.push_back(panel.anchor);
  bars.insert(bars.end(), panel.bars.begin(), panel.bars.end());
  write_ohlc_csv(ohlc_out, bars);

  std::vector<TrendSeries> trends;
  for (const auto& col : panel.trends) {
    TrendSeries s{col.keyword, {}, {}};
    s.dates.push_back(panel.anchor.date);
    s.values.push_back(std::nullopt);
    for (std::size_t i = 0; i < panel.size(); ++i) {
      s.dates.push_back(panel.dates[i]);
      s.values.push_back(col.values[i]);
    }
    trends.push_back(std::move(s));
  }
  write_trends_csv(trends_out, trends);
}

std::vector<double> log_return(std::span<const OhlcBar> bars) {
  if (bars.size() < 2) throw DataError("log_return needs at least 2 bars");
  std::vector<double> r(bars.size() - 1);
  for (std::size_t t = 1; t < bars.size(); ++t) r[t - 1] = std::log(bars[t].close / bars[t - 1].close);
  return r;
}

double gk_raw(const OhlcBar& bar) {
  const double u = std::log(bar.high / bar.open);
  const double d = std::log(bar.low / bar.open);
  const double c = std::log(bar.close / bar.open);
  return 0.511 * (u - d) * (u - d) - 0.019 * (c * (u + d) - 2.0 * u * d) - 0.383 * c * c;
}

double gk_volatility(const OhlcBar& bar) { return std::max(0.0, gk_raw(bar)); }

AlignedPanel align(std::span<const OhlcBar> bars, std::span<const TrendSeries> trends) {
  if (bars.size() < 2) throw DataError("align needs at least 2 bars");
  const Date first_bar = bars.front().date;
  const Date last_bar = bars.back().date;

  // filled[j][t]: forward-filled value of trend j on trading day t.
  std::vector<std::vector<std::optional<double>>> filled(trends.size());
  for (std::size_t j = 0; j < trends.size(); ++j) {
    const auto& s = trends[j];
    if (s.dates.size() != s.values.size()) throw DataError("trend '" + s.keyword + "' is malformed");
    bool any = false;
    bool overlaps = false;
    for (std::size_t i = 0; i < s.dates.size(); ++i) {
      if (!s.values[i]) continue;
      any = true;
      if (s.dates[i] <= last_bar && s.dates[i] >= first_bar) overlaps = true;
    }
    if (!any || !overlaps) throw DataError("trend '" + s.keyword + "': no overlap with the bar date range");

    auto& col = filled[j];
    col.resize(bars.size());
    std::size_t cursor = 0;
    std::optional<double> last;
    for (std::size_t t = 0; t < bars.size(); ++t) {
      while (cursor < s.dates.size() && s.dates[cursor] <= bars[t].date) {
        if (s.values[cursor]) last = s.values[cursor];
        ++cursor;
      }
      col[t] = last;
    }
  }

  std::size_t first = 1;
  while (first < bars.size() &&
         std::any_of(filled.begin(), filled.end(), [&](const auto& col) { return !col[first]; })) {
    ++first;
  }
  if (first >= bars.size()) {
    throw DataError("no trading date where every trend has an observation");
  }

  AlignedPanel panel;
  panel.anchor = bars[first - 1];
  panel.bars.assign(bars.begin() + static_cast<std::ptrdiff_t>(first), bars.end());
  const auto r_all = log_return(bars.subspan(first - 1));
  panel.r = r_all;
  for (const auto& bar : panel.bars) {
    panel.dates.push_back(bar.date);
    if (gk_raw(bar) < 0.0) ++panel.gk_clamped;
    panel.h.push_back(gk_volatility(bar));
  }
  for (std::size_t j = 0; j < trends.size(); ++j) {
    PanelTrend col{trends[j].keyword, {}};
    col.values.reserve(panel.size());
    for (std::size_t t = first; t < bars.size(); ++t) col.values.push_back(*filled[j][t]);
    panel.trends.push_back(std::move(col));
  }
  return panel;
}

}  // namespace volfc
