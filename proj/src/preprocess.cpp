#include "volfc/preprocess.hpp"

#include <cmath>
#include <ostream>

#include "volfc/errors.hpp"

namespace volfc {
namespace {

template <typename Reduce>
std::vector<double> aggregate(std::span<const double> z, int delta_t, Reduce reduce) {
  if (delta_t < 1) throw ConfigError("delta_t must be >= 1");
  const auto dt = static_cast<std::size_t>(delta_t);
  if (z.size() < dt) {
    throw DataError("observation interval " + std::to_string(delta_t) + " exceeds series length " +
                    std::to_string(z.size()));
  }
  std::vector<double> out(z.size() / dt);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = reduce(z.subspan(i * dt, dt));
  return out;
}

}  // namespace

void validate(const Scheme& scheme) {
  if (scheme.delta_t < 1) throw ConfigError("scheme delta_t must be >= 1");
  if (scheme.k < 2) throw ConfigError("scheme k must be >= 2");
}

std::vector<double> aggregate_returns(std::span<const double> r, int delta_t) {
  return aggregate(r, delta_t, [](std::span<const double> b) {
    double s = 0.0;
    for (double v : b) s += v;
    return s;
  });
}

std::vector<double> aggregate_trend(std::span<const double> d, int delta_t) {
  return aggregate(d, delta_t, [](std::span<const double> b) {
    double s = 0.0;
    for (double v : b) s += v;
    return s / static_cast<double>(b.size());
  });
}

std::vector<double> aggregate_vol(std::span<const double> h, int delta_t) {
  return aggregate(h, delta_t, [](std::span<const double> b) {
    double s = 0.0;
    for (double v : b) s += v * v;
    return std::sqrt(s);
  });
}

RollingNormalized rolling_normalize(std::span<const double> z, int k) {
  if (k < 2) throw ConfigError("normalization window k must be >= 2");
  const auto w = static_cast<std::size_t>(k);
  if (z.size() < w + 1) {
    throw DataError("series of length " + std::to_string(z.size()) + " is shorter than k+1 = " +
                    std::to_string(w + 1));
  }
  RollingNormalized out;
  const std::size_t n = z.size() - w;
  out.values.resize(n);
  out.mean.resize(n);
  out.stddev.resize(n);
  out.degenerate.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto window = z.subspan(j, w + 1);
    double mean = 0.0;
    for (double v : window) mean += v;
    mean /= static_cast<double>(w + 1);
    double ss = 0.0;
    for (double v : window) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(w));
    out.mean[j] = mean;
    out.stddev[j] = sd;
    if (!(sd >= kDegenerateStd)) {
      out.values[j] = 0.0;
      out.degenerate[j] = 1;
    } else {
      out.values[j] = (z[j + w] - mean) / sd;
    }
  }
  return out;
}

long expected_rows(std::size_t days, const Scheme& scheme) {
  return static_cast<long>(days / static_cast<std::size_t>(scheme.delta_t)) - scheme.k - 1;
}

SchemeDataset build_scheme_dataset(const AlignedPanel& panel, const Scheme& scheme) {
  validate(scheme);
  const long rows = expected_rows(panel.size(), scheme);
  if (rows < 1) {
    throw DataError("panel of " + std::to_string(panel.size()) + " days is too short for scheme (dt=" +
                    std::to_string(scheme.delta_t) + ", k=" + std::to_string(scheme.k) + ")");
  }
  const auto T = static_cast<std::size_t>(rows);
  const auto k = static_cast<std::size_t>(scheme.k);
  const auto dt = static_cast<std::size_t>(scheme.delta_t);

  // Features are normalized over periods 0..P-2; period P-1 only appears as a target.
  std::vector<std::vector<double>> cols;
  cols.push_back(aggregate_returns(panel.r, scheme.delta_t));
  cols.push_back(aggregate_vol(panel.h, scheme.delta_t));
  for (const auto& t : panel.trends) cols.push_back(aggregate_trend(t.values, scheme.delta_t));
  const std::size_t periods = cols.front().size();

  SchemeDataset ds;
  ds.scheme = scheme;
  ds.columns.push_back("r");
  ds.columns.push_back("h");
  for (const auto& t : panel.trends) ds.columns.push_back(t.keyword);
  ds.features.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(cols.size()));

  std::vector<double> h_norm_mean;
  std::vector<double> h_norm_std;
  std::vector<std::uint8_t> h_degenerate;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const std::span<const double> usable(cols[c].data(), periods - 1);
    auto norm = rolling_normalize(usable, scheme.k);
    for (std::size_t j = 0; j < T; ++j) ds.features(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = norm.values[j];
    if (c == 1) {
      h_norm_mean = std::move(norm.mean);
      h_norm_std = std::move(norm.stddev);
      h_degenerate = std::move(norm.degenerate);
    }
  }

  const auto& hp = cols[1];
  ds.target.resize(static_cast<Eigen::Index>(T));
  ds.raw_target.resize(static_cast<Eigen::Index>(T));
  ds.norm_mean.resize(static_cast<Eigen::Index>(T));
  ds.norm_std.resize(static_cast<Eigen::Index>(T));
  ds.degenerate_target.resize(T);
  for (std::size_t j = 0; j < T; ++j) {
    const std::size_t p = k + j;
    const auto row = static_cast<Eigen::Index>(j);
    const double raw = hp[p + 1];
    const double mean = h_norm_mean[j];
    const double sd = h_degenerate[j] ? 1.0 : h_norm_std[j];
    ds.raw_target(row) = raw;
    ds.norm_mean(row) = mean;
    ds.norm_std(row) = sd;
    ds.target(row) = (raw - mean) / sd;
    ds.degenerate_target[j] = h_degenerate[j];
    ds.target_dates.push_back(panel.dates[(p + 2) * dt - 1]);
  }
  return ds;
}

double denormalize(const SchemeDataset& ds, std::size_t row, double normalized) {
  const auto i = static_cast<Eigen::Index>(row);
  return normalized * ds.norm_std(i) + ds.norm_mean(i);
}

void write_dataset_csv(std::ostream& out, const SchemeDataset& ds) {
  for (const auto& c : ds.columns) out << c << ',';
  out << "target,raw_target,norm_mean,norm_std\n";
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) out << format_double(ds.features(i, c)) << ',';
    out << format_double(ds.target(i)) << ',' << format_double(ds.raw_target(i)) << ','
        << format_double(ds.norm_mean(i)) << ',' << format_double(ds.norm_std(i)) << '\n';
  }
}

}  // namespace volfc
