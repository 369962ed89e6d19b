#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "volfc/marketdata.hpp"

namespace volfc {

/// Observation interval (days per period) and normalization look-back window.
struct Scheme {
  int delta_t = 5;
  int k = 5;

  friend bool operator==(const Scheme&, const Scheme&) = default;
};

/// Throws ConfigError unless delta_t >= 1 and k >= 2.
void validate(const Scheme& scheme);

/// Sum over consecutive blocks of delta_t; the trailing partial block is dropped.
std::vector<double> aggregate_returns(std::span<const double> r, int delta_t);
/// Block mean.
std::vector<double> aggregate_trend(std::span<const double> d, int delta_t);
/// Block root-sum-of-squares.
std::vector<double> aggregate_vol(std::span<const double> h, int delta_t);

/// Windows whose sample standard deviation falls below this are degenerate.
inline constexpr double kDegenerateStd = 1e-12;

struct RollingNormalized {
  /// values[j] is the normalized input at index j + k.
  std::vector<double> values;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::uint8_t> degenerate;
};

/// Z_i -> (Z_i - mean(Z_{i-k..i})) / std(Z_{i-k..i}), window of k+1 points
/// inclusive, sample std with divisor k. The first k inputs have no output.
/// A degenerate window yields 0 and sets the flag.
RollingNormalized rolling_normalize(std::span<const double> z, int k);

/// (X^{dt,k}, Y^{dt,k}) for one scheme.
///
/// Row j corresponds to aggregated period p = k + j: the features are the
/// normalized period-p values of (r, h, trends...), the target is the next
/// period's volatility h_{p+1}, normalized with the h-column window p-k..p.
struct SchemeDataset {
  Scheme scheme;
  std::vector<std::string> columns;
  Eigen::MatrixXd features;  // T x (n + 2)
  Eigen::VectorXd target;
  Eigen::VectorXd raw_target;
  Eigen::VectorXd norm_mean;
  Eigen::VectorXd norm_std;
  /// Last trading date of the target period, per row.
  std::vector<Date> target_dates;
  /// Rows whose target-normalization window was degenerate (norm_std set to 1).
  std::vector<std::uint8_t> degenerate_target;

  std::size_t rows() const { return static_cast<std::size_t>(target.size()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(features.cols()); }
};

/// floor(days / delta_t) - k - 1, or a non-positive value when too short.
long expected_rows(std::size_t days, const Scheme& scheme);

SchemeDataset build_scheme_dataset(const AlignedPanel& panel, const Scheme& scheme);

/// Inverse of the target normalization for the given row.
double denormalize(const SchemeDataset& ds, std::size_t row, double normalized);

/// CSV dump: `<feature columns...>,target,raw_target,norm_mean,norm_std`.
void write_dataset_csv(std::ostream& out, const SchemeDataset& ds);

struct StationarityReport {
  std::string series_name;
  double adf_statistic = 0.0;
  int lags = 0;
  bool reject_unit_root_5pct = false;
};

/// Asymptotic 5% Dickey-Fuller critical value for the regression with constant.
inline constexpr double kAdfCritical5pct = -2.86;
inline constexpr int kAdfDefaultLags = 5;

/// Augmented Dickey-Fuller regression of dz_t on (1, z_{t-1}, dz_{t-1..t-lags}).
/// Throws NumericError when the regression matrix is singular.
StationarityReport adf_test(std::span<const double> z, int lags = kAdfDefaultLags,
                            std::string series_name = {});

}  // namespace volfc
