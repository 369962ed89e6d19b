#include <Eigen/Dense>
#include <cmath>

#include "volfc/errors.hpp"
#include "volfc/preprocess.hpp"

namespace volfc {

StationarityReport adf_test(std::span<const double> z, int lags, std::string series_name) {
  if (lags < 0) throw ConfigError("ADF lag order must be >= 0");
  const auto p = static_cast<std::size_t>(lags);
  if (z.size() < p + 10) {
    throw DataError("ADF needs at least lags + 10 = " + std::to_string(p + 10) + " observations");
  }

  // Rows t = p+1 .. N-1: dz_t ~ 1 + z_{t-1} + dz_{t-1} + ... + dz_{t-p}.
  const std::size_t first = p + 1;
  const auto n = static_cast<Eigen::Index>(z.size() - first);
  const auto cols = static_cast<Eigen::Index>(2 + p);
  Eigen::MatrixXd X(n, cols);
  Eigen::VectorXd y(n);
  for (Eigen::Index row = 0; row < n; ++row) {
    const std::size_t t = first + static_cast<std::size_t>(row);
    y(row) = z[t] - z[t - 1];
    X(row, 0) = 1.0;
    X(row, 1) = z[t - 1];
    for (std::size_t l = 1; l <= p; ++l) X(row, static_cast<Eigen::Index>(1 + l)) = z[t - l] - z[t - l - 1];
  }
  if (n <= cols) throw DataError("ADF regression has no residual degrees of freedom");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) throw NumericError("ADF regression matrix is singular");
  const Eigen::VectorXd beta = qr.solve(y);
  const double rss = (y - X * beta).squaredNorm();
  const double sigma2 = rss / static_cast<double>(n - cols);

  const Eigen::MatrixXd xtx_inv = (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(cols, cols));
  const double se = std::sqrt(sigma2 * xtx_inv(1, 1));
  if (!(se > 0.0) || !std::isfinite(se)) throw NumericError("ADF regression has zero residual variance");

  StationarityReport report;
  report.series_name = std::move(series_name);
  report.adf_statistic = beta(1) / se;
  report.lags = lags;
  report.reject_unit_root_5pct = report.adf_statistic < kAdfCritical5pct;
  return report;
}

}  // namespace volfc
