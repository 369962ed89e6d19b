#include <algorithm>
#include <cmath>

#include "volfc/errors.hpp"
#include "volfc/evaluation.hpp"

namespace volfc {

double mse(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size()) throw DataError("mse: length mismatch");
  if (pred.empty()) throw DataError("mse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - actual[i]) * (pred[i] - actual[i]);
  return s / static_cast<double>(pred.size());
}

double mape(std::span<const double> pred, std::span<const double> actual, double epsilon) {
  return mape_loss(pred, actual, epsilon);
}

std::vector<double> acf(std::span<const double> z, int max_lag) {
  if (max_lag < 0) throw ConfigError("max_lag must be >= 0");
  const auto L = static_cast<std::size_t>(max_lag);
  if (z.size() <= L + 1) throw DataError("acf: series must be longer than max_lag + 1");
  const double n = static_cast<double>(z.size());
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= n;
  std::vector<double> gamma(L + 1, 0.0);
  for (std::size_t k = 0; k <= L; ++k) {
    for (std::size_t t = k; t < z.size(); ++t) gamma[k] += (z[t] - mean) * (z[t - k] - mean);
    gamma[k] /= n;
  }
  if (!(gamma[0] > 0.0)) throw DataError("acf: zero-variance series");
  std::vector<double> rho(L + 1);
  for (std::size_t k = 0; k <= L; ++k) rho[k] = gamma[k] / gamma[0];
  return rho;
}

std::vector<double> pacf(std::span<const double> z, int max_lag) {
  const auto rho = acf(z, max_lag);
  const auto L = static_cast<std::size_t>(max_lag);
  std::vector<double> out(L + 1, 0.0);
  out[0] = 1.0;
  std::vector<double> phi;  // phi[j-1] = phi_{k,j}
  for (std::size_t k = 1; k <= L; ++k) {
    double num = rho[k];
    double den = 1.0;
    for (std::size_t j = 1; j < k; ++j) {
      num -= phi[j - 1] * rho[k - j];
      den -= phi[j - 1] * rho[j];
    }
    const double phi_kk = num / den;
    std::vector<double> next(k);
    for (std::size_t j = 1; j < k; ++j) next[j - 1] = phi[j - 1] - phi_kk * phi[k - j - 1];
    next[k - 1] = phi_kk;
    phi = std::move(next);
    out[k] = phi_kk;
  }
  return out;
}

MetricsReport make_metrics(std::string name, std::span<const double> pred, std::span<const double> actual,
                           int max_lag) {
  MetricsReport m;
  m.model_name = std::move(name);
  m.mse = mse(pred, actual);
  m.mape = mape(pred, actual);
  m.n_test = pred.size();
  std::vector<double> resid(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) resid[i] = actual[i] - pred[i];
  const int lags = std::min<int>(max_lag, static_cast<int>(resid.size()) - 2);
  if (lags >= 1) {
    try {
      m.residual_acf = acf(resid, lags);
      m.residual_pacf = pacf(resid, lags);
    } catch (const DataError&) {
      m.residual_acf.clear();
      m.residual_pacf.clear();
    }
  }
  return m;
}

}  // namespace volfc
