#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace volfc {

/// GARCH(1,1) coefficients for h2_t = omega + alpha * r2_{t-1} + beta * h2_{t-1}:
/// alpha loads on the squared innovation, beta on the lagged variance.
struct GarchParams {
  double omega = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

/// omega > 0, alpha >= 0, beta >= 0, alpha + beta < 1.
bool satisfies_constraints(const GarchParams& p);

enum class GarchTiming {
  /// h2_t uses the previous period's squared innovation.
  Causal,
  /// h2_t = omega + h2_{t-1} (beta + alpha eps_t^2) with the same period's
  /// innovation; solved per step as a quadratic in h2_t. Not usable for forecasting.
  Contemporaneous,
};

/// Conditional variances h2_t for t = 0..n-1. h2_0 is `initial_variance` when
/// given, otherwise the sample variance of `returns`. A non-finite return
/// propagates NaN into later variances instead of raising.
std::vector<double> garch_filter(std::span<const double> returns, const GarchParams& params,
                                 std::optional<double> initial_variance = std::nullopt,
                                 GarchTiming timing = GarchTiming::Causal);

/// Gaussian log-likelihood: sum of -0.5 (ln 2pi + ln h2_t + r_t^2 / h2_t).
double garch_loglik(std::span<const double> returns, const GarchParams& params,
                    std::optional<double> initial_variance = std::nullopt);

struct GarchFit {
  GarchParams params;
  double log_likelihood = 0.0;
  bool converged = false;
  int iterations = 0;
  /// Log-likelihood at each multi-start initial point.
  std::vector<double> start_log_likelihoods;
  /// Variance used to start the filter (sample variance of the fitted series).
  double initial_variance = 0.0;
};

/// Gaussian MLE by Nelder-Mead over an unconstrained reparameterization with
/// omega > 0, alpha, beta >= 0 and alpha + beta <= 0.999, from three fixed starts.
GarchFit fit_garch(std::span<const double> returns);

/// sqrt(h2_{n}) one step past the end of `returns`.
double garch_forecast(const GarchFit& fit, std::span<const double> returns);
double garch_forecast(const GarchParams& params, std::span<const double> returns,
                      std::optional<double> initial_variance = std::nullopt);

/// Seeded simulation with a 500-step burn-in; returns only the kept returns.
std::vector<double> simulate_garch(const GarchParams& params, std::size_t length, std::uint64_t seed);

struct GarchPath {
  std::vector<double> returns;
  std::vector<double> variance;
};
/// Same draws as simulate_garch, also exposing the latent variance path.
GarchPath simulate_garch_path(const GarchParams& params, std::size_t length, std::uint64_t seed);

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes `f` from `start` with GSL's nmsimplex2 and an initial step of `step` on
/// every axis. Converged when the simplex size (mean vertex distance from the
/// centroid) drops below `tolerance`. Non-finite values of `f` act as a huge penalty.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> start,
                             double step, double tolerance, int max_iterations);

void write_garch_fit_json(std::ostream& out, const GarchFit& fit, std::size_t n_obs);

}  // namespace volfc
