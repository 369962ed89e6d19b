#include "volfc/garch.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "json.hpp"
#include "volfc/errors.hpp"
#include "volfc/marketdata.hpp"

namespace volfc {
namespace {

constexpr double kMaxPersistence = 0.999;
constexpr std::size_t kBurnIn = 500;
constexpr int kMaxIterations = 2000;
constexpr double kSimplexTolerance = 1e-8;
// Stand-in for non-finite objective values; the simplex code rejects infinities.
constexpr double kPenalty = 1e300;

double sample_variance(std::span<const double> r) {
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
  double ss = 0.0;
  for (double v : r) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(r.size());
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

GarchParams from_unconstrained(std::span<const double> theta, double scale) {
  const double persistence = kMaxPersistence * logistic(theta[1]);
  const double share = logistic(theta[2]);
  return GarchParams{scale * std::exp(theta[0]), persistence * share, persistence * (1.0 - share)};
}

std::vector<double> to_unconstrained(const GarchParams& p, double scale) {
  const double persistence = p.alpha + p.beta;
  return {std::log(p.omega / scale), logit(persistence / kMaxPersistence), logit(p.alpha / persistence)};
}

}  // namespace

bool satisfies_constraints(const GarchParams& p) {
  return p.omega > 0.0 && p.alpha >= 0.0 && p.beta >= 0.0 && p.alpha + p.beta < 1.0 && std::isfinite(p.omega);
}

std::vector<double> garch_filter(std::span<const double> returns, const GarchParams& params,
                                 std::optional<double> initial_variance, GarchTiming timing) {
  if (!satisfies_constraints(params)) throw ConfigError("GARCH parameters violate omega > 0, alpha, beta >= 0, alpha + beta < 1");
  if (returns.empty()) throw DataError("garch_filter needs at least one return");
  if (!initial_variance && returns.size() < 2) throw DataError("garch_filter needs at least 2 returns");
  const double h0 = initial_variance ? *initial_variance : sample_variance(returns);
  if (!(h0 > 0.0) || !std::isfinite(h0)) throw NumericError("degenerate initial variance (constant returns?)");

  std::vector<double> h2(returns.size());
  h2[0] = h0;
  for (std::size_t t = 1; t < returns.size(); ++t) {
    if (timing == GarchTiming::Causal) {
      h2[t] = params.omega + params.alpha * returns[t - 1] * returns[t - 1] + params.beta * h2[t - 1];
    } else {
      const double a = params.omega + params.beta * h2[t - 1];
      const double c = params.alpha * h2[t - 1] * returns[t] * returns[t];
      h2[t] = 0.5 * (a + std::sqrt(a * a + 4.0 * c));
    }
    const double used = timing == GarchTiming::Causal ? returns[t - 1] : returns[t];
    if (!std::isfinite(h2[t]) && std::isfinite(h2[t - 1]) && std::isfinite(used)) {
      throw NumericError("non-finite conditional variance at t=" + std::to_string(t));
    }
  }
  return h2;
}

double garch_loglik(std::span<const double> returns, const GarchParams& params, std::optional<double> initial_variance) {
  const auto h2 = garch_filter(returns, params, initial_variance);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double ll = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    ll += -0.5 * (log2pi + std::log(h2[t]) + returns[t] * returns[t] / h2[t]);
  }
  return ll;
}

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> start,
                             double step, double tolerance, int max_iterations) {
  static const auto previous_handler = gsl_set_error_handler_off();
  (void)previous_handler;

  const std::size_t n = start.size();
  using Objective = std::function<double(std::span<const double>)>;
  gsl_multimin_function fn;
  fn.n = n;
  fn.params = const_cast<Objective*>(&f);
  fn.f = [](const gsl_vector* x, void* params) {
    const auto& obj = *static_cast<const Objective*>(params);
    const double v = obj(std::span<const double>(x->data, x->size));
    return std::isfinite(v) ? v : kPenalty;
  };

  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x(gsl_vector_alloc(n), gsl_vector_free);
  std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> steps(gsl_vector_alloc(n), gsl_vector_free);
  for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x.get(), i, start[i]);
  gsl_vector_set_all(steps.get(), step);
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> solver(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), gsl_multimin_fminimizer_free);
  if (gsl_multimin_fminimizer_set(solver.get(), &fn, x.get(), steps.get()) != GSL_SUCCESS) {
    throw NumericError("nelder-mead: objective is not finite at the starting point");
  }

  NelderMeadResult result;
  int it = 0;
  while (it < max_iterations) {
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver.get()), tolerance) == GSL_SUCCESS) {
      result.converged = true;
      break;
    }
    ++it;
    if (gsl_multimin_fminimizer_iterate(solver.get()) != GSL_SUCCESS) break;
  }
  if (!result.converged &&
      gsl_multimin_test_size(gsl_multimin_fminimizer_size(solver.get()), tolerance) == GSL_SUCCESS) {
    result.converged = true;
  }
  const gsl_vector* best = gsl_multimin_fminimizer_x(solver.get());
  result.x.assign(best->data, best->data + n);
  result.value = gsl_multimin_fminimizer_minimum(solver.get());
  result.iterations = it;
  return result;
}

GarchFit fit_garch(std::span<const double> returns) {
  if (returns.size() < 50) throw DataError("fit_garch needs at least 50 returns");
  const double var = sample_variance(returns);
  if (!(var > 0.0) || !std::isfinite(var)) throw NumericError("degenerate likelihood: returns have zero variance");

  auto objective = [&](std::span<const double> theta) {
    const auto p = from_unconstrained(theta, var);
    if (!satisfies_constraints(p)) return std::numeric_limits<double>::infinity();
    try {
      return -garch_loglik(returns, p, var);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const GarchParams starts[] = {{var * 0.05, 0.05, 0.90}, {var * 0.10, 0.10, 0.80}, {var * 0.10, 0.20, 0.70}};
  std::vector<std::future<NelderMeadResult>> runs;
  for (const auto& s : starts) {
    runs.push_back(std::async(std::launch::async, [&, theta = to_unconstrained(s, var)] {
      return nelder_mead(objective, theta, 0.5, kSimplexTolerance, kMaxIterations);
    }));
  }

  GarchFit fit;
  fit.initial_variance = var;
  std::optional<NelderMeadResult> best;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    fit.start_log_likelihoods.push_back(-objective(to_unconstrained(starts[i], var)));
    auto r = runs[i].get();
    if (!std::isfinite(r.value) || r.value >= kPenalty) continue;
    if (!best || r.value < best->value) best = std::move(r);
  }
  if (!best) throw NumericError("GARCH fit diverged from every starting point");
  fit.params = from_unconstrained(best->x, var);
  fit.log_likelihood = -best->value;
  fit.converged = best->converged && satisfies_constraints(fit.params);
  fit.iterations = best->iterations;
  return fit;
}

double garch_forecast(const GarchParams& params, std::span<const double> returns, std::optional<double> initial_variance) {
  const auto h2 = garch_filter(returns, params, initial_variance);
  const double r = returns.back();
  return std::sqrt(params.omega + params.alpha * r * r + params.beta * h2.back());
}

double garch_forecast(const GarchFit& fit, std::span<const double> returns) {
  return garch_forecast(fit.params, returns, fit.initial_variance);
}

GarchPath simulate_garch_path(const GarchParams& params, std::size_t length, std::uint64_t seed) {
  if (!satisfies_constraints(params)) throw ConfigError("GARCH parameters violate omega > 0, alpha, beta >= 0, alpha + beta < 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  GarchPath path;
  path.returns.reserve(length);
  path.variance.reserve(length);
  double h2 = params.omega / (1.0 - params.alpha - params.beta);
  for (std::size_t t = 0; t < kBurnIn + length; ++t) {
    const double r = std::sqrt(h2) * normal(rng);
    if (t >= kBurnIn) {
      path.returns.push_back(r);
      path.variance.push_back(h2);
    }
    h2 = params.omega + params.alpha * r * r + params.beta * h2;
  }
  return path;
}

std::vector<double> simulate_garch(const GarchParams& params, std::size_t length, std::uint64_t seed) {
  return simulate_garch_path(params, length, seed).returns;
}

void write_garch_fit_json(std::ostream& out, const GarchFit& fit, std::size_t n_obs) {
  nlohmann::ordered_json j;
  j["params"] = {{"omega", fit.params.omega}, {"alpha", fit.params.alpha}, {"beta", fit.params.beta}};
  j["log_likelihood"] = fit.log_likelihood;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["n_obs"] = n_obs;
  j["initial_variance"] = fit.initial_variance;
  j["start_log_likelihoods"] = fit.start_log_likelihoods;
  out << j.dump(2) << '\n';
}

}  // namespace volfc
