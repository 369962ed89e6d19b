#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "volfc/lstm.hpp"

namespace volfc::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Compares bptt against central differences of the batch MAPE for every
/// parameter of a randomly initialized network on random windows. The relative
/// error denominator is floored at 1e-6 so vanishing entries are compared absolutely.
inline GradCheck gradient_check(std::uint64_t seed, Eigen::Index input_dim = 5, Eigen::Index hidden_dim = 4,
                                int lag = 6, std::size_t batch = 3, double step = 1e-5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  auto params = init_params(input_dim, hidden_dim, seed + 1000);
  for (auto& b : params.blocks()) {
    for (double& v : b.data) v += 0.3 * g(rng);
  }
  std::vector<Eigen::MatrixXd> windows;
  std::vector<double> targets;
  for (std::size_t i = 0; i < batch; ++i) {
    Eigen::MatrixXd w(lag, input_dim);
    for (Eigen::Index j = 0; j < w.size(); ++j) w.data()[j] = g(rng);
    windows.push_back(w);
    // Targets far from any reachable prediction keep the loss away from its kink.
    targets.push_back((i % 2 == 0 ? 1.0 : -1.0) * (5.0 + std::abs(g(rng))));
  }
  const double eps = 1e-8;
  const auto analytic = bptt(windows, targets, params, eps);
  auto loss_at = [&](const LstmParams& p) {
    const Eigen::VectorXd pred = forward_batch(windows, p);
    return mape_loss(std::span<const double>(pred.data(), batch), targets, eps);
  };

  GradCheck out;
  auto blocks = params.blocks();
  const auto grads = std::as_const(analytic.grad).blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t i = 0; i < blocks[b].data.size(); ++i) {
      double& v = blocks[b].data[i];
      const double saved = v;
      v = saved + step;
      const double up = loss_at(params);
      v = saved - step;
      const double down = loss_at(params);
      v = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = grads[b].data[i];
      const double scale = std::max({std::abs(a), std::abs(numeric), 1e-6});
      out.max_rel_error = std::max(out.max_rel_error, std::abs(a - numeric) / scale);
      ++out.checked;
    }
  }
  return out;
}

}  // namespace volfc::testing
