#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace volfc {

template <typename Rng>
OhlcBar simulate_day(Rng& rng, const Date& date, double open, double log_return, double variance, int steps) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double v = variance / static_cast<double>(steps);
  const double sd = std::sqrt(v);

  std::vector<double> z(static_cast<std::size_t>(steps));
  double total = 0.0;
  for (double& dz : z) {
    dz = sd * normal(rng);
    total += dz;
  }
  // Pin the skeleton to the day's return (discrete Brownian bridge).
  const double shift = (log_return - total) / static_cast<double>(steps);

  // Extremes of a Brownian bridge from a to b with variance v over the segment:
  // (a + b +- sqrt((b - a)^2 - 2 v ln U)) / 2.
  double x = 0.0;
  double hi = 0.0;
  double lo = 0.0;
  for (double dz : z) {
    const double next = x + dz + shift;
    const double gap2 = (next - x) * (next - x);
    const double u1 = 1.0 - uniform(rng);
    const double u2 = 1.0 - uniform(rng);
    hi = std::max(hi, 0.5 * (x + next + std::sqrt(gap2 - 2.0 * v * std::log(u1))));
    lo = std::min(lo, 0.5 * (x + next - std::sqrt(gap2 - 2.0 * v * std::log(u2))));
    x = next;
  }

  OhlcBar bar;
  bar.date = date;
  bar.open = open;
  bar.close = open * std::exp(log_return);
  bar.high = std::max({open * std::exp(hi), bar.open, bar.close});
  bar.low = std::min({open * std::exp(lo), bar.open, bar.close});
  return bar;
}

}  // namespace volfc
