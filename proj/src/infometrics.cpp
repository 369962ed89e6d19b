#include "volfc/infometrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "volfc/errors.hpp"

namespace volfc {

BinGrid make_grid(std::span<const double> values, int n_bins) {
  if (values.empty()) throw DataError("cannot bin an empty series");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return BinGrid{n_bins, *lo, *hi};
}

int bin_index(double value, const BinGrid& grid) {
  if (grid.n_bins < 1) throw ConfigError("bin count must be >= 1");
  if (!(value >= grid.min && value <= grid.max)) throw DataError("value outside the bin grid range");
  if (grid.max == grid.min) return 1;
  const double pos = static_cast<double>(grid.n_bins) * (value - grid.min) / (grid.max - grid.min);
  const int bin = 1 + static_cast<int>(std::floor(pos));
  return std::min(bin, grid.n_bins);
}

double empirical_mi(std::span<const double> x, std::span<const double> y, int n_bins) {
  if (x.size() != y.size()) throw DataError("empirical_mi: length mismatch");
  if (x.empty()) throw DataError("empirical_mi: empty series");
  if (n_bins < 1) throw ConfigError("bin count must be >= 1");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DataError("empirical_mi: non-finite sample");
  }
  const auto gx = make_grid(x, n_bins);
  const auto gy = make_grid(y, n_bins);
  const auto N = static_cast<std::size_t>(n_bins);

  std::vector<std::size_t> joint(N * N, 0);
  std::vector<std::size_t> px(N, 0);
  std::vector<std::size_t> py(N, 0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const auto i = static_cast<std::size_t>(bin_index(x[t], gx) - 1);
    const auto j = static_cast<std::size_t>(bin_index(y[t], gy) - 1);
    ++joint[i * N + j];
    ++px[i];
    ++py[j];
  }

  // sum p_ij ln(p_ij / (p_i p_j)) = sum (c_ij/T) ln(c_ij T / (c_i c_j))
  const auto T = static_cast<double>(x.size());
  double mi = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (px[i] == 0) continue;
    for (std::size_t j = 0; j < N; ++j) {
      const std::size_t c = joint[i * N + j];
      if (c == 0) continue;
      const auto cij = static_cast<double>(c);
      mi += cij / T * std::log(cij * T / (static_cast<double>(px[i]) * static_cast<double>(py[j])));
    }
  }
  return std::max(0.0, mi);
}

double scheme_mi(const SchemeDataset& dataset, int n_bins) {
  const std::span<const double> target(dataset.target.data(), dataset.rows());
  double total = 0.0;
  for (Eigen::Index c = 0; c < dataset.features.cols(); ++c) {
    const Eigen::VectorXd col = dataset.features.col(c);
    total += empirical_mi(std::span<const double>(col.data(), dataset.rows()), target, n_bins);
  }
  return total;
}

MiSurface grid_search(const AlignedPanel& panel, IntRange delta_t_range, IntRange k_range, int n_bins,
                      unsigned workers) {
  if (delta_t_range.lo < 1 || delta_t_range.hi < delta_t_range.lo) throw ConfigError("invalid delta_t range");
  if (k_range.lo < 2 || k_range.hi < k_range.lo) throw ConfigError("invalid k range");
  if (n_bins < 1) throw ConfigError("bin count must be >= 1");

  MiSurface surface;
  for (int dt = delta_t_range.lo; dt <= delta_t_range.hi; ++dt) {
    for (int k = k_range.lo; k <= k_range.hi; ++k) surface.entries.push_back(MiEntry{Scheme{dt, k}, 0.0, false, 0});
  }

  // Each worker writes only its own entries, so the result does not depend on scheduling.
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto work = [&] {
    for (std::size_t i = next++; i < surface.entries.size(); i = next++) {
      try {
        auto& e = surface.entries[i];
        const long rows = expected_rows(panel.size(), e.scheme);
        if (rows < static_cast<long>(kMinSchemeRows)) {
          e.skipped = true;
          e.rows = rows > 0 ? static_cast<std::size_t>(rows) : 0;
          continue;
        }
        const auto ds = build_scheme_dataset(panel, e.scheme);
        e.rows = ds.rows();
        e.mi_score = scheme_mi(ds, n_bins);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(surface.entries.size()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);

  const MiEntry* best = nullptr;
  for (const auto& e : surface.entries) {
    if (e.skipped) continue;
    if (best == nullptr || e.mi_score > best->mi_score) best = &e;
  }
  if (best == nullptr) throw DataError("panel too short for every scheme in the grid");
  surface.best = best->scheme;
  surface.best_score = best->mi_score;
  return surface;
}

void write_surface_csv(std::ostream& out, const MiSurface& surface) {
  out << "delta_t,k,mi_score,skipped\n";
  for (const auto& e : surface.entries) {
    out << e.scheme.delta_t << ',' << e.scheme.k << ',' << format_double(e.mi_score) << ','
        << (e.skipped ? 1 : 0) << '\n';
  }
}

}  // namespace volfc
