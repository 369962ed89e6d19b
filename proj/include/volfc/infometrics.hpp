#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "volfc/marketdata.hpp"
#include "volfc/preprocess.hpp"

namespace volfc {

inline constexpr int kDefaultBins = 100;
inline constexpr std::size_t kMinSchemeRows = 30;

/// N equal-width bins over [min, max]; the last bin is closed on the right.
struct BinGrid {
  int n_bins = kDefaultBins;
  double min = 0.0;
  double max = 0.0;
};

/// Grid spanning the sample range of `values`.
BinGrid make_grid(std::span<const double> values, int n_bins);

/// 1-based bin of `value`: 1 + floor(N (value - min) / (max - min)), capped at N.
/// All values map to bin 1 when max == min. Throws DataError outside [min, max].
int bin_index(double value, const BinGrid& grid);

/// Histogram estimate of I(X;Y) in nats. Each axis is binned over its own range.
double empirical_mi(std::span<const double> x, std::span<const double> y, int n_bins = kDefaultBins);

/// Sum of empirical_mi(feature column, normalized target) over all feature columns.
double scheme_mi(const SchemeDataset& dataset, int n_bins = kDefaultBins);

struct IntRange {
  int lo = 1;
  int hi = 1;
};

struct MiEntry {
  Scheme scheme;
  double mi_score = 0.0;
  bool skipped = false;
  std::size_t rows = 0;
};

struct MiSurface {
  /// Sorted by (delta_t, k).
  std::vector<MiEntry> entries;
  Scheme best;
  double best_score = 0.0;
};

/// Evaluates scheme_mi over every (delta_t, k) in the ranges. Schemes with fewer
/// than kMinSchemeRows rows are recorded as skipped. Ties in the argmax go to the
/// smaller delta_t, then the smaller k. `workers` = 0 picks the hardware concurrency.
MiSurface grid_search(const AlignedPanel& panel, IntRange delta_t_range, IntRange k_range,
                      int n_bins = kDefaultBins, unsigned workers = 0);

/// `delta_t,k,mi_score,skipped` rows.
void write_surface_csv(std::ostream& out, const MiSurface& surface);

}  // namespace volfc
