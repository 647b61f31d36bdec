#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rss/dataset.hpp"
#include "rss/error.hpp"
#include "rss/rng.hpp"
#include "rss/solver.hpp"

namespace rss {

struct BlockShape {
  std::int32_t x = 3;
  std::int32_t y = 3;
  std::int32_t z = 3;
  std::int64_t volume() const noexcept { return std::int64_t{x} * y * z; }
  friend bool operator==(const BlockShape&, const BlockShape&) = default;
};

struct StabilityConfig {
  int K = 50;
  /// Row-subsampling fraction.
  double alpha = 0.5;
  /// Per-cluster feature-subsampling fraction.
  double beta = 0.1;
  BlockShape block{};
  /// Base learner settings; solver.lambda is the loss weight.
  SolverConfig solver{};
  std::uint64_t master_seed = 0;
  /// Worker count; never changes the result.
  int threads = 1;
  /// Abort when more than this fraction of fits fail to converge.
  double max_failure_fraction = 0.2;

  void validate() const;
};

/// One resampling: chosen rows and, per cluster g, its picked features g' (ascending).
struct SubsampleDraw {
  std::vector<std::size_t> rows;
  std::vector<std::vector<std::int32_t>> picked;
};

/// max(1, round(beta * size)).
std::int64_t cluster_quota(std::size_t cluster_size, double beta);

/// Uniform subset of round(alpha * n) distinct rows, ascending.
std::vector<std::size_t> draw_row_subsample(Index n, double alpha, RngStream& rng);

/// Per-cluster picked features for one resampling.
///
/// Axis-aligned blocks are dropped uniformly on the grid (every anchor whose
/// block touches the mask is equally likely; cells outside the mask are
/// ignored). The in-mask voxels of a block join their owning cluster unless
/// that cluster had already reached its quota before the block landed. Once
/// every cluster is full, each cluster's surplus is trimmed uniformly at
/// random so that exactly cluster_quota(|g|, beta) voxels remain.
///
/// Without geometry the draw falls back to uniform sampling of the quota
/// within each cluster.
std::vector<std::vector<std::int32_t>> constrained_block_subsample(const GridGeometry* geometry,
                                                                    const Parcellation& parc,
                                                                    double beta, BlockShape block,
                                                                    RngStream& rng);

/// Column g of the result is the mean over picked[g] of the given rows of X.
template <typename DerivedX>
Eigen::MatrixXd average_supervoxels(const Eigen::MatrixBase<DerivedX>& X,
                                    const std::vector<std::vector<std::int32_t>>& picked);

/// Same as above, restricted to a row subset of X.
Eigen::MatrixXd average_supervoxels(const RowMatrix& X, std::span<const std::size_t> rows,
                                    const std::vector<std::vector<std::int32_t>>& picked);

/// The full draw for resampling k, taken from derive_stream(master_seed, k).
SubsampleDraw draw_resampling(const Dataset& d, const Parcellation& parc, const StabilityConfig& cfg,
                              std::uint64_t k);

struct StabilityRun {
  StabilityScores scores;
  int failed_fits = 0;
};

/// K resamplings of rows and constrained feature blocks; each fit on the
/// cluster-averaged matrix selects clusters, and every picked voxel of a
/// selected cluster gains one count.
StabilityRun run_stability_selection_detailed(const Dataset& d, const Parcellation& parc,
                                              const StabilityConfig& cfg);

inline StabilityScores run_stability_selection(const Dataset& d, const Parcellation& parc,
                                               const StabilityConfig& cfg) {
  return run_stability_selection_detailed(d, parc, cfg).scores;
}

/// Features with counts[i] / K >= tau, ascending.
std::vector<Index> threshold_scores(const StabilityScores& s, double tau);

template <typename DerivedX>
Eigen::MatrixXd average_supervoxels(const Eigen::MatrixBase<DerivedX>& X,
                                    const std::vector<std::vector<std::int32_t>>& picked) {
  Eigen::MatrixXd out(X.rows(), static_cast<Index>(picked.size()));
  for (std::size_t g = 0; g < picked.size(); ++g) {
    if (picked[g].empty()) throw Error("average_supervoxels: empty picked set");
    auto col = out.col(static_cast<Index>(g));
    col.setZero();
    for (auto j : picked[g]) col += X.col(j);
    col /= static_cast<double>(picked[g].size());
  }
  return out;
}

}  // namespace rss
