#pragma once

#include <cstdint>
#include <vector>

#include "rss/dataset.hpp"
#include "rss/solver.hpp"

namespace rss {

/// |Welch t| per column between the +1 and -1 classes.
std::vector<double> ttest_scores(const Dataset& d);

/// |w_j| of one full-data sparse logistic fit (standardized basis).
std::vector<double> l1_weight_scores(const Dataset& d, const SolverConfig& cfg);

/// |w_j| of one full-data ridge logistic fit (standardized basis).
std::vector<double> l2_weight_scores(const Dataset& d, double lambda_ridge);

/// Classical randomized sparse logistic stability selection.
struct RandL1Config {
  int K = 500;
  double row_fraction = 0.5;
  /// Lower bound a of the per-feature rescaling drawn from U[a, 1].
  double weakness = 0.5;
  SolverConfig solver{};
  std::uint64_t master_seed = 0;
  int threads = 1;
  double max_failure_fraction = 0.2;

  void validate() const;
};

/// Per iteration: subsample rows, standardize them, rescale each column by an
/// independent U[weakness, 1] draw, fit the sparse model on all p columns and
/// count the support.
StabilityScores randomized_l1(const Dataset& d, const RandL1Config& cfg);

}  // namespace rss
