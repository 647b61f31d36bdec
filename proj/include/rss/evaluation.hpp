#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rss/baselines.hpp"
#include "rss/dataset.hpp"
#include "rss/stability.hpp"

namespace rss {

struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  friend bool operator==(const PRPoint&, const PRPoint&) = default;
};

/// Points in decreasing threshold order (so recall is non-decreasing).
struct PRCurve {
  std::vector<PRPoint> points;
  double auc = 0.0;
};

/// One point per distinct score value t, selecting {i : score_i >= t}.
/// The area is the trapezoid rule over recall, starting from the empty
/// selection (recall 0, precision 1).
PRCurve precision_recall_curve(std::span<const double> scores, std::span<const Index> truth);

/// Trapezoid area over recall of a curve, prefixed by (recall 0, precision 1).
double pr_auc(const std::vector<PRPoint>& points);

/// The T highest scores, ties broken by lowest index; in rank order.
std::vector<Index> top_t_selection(std::span<const double> scores, Index T);

struct FoldSpec {
  int folds = 5;
  std::uint64_t seed = 0;
  double lambda_ridge = 1.0;
};

/// Stratified fold id per sample.
std::vector<int> stratified_folds(const Labels& y, const FoldSpec& spec);

/// Test-set accuracy of a ridge logistic model fit on train restricted to features.
double prediction_accuracy(const Dataset& train, const Dataset& test, std::span<const Index> features,
                           double lambda_ridge);

/// Threshold with the best mean cross-validated accuracy of a ridge model on
/// {i : score_i >= t}; ties go to the larger threshold, empty selections are skipped.
double cv_threshold(const Dataset& d, std::span<const double> scores, std::span<const double> grid,
                    const FoldSpec& folds = {});

/// The 0.3, 0.4, ..., 0.9 grid.
std::vector<double> default_threshold_grid();

/// Mean cross-validated accuracy of the sparse logistic model per loss weight.
std::vector<double> cv_lambda_accuracy(const Dataset& d, std::span<const double> lambdas, const FoldSpec& folds = {},
                                       const SolverConfig& base = {});

/// Loss weight with the best mean cross-validated accuracy of the sparse
/// logistic model; ties go to the smaller weight (sparser model).
double cv_lambda(const Dataset& d, std::span<const double> lambdas, const FoldSpec& folds = {},
                 const SolverConfig& base = {});

/// A stability-style selector rerun under permuted labels.
using Selector = std::function<StabilityScores(const Dataset&, std::uint64_t master_seed)>;

Selector make_rss_selector(const Parcellation& parc, const StabilityConfig& cfg);
Selector make_randl1_selector(const RandL1Config& cfg);

struct PermutationReport {
  double tau = 0.0;
  int B = 0;
  double estimate = 0.0;
  std::vector<std::int64_t> replicate_counts;
};

/// Mean over B label permutations of |{i : score_i >= tau}|.
PermutationReport permutation_fp_estimate(const Dataset& d, const Selector& selector, double tau, int B,
                                          std::uint64_t seed);

}  // namespace rss
