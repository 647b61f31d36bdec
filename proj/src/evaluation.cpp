#include "rss/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rss/error.hpp"
#include "rss/rng.hpp"
#include "rss/solver.hpp"

namespace rss {

double pr_auc(const std::vector<PRPoint>& points) {
  double area = 0.0;
  double r0 = 0.0, p0 = 1.0;
  for (const auto& pt : points) {
    area += 0.5 * (pt.recall - r0) * (pt.precision + p0);
    r0 = pt.recall;
    p0 = pt.precision;
  }
  return area;
}

PRCurve precision_recall_curve(std::span<const double> scores, std::span<const Index> truth) {
  if (truth.empty()) throw Error("precision-recall: empty truth set");
  const auto p = scores.size();
  std::vector<char> relevant(p, 0);
  for (auto t : truth) {
    if (t < 0 || static_cast<std::size_t>(t) >= p) throw Error("precision-recall: truth index out of range");
    relevant[static_cast<std::size_t>(t)] = 1;
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error("precision-recall: scores must be finite");
  }
  const auto n_true = static_cast<double>(std::count(relevant.begin(), relevant.end(), 1));

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

  PRCurve curve;
  std::size_t selected = 0, hits = 0;
  for (std::size_t i = 0; i < p;) {
    const double t = scores[order[i]];
    while (i < p && scores[order[i]] == t) {
      hits += relevant[order[i]];
      ++selected;
      ++i;
    }
    curve.points.push_back({t, static_cast<double>(hits) / static_cast<double>(selected),
                            static_cast<double>(hits) / n_true});
  }
  curve.auc = pr_auc(curve.points);
  return curve;
}

std::vector<Index> top_t_selection(std::span<const double> scores, Index T) {
  if (T < 1 || static_cast<std::size_t>(T) > scores.size()) throw Error("top-T: T must lie in [1, p]");
  std::vector<Index> order(scores.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::partial_sort(order.begin(), order.begin() + T, order.end(), [&](Index a, Index b) {
    const double sa = scores[static_cast<std::size_t>(a)], sb = scores[static_cast<std::size_t>(b)];
    return sa != sb ? sa > sb : a < b;
  });
  order.resize(static_cast<std::size_t>(T));
  return order;
}

std::vector<int> stratified_folds(const Labels& y, const FoldSpec& spec) {
  if (spec.folds < 2) throw Error("cross-validation: need at least 2 folds");
  std::vector<int> fold(static_cast<std::size_t>(y.size()), 0);
  int offset = 0;
  for (int label : {1, -1}) {
    std::vector<Index> idx;
    for (Index i = 0; i < y.size(); ++i) {
      if (y[i] == label) idx.push_back(i);
    }
    auto rng = derive_stream(spec.seed, label == 1 ? 0 : 1);
    rng.shuffle(idx);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      fold[static_cast<std::size_t>(idx[k])] = static_cast<int>((k + static_cast<std::size_t>(offset)) % static_cast<std::size_t>(spec.folds));
    }
    // Continue the round-robin so small classes do not all land in fold 0
    offset = static_cast<int>((idx.size() + static_cast<std::size_t>(offset)) % static_cast<std::size_t>(spec.folds));
  }
  return fold;
}

namespace {

Eigen::MatrixXd select_columns(const RowMatrix& X, std::span<const Index> features) {
  Eigen::MatrixXd out(X.rows(), static_cast<Index>(features.size()));
  for (std::size_t k = 0; k < features.size(); ++k) out.col(static_cast<Index>(k)) = X.col(features[k]);
  return out;
}

std::vector<std::size_t> indices_where(const std::vector<int>& fold, int f, bool equal) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold.size(); ++i) {
    if ((fold[i] == f) == equal) out.push_back(i);
  }
  return out;
}

double accuracy(const Eigen::VectorXd& score, const Labels& y) {
  Index correct = 0;
  for (Index i = 0; i < y.size(); ++i) correct += ((score[i] >= 0 ? 1 : -1) == y[i]);
  return y.size() > 0 ? static_cast<double>(correct) / static_cast<double>(y.size()) : 0.0;
}

}  // namespace

double prediction_accuracy(const Dataset& train, const Dataset& test, std::span<const Index> features,
                           double lambda_ridge) {
  if (features.empty()) throw Error("prediction accuracy: empty feature set");
  if (train.p() != test.p()) throw Error("prediction accuracy: train and test differ in p");
  for (auto j : features) {
    if (j < 0 || j >= train.p()) throw Error("prediction accuracy: feature index out of range");
  }
  const auto sol = fit_l2_logistic(select_columns(train.X(), features), train.y(), lambda_ridge);
  return accuracy(sol.decision_function(select_columns(test.X(), features)), test.y());
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int k = 3; k <= 9; ++k) grid.push_back(k / 10.0);
  return grid;
}

double cv_threshold(const Dataset& d, std::span<const double> scores, std::span<const double> grid,
                    const FoldSpec& spec) {
  if (grid.empty()) throw Error("cv threshold: empty grid");
  if (static_cast<Index>(scores.size()) != d.p()) throw Error("cv threshold: scores length differs from p");
  const auto fold = stratified_folds(d.y(), spec);
  double best_tau = 0.0, best_acc = -1.0;
  bool any = false;
  for (double tau : grid) {
    std::vector<Index> features;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] >= tau) features.push_back(static_cast<Index>(j));
    }
    if (features.empty()) continue;
    double acc = 0.0;
    int used = 0;
    for (int f = 0; f < spec.folds; ++f) {
      const auto test_idx = indices_where(fold, f, true);
      if (test_idx.empty()) continue;
      const auto train = d.rows(indices_where(fold, f, false));
      acc += prediction_accuracy(train, d.rows(test_idx), features, spec.lambda_ridge);
      ++used;
    }
    acc /= std::max(used, 1);
    if (!any || acc > best_acc || (acc == best_acc && tau > best_tau)) {
      best_acc = acc;
      best_tau = tau;
      any = true;
    }
  }
  if (!any) throw Error("cv threshold: every threshold selects zero features");
  return best_tau;
}

std::vector<double> cv_lambda_accuracy(const Dataset& d, std::span<const double> lambdas, const FoldSpec& spec,
                                       const SolverConfig& base) {
  if (lambdas.empty()) throw Error("cv lambda: empty grid");
  const auto fold = stratified_folds(d.y(), spec);
  std::vector<double> out;
  for (double lambda : lambdas) {
    SolverConfig cfg = base;
    cfg.lambda = lambda;
    double acc = 0.0;
    int used = 0;
    for (int f = 0; f < spec.folds; ++f) {
      const auto test_idx = indices_where(fold, f, true);
      if (test_idx.empty()) continue;
      const auto train = d.rows(indices_where(fold, f, false));
      const auto test = d.rows(test_idx);
      const auto sol = fit_l1_logistic(Eigen::MatrixXd(train.X()), train.y(), cfg);
      acc += accuracy(sol.decision_function(Eigen::MatrixXd(test.X())), test.y());
      ++used;
    }
    out.push_back(acc / std::max(used, 1));
  }
  return out;
}

double cv_lambda(const Dataset& d, std::span<const double> lambdas, const FoldSpec& spec,
                 const SolverConfig& base) {
  const auto acc = cv_lambda_accuracy(d, lambdas, spec, base);
  double best_lambda = 0.0, best_acc = -1.0;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (acc[k] > best_acc || (acc[k] == best_acc && lambdas[k] < best_lambda)) {
      best_acc = acc[k];
      best_lambda = lambdas[k];
    }
  }
  return best_lambda;
}

Selector make_rss_selector(const Parcellation& parc, const StabilityConfig& cfg) {
  return [parc, cfg](const Dataset& d, std::uint64_t seed) {
    auto run_cfg = cfg;
    run_cfg.master_seed = seed;
    return run_stability_selection(d, parc, run_cfg);
  };
}

Selector make_randl1_selector(const RandL1Config& cfg) {
  return [cfg](const Dataset& d, std::uint64_t seed) {
    auto run_cfg = cfg;
    run_cfg.master_seed = seed;
    return randomized_l1(d, run_cfg);
  };
}

PermutationReport permutation_fp_estimate(const Dataset& d, const Selector& selector, double tau, int B,
                                          std::uint64_t seed) {
  if (B < 1) throw Error("permutation estimate: B must be at least 1");
  PermutationReport report;
  report.tau = tau;
  report.B = B;
  for (int b = 0; b < B; ++b) {
    auto rng = derive_stream(seed, static_cast<std::uint64_t>(b));
    std::vector<int> labels(d.y().data(), d.y().data() + d.y().size());
    rng.shuffle(labels);
    Labels permuted = Eigen::Map<const Labels>(labels.data(), static_cast<Index>(labels.size()));
    const auto scores = selector(d.with_labels(std::move(permuted)), derive_seed(seed, static_cast<std::uint64_t>(b)));
    report.replicate_counts.push_back(static_cast<std::int64_t>(threshold_scores(scores, tau).size()));
  }
  report.estimate = std::accumulate(report.replicate_counts.begin(), report.replicate_counts.end(), 0.0) /
                    static_cast<double>(B);
  return report;
}

}  // namespace rss
