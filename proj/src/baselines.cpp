#include "rss/baselines.hpp"

#include <cmath>
#include <string>

#include "rss/error.hpp"
#include "rss/parallel.hpp"
#include "rss/rng.hpp"
#include "rss/stability.hpp"

namespace rss {

std::vector<double> ttest_scores(const Dataset& d) {
  const Index n1 = d.count_label(1), n2 = d.count_label(-1);
  if (n1 < 2 || n2 < 2) throw Error("t-test: each class needs at least 2 samples");
  std::vector<double> scores(static_cast<std::size_t>(d.p()), 0.0);
  const auto& X = d.X();
  for (Index j = 0; j < d.p(); ++j) {
    double s1 = 0, s2 = 0;
    for (Index i = 0; i < d.n(); ++i) (d.y()[i] == 1 ? s1 : s2) += X(i, j);
    const double m1 = s1 / static_cast<double>(n1), m2 = s2 / static_cast<double>(n2);
    double v1 = 0, v2 = 0;
    for (Index i = 0; i < d.n(); ++i) {
      if (d.y()[i] == 1) {
        v1 += (X(i, j) - m1) * (X(i, j) - m1);
      } else {
        v2 += (X(i, j) - m2) * (X(i, j) - m2);
      }
    }
    v1 /= static_cast<double>(n1 - 1);
    v2 /= static_cast<double>(n2 - 1);
    const double se2 = v1 / static_cast<double>(n1) + v2 / static_cast<double>(n2);
    scores[static_cast<std::size_t>(j)] = se2 > 0 ? std::abs(m1 - m2) / std::sqrt(se2) : 0.0;
  }
  return scores;
}

namespace {

std::vector<double> abs_weights(const SolverSolution& sol) {
  std::vector<double> out(static_cast<std::size_t>(sol.w.size()));
  for (Index j = 0; j < sol.w.size(); ++j) out[static_cast<std::size_t>(j)] = std::abs(sol.w[j]);
  return out;
}

}  // namespace

std::vector<double> l1_weight_scores(const Dataset& d, const SolverConfig& cfg) {
  const Eigen::MatrixXd X = d.X();
  const auto sol = fit_l1_logistic(X, d.y(), cfg);
  if (!sol.converged) {
    throw Error("l1 weights: solver did not converge (KKT residual " + std::to_string(sol.kkt_residual) + ")");
  }
  return abs_weights(sol);
}

std::vector<double> l2_weight_scores(const Dataset& d, double lambda_ridge) {
  const Eigen::MatrixXd X = d.X();
  const auto sol = fit_l2_logistic(X, d.y(), lambda_ridge);
  if (!sol.converged) {
    throw Error("l2 weights: solver did not converge (gradient norm " + std::to_string(sol.kkt_residual) + ")");
  }
  return abs_weights(sol);
}

void RandL1Config::validate() const {
  if (K < 1) throw Error("randomized l1: K must be at least 1");
  if (!(row_fraction > 0 && row_fraction <= 1)) throw Error("randomized l1: row_fraction must lie in (0, 1]");
  if (!(weakness > 0 && weakness <= 1)) throw Error("randomized l1: weakness must lie in (0, 1]");
  solver.validate();
}

StabilityScores randomized_l1(const Dataset& d, const RandL1Config& cfg) {
  cfg.validate();
  SolverConfig solver = cfg.solver;
  solver.standardize = false;

  struct IterationResult {
    std::vector<Index> support;
    bool converged = true;
  };
  std::vector<IterationResult> results(static_cast<std::size_t>(cfg.K));

  parallel_for(results.size(), cfg.threads, [&](std::size_t k) {
    auto rng = derive_stream(cfg.master_seed, k);
    const auto rows = draw_row_subsample(d.n(), cfg.row_fraction, rng);
    Eigen::MatrixXd Xs(static_cast<Index>(rows.size()), d.p());
    Labels ys(static_cast<Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      Xs.row(static_cast<Index>(r)) = d.X().row(static_cast<Index>(rows[r]));
      ys[static_cast<Index>(r)] = d.y()[static_cast<Index>(rows[r])];
    }
    const auto transform = standardization(Xs, true);
    for (Index j = 0; j < Xs.cols(); ++j) {
      const double weight = rng.uniform(cfg.weakness, 1.0);
      if (transform.scale[j] > 0) {
        Xs.col(j) = (Xs.col(j).array() - transform.center[j]) * (weight / transform.scale[j]);
      } else {
        Xs.col(j).setZero();
      }
    }
    const auto sol = fit_l1_logistic(Xs, ys, solver);
    results[k].converged = sol.converged;
    results[k].support = sol.support(solver.support_epsilon);
  });

  StabilityScores scores;
  scores.K = cfg.K;
  scores.counts.assign(static_cast<std::size_t>(d.p()), 0);
  int failed = 0;
  for (const auto& r : results) {
    if (!r.converged) ++failed;
    for (auto j : r.support) ++scores.counts[static_cast<std::size_t>(j)];
  }
  if (failed > cfg.max_failure_fraction * cfg.K) {
    throw Error("randomized l1: solver failed to converge in " + std::to_string(failed) + " of " +
                std::to_string(cfg.K) + " resamplings");
  }
  return scores;
}

}  // namespace rss
