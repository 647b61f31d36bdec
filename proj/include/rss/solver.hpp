#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "rss/dataset.hpp"

namespace rss {

/// Settings for the penalized logistic fits.
///
/// The L1 objective is  ||w||_1 + lambda * sum_i log(1 + exp(-y_i (x_i' w + c))),
/// i.e. lambda weighs the loss, not the penalty. The intercept is unpenalized.
struct SolverConfig {
  double lambda = 1.0;
  int max_iters = 10000;
  /// Relative objective change below which a run counts as stalled.
  double tol_objective = 1e-13;
  double tol_kkt = 1e-6;
  double support_epsilon = 1e-8;
  /// Standardize columns to zero mean / unit (population) variance before
  /// fitting. Weights are reported in the standardized basis.
  bool standardize = true;
  /// Keep the objective value of every iteration in SolverSolution::history.
  bool record_history = false;

  void validate() const;
};

struct SolverSolution {
  Eigen::VectorXd w;
  double c = 0.0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  bool converged = false;
  int iterations = 0;
  /// Column transform applied before fitting; scale 0 marks a dropped
  /// (constant) column whose weight is exactly 0.
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
  std::vector<double> history;

  /// Linear score x' w + c for raw (untransformed) rows.
  Eigen::VectorXd decision_function(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
  std::vector<Index> support(double epsilon) const;
};

struct LossAndGrad {
  double loss = 0.0;
  Eigen::VectorXd grad_w;
  double grad_c = 0.0;
};

namespace detail {

/// log(1 + exp(-m)) without overflow.
inline double log1p_exp_neg(double m) noexcept {
  return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

/// d/dm log(1 + exp(-m)) = -1 / (1 + exp(m)).
inline double log1p_exp_neg_deriv(double m) noexcept {
  if (m > 0) {
    const double e = std::exp(-m);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(m));
}

}  // namespace detail

/// Logistic loss sum_i log(1 + exp(-y_i (x_i' w + c))) and its gradient.
template <typename DerivedX>
LossAndGrad logistic_loss_and_grad(const Eigen::MatrixBase<DerivedX>& X, const Labels& y,
                                   const Eigen::VectorXd& w, double c) {
  const Eigen::VectorXd margin = (X * w).array() + c;
  Eigen::VectorXd dm(margin.size());
  LossAndGrad out;
  for (Index i = 0; i < margin.size(); ++i) {
    const double m = y[i] * margin[i];
    out.loss += detail::log1p_exp_neg(m);
    dm[i] = y[i] * detail::log1p_exp_neg_deriv(m);
  }
  out.grad_w = X.transpose() * dm;
  out.grad_c = dm.sum();
  return out;
}

/// Column standardization used by both fits.
struct ColumnTransform {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;  // 0 for constant columns
  std::vector<Index> kept;
};

ColumnTransform standardization(const Eigen::Ref<const Eigen::MatrixXd>& X, bool standardize);

/// Sparse logistic regression by accelerated proximal gradient (monotone
/// FISTA with backtracking) over a growing working set of coordinates.
SolverSolution fit_l1_logistic(const Eigen::Ref<const Eigen::MatrixXd>& X, const Labels& y,
                               const SolverConfig& cfg);

/// Ridge logistic regression: sum_i log(1 + exp(-y_i (x_i' w + c))) + lambda_ridge/2 ||w||^2.
/// Solved by Newton-CG; cfg.lambda is ignored, tol_kkt bounds the gradient norm.
SolverSolution fit_l2_logistic(const Eigen::Ref<const Eigen::MatrixXd>& X, const Labels& y,
                               double lambda_ridge, const SolverConfig& cfg = {});

/// Max violation of the L1 optimality conditions in the fitted basis.
double l1_kkt_residual(const Eigen::VectorXd& w, const Eigen::VectorXd& scaled_grad_w,
                       double grad_c, double support_epsilon);

}  // namespace rss
