#pragma once

// Reference computations kept independent of the library code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Columns shifted to zero mean and scaled to unit population variance.
inline Eigen::MatrixXd standardize(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Z = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    double mean = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) mean += X(i, j);
    mean /= static_cast<double>(X.rows());
    double var = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) var += (X(i, j) - mean) * (X(i, j) - mean);
    var /= static_cast<double>(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) Z(i, j) = (X(i, j) - mean) / std::sqrt(var);
  }
  return Z;
}

/// Plain-loop logistic loss.
inline double logistic_loss(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                            const std::vector<double>& w, double c) {
  double total = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double m = c;
    for (Eigen::Index j = 0; j < X.cols(); ++j) m += X(i, j) * w[static_cast<std::size_t>(j)];
    const double z = -y[i] * m;
    total += z > 0 ? z + std::log(1 + std::exp(-z)) : std::log(1 + std::exp(z));
  }
  return total;
}

inline double l1_objective(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, double lambda,
                           const std::vector<double>& w, double c) {
  double pen = 0;
  for (double v : w) pen += std::abs(v);
  return pen + lambda * logistic_loss(X, y, w, c);
}

/// Minimizes a convex function of `dim` variables by repeatedly evaluating a
/// full tensor grid and shrinking it around the best node, until the grid
/// spacing drops below `resolution`.
inline std::vector<double> zoom_grid_search(const std::function<double(const std::vector<double>&)>& f,
                                            std::size_t dim, double half_width, double resolution,
                                            int points_per_axis = 25, double keep_spacings = 3.0) {
  std::vector<double> centre(dim, 0.0);
  double hw = half_width;
  for (;;) {
    const double spacing = 2 * hw / (points_per_axis - 1);
    std::vector<int> idx(dim, 0);
    std::vector<double> best = centre, x(dim);
    double best_val = std::numeric_limits<double>::infinity();
    for (;;) {
      for (std::size_t d = 0; d < dim; ++d) x[d] = centre[d] - hw + spacing * idx[d];
      const double v = f(x);
      if (v < best_val) {
        best_val = v;
        best = x;
      }
      std::size_t d = 0;
      while (d < dim && ++idx[d] == points_per_axis) idx[d++] = 0;
      if (d == dim) break;
    }
    centre = best;
    if (spacing <= resolution) return centre;
    hw = keep_spacings * spacing;
  }
}

/// Central-difference gradient.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = x[k];
    x[k] = orig + h;
    const double up = f(x);
    x[k] = orig - h;
    const double down = f(x);
    x[k] = orig;
    g[k] = (up - down) / (2 * h);
  }
  return g;
}

/// Fixed-step gradient descent driven by finite-difference gradients.
inline std::vector<double> fd_gradient_descent(const std::function<double(const std::vector<double>&)>& f,
                                               std::vector<double> x, double step, int iters, double h = 1e-6) {
  for (int it = 0; it < iters; ++it) {
    const auto g = fd_gradient(f, x, h);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] -= step * g[k];
  }
  return x;
}

struct PRRef {
  double threshold;
  double precision;
  double recall;
};

/// Precision and recall counted directly at every distinct score, descending.
inline std::vector<PRRef> brute_pr(const std::vector<double>& s, const std::vector<long>& truth) {
  const std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  const std::set<long> t(truth.begin(), truth.end());
  std::vector<PRRef> out;
  for (double th : thresholds) {
    double sel = 0, tp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= th) {
        ++sel;
        tp += t.count(static_cast<long>(i)) ? 1 : 0;
      }
    }
    out.push_back({th, tp / sel, tp / static_cast<double>(truth.size())});
  }
  return out;
}

/// Trapezoid area over recall starting from (recall 0, precision 1).
inline double brute_auc(const std::vector<PRRef>& pts) {
  double area = 0, r0 = 0, p0 = 1;
  for (const auto& pt : pts) {
    area += (pt.recall - r0) * (pt.precision + p0) / 2;
    r0 = pt.recall;
    p0 = pt.precision;
  }
  return area;
}

/// First T indices of a stable descending sort.
inline std::vector<long> stable_top_t(const std::vector<double>& s, long T) {
  std::vector<long> order(s.size());
  std::iota(order.begin(), order.end(), 0L);
  std::stable_sort(order.begin(), order.end(), [&](long a, long b) {
    return s[static_cast<std::size_t>(a)] > s[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(T));
  return order;
}

}  // namespace oracle
