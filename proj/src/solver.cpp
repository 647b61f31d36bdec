#include "rss/solver.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "rss/error.hpp"

namespace rss {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void SolverConfig::validate() const {
  if (!(lambda > 0)) throw Error("solver: lambda must be positive");
  if (max_iters < 1) throw Error("solver: max_iters must be positive");
  if (!(tol_objective > 0) || !(tol_kkt > 0)) throw Error("solver: tolerances must be positive");
  if (!(support_epsilon > 0)) throw Error("solver: support_epsilon must be positive");
}

VectorXd SolverSolution::decision_function(const Eigen::Ref<const MatrixXd>& X) const {
  if (X.cols() != w.size()) throw Error("decision_function: dimension mismatch");
  VectorXd raw_w = VectorXd::Zero(w.size());
  double raw_c = c;
  for (Index j = 0; j < w.size(); ++j) {
    if (scale[j] > 0) {
      raw_w[j] = w[j] / scale[j];
      raw_c -= raw_w[j] * center[j];
    }
  }
  return (X * raw_w).array() + raw_c;
}

std::vector<Index> SolverSolution::support(double epsilon) const {
  std::vector<Index> out;
  for (Index j = 0; j < w.size(); ++j) {
    if (std::abs(w[j]) > epsilon) out.push_back(j);
  }
  return out;
}

ColumnTransform standardization(const Eigen::Ref<const MatrixXd>& X, bool standardize) {
  const Index n = X.rows();
  ColumnTransform t;
  t.center = VectorXd::Zero(X.cols());
  t.scale = VectorXd::Ones(X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    const double mean = n > 0 ? X.col(j).mean() : 0.0;
    const double var = n > 0 ? (X.col(j).array() - mean).square().mean() : 0.0;
    const double sd = std::sqrt(var);
    // Constant up to rounding
    const bool constant = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    if (constant) {
      t.scale[j] = 0.0;
      t.center[j] = mean;
      continue;
    }
    if (standardize) {
      t.center[j] = mean;
      t.scale[j] = sd;
    }
    t.kept.push_back(j);
  }
  return t;
}

double l1_kkt_residual(const VectorXd& w, const VectorXd& scaled_grad_w, double grad_c,
                       double support_epsilon) {
  double r = std::abs(grad_c);
  for (Index j = 0; j < w.size(); ++j) {
    const double g = scaled_grad_w[j];
    if (std::abs(w[j]) <= support_epsilon) {
      r = std::max(r, std::max(std::abs(g) - 1.0, 0.0));
    } else {
      r = std::max(r, std::abs(g + (w[j] > 0 ? 1.0 : -1.0)));
    }
  }
  return r;
}

namespace {

MatrixXd transformed_columns(const Eigen::Ref<const MatrixXd>& X, const ColumnTransform& t) {
  MatrixXd Z(X.rows(), static_cast<Index>(t.kept.size()));
  for (std::size_t k = 0; k < t.kept.size(); ++k) {
    const Index j = t.kept[k];
    Z.col(static_cast<Index>(k)) = (X.col(j).array() - t.center[j]) / t.scale[j];
  }
  return Z;
}

constexpr double kEps = std::numeric_limits<double>::epsilon();

VectorXd as_real(const Labels& y) { return y.cast<double>(); }

double intercept_only(const VectorXd& y) {
  const double pos = (y.array() > 0).count();
  const double neg = static_cast<double>(y.size()) - pos;
  return (pos > 0 && neg > 0) ? std::log(pos / neg) : 0.0;
}

/// Loss, its margin derivative, for margins m = Z w + c.
struct SmoothEval {
  double loss = 0.0;
  VectorXd dm;  // d loss / d margin_i
};

SmoothEval eval_smooth(const VectorXd& margin, const VectorXd& y, bool with_grad) {
  SmoothEval e;
  if (with_grad) e.dm.resize(margin.size());
  for (Index i = 0; i < margin.size(); ++i) {
    const double m = y[i] * margin[i];
    e.loss += detail::log1p_exp_neg(m);
    if (with_grad) e.dm[i] = y[i] * detail::log1p_exp_neg_deriv(m);
  }
  return e;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

struct InnerOutcome {
  int iterations = 0;
  bool converged = false;
};

/// Monotone FISTA on lambda * loss(ZA w + c) + ||w||_1 starting at (w, c).
/// A stall is accepted as converged when the residual meets stall_tol.
InnerOutcome fista(const MatrixXd& ZA, const VectorXd& y, double lambda, VectorXd& w, double& c,
                   double tol, double stall_tol, double support_eps, int max_iters, double tol_obj,
                   double& step, std::vector<double>* history) {
  InnerOutcome out;
  const Index k = ZA.cols();

  auto objective_at = [&](const VectorXd& wv, double cv, VectorXd* margin_out) {
    VectorXd margin = (ZA * wv).array() + cv;
    const double f = lambda * eval_smooth(margin, y, false).loss;
    if (margin_out) *margin_out = std::move(margin);
    return f;
  };
  auto gradient_at = [&](const VectorXd& wv, double cv, double& f, VectorXd& gw, double& gc) {
    const VectorXd margin = (ZA * wv).array() + cv;
    const auto e = eval_smooth(margin, y, true);
    f = lambda * e.loss;
    gw = lambda * (ZA.transpose() * e.dm);
    gc = lambda * e.dm.sum();
  };
  auto kkt_at = [&](const VectorXd& wv, const VectorXd& gw, double gc) {
    return l1_kkt_residual(wv, gw, gc / lambda, support_eps);
  };

  VectorXd x_w = w, prev_w = w;
  double x_c = c, prev_c = c;
  double fx;
  VectorXd gx_w;
  double gx_c;
  gradient_at(x_w, x_c, fx, gx_w, gx_c);
  double Fx = fx + x_w.lpNorm<1>();
  if (kkt_at(x_w, gx_w, gx_c) <= tol) {
    out.converged = true;
    return out;
  }

  if (!(step > 0)) {
    // 1 / Lipschitz bound of the smooth part via power iteration on [ZA 1]
    VectorXd v = VectorXd::Ones(k + 1);
    double sigma2 = static_cast<double>(y.size());
    for (int it = 0; it < 30; ++it) {
      const VectorXd u = (ZA * v.head(k)).array() + v[k];
      VectorXd nv(k + 1);
      nv.head(k) = ZA.transpose() * u;
      nv[k] = u.sum();
      const double norm = nv.norm();
      if (!(norm > 0)) break;
      sigma2 = norm / v.norm();
      v = nv / norm;
    }
    step = 1.0 / (lambda * 0.25 * std::max(sigma2, 1e-12));
  }

  VectorXd yw = x_w;
  double yc = x_c;
  double fy = fx;
  VectorXd gy_w = gx_w;
  double gy_c = gx_c;
  double theta = 1.0;
  int stall = 0;

  VectorXd z_w(k);
  for (int it = 0; it < max_iters; ++it) {
    ++out.iterations;
    double t = step * 1.25;
    double z_c = 0.0, fz = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      for (Index j = 0; j < k; ++j) z_w[j] = soft_threshold(yw[j] - t * gy_w[j], t);
      z_c = yc - t * gy_c;
      fz = objective_at(z_w, z_c, nullptr);
      const double dc = z_c - yc;
      const VectorXd dw = z_w - yw;
      const double quad = fy + gy_w.dot(dw) + gy_c * dc + (dw.squaredNorm() + dc * dc) / (2.0 * t);
      if (fz <= quad + 1e-14 * std::abs(fy)) break;
      t *= 0.5;
    }
    step = t;
    const double Fz = fz + z_w.lpNorm<1>();
    if (history) history->push_back(std::min(Fz, Fx));
    const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    const double F_old = Fx;
    // A plain proximal step from the best iterate cannot increase F in exact
    // arithmetic, so accept it up to rounding; it keeps contracting near the optimum.
    const bool from_best = yw == x_w && yc == x_c;
    if (Fz <= Fx || (from_best && Fz <= Fx + 8 * kEps * std::max(1.0, std::abs(Fx)))) {
      prev_w = x_w;
      prev_c = x_c;
      x_w = z_w;
      x_c = z_c;
      Fx = Fz;
      gradient_at(x_w, x_c, fx, gx_w, gx_c);
      if (kkt_at(x_w, gx_w, gx_c) <= tol) {
        out.converged = true;
        break;
      }
      const double mom = (theta - 1.0) / theta_next;
      yw = x_w + mom * (x_w - prev_w);
      yc = x_c + mom * (x_c - prev_c);
      theta = theta_next;
    } else {
      // Adaptive restart from the best iterate
      yw = x_w;
      yc = x_c;
      prev_w = x_w;
      prev_c = x_c;
      theta = 1.0;
    }
    if (yw == x_w && yc == x_c) {
      fy = fx;
      gy_w = gx_w;
      gy_c = gx_c;
    } else {
      gradient_at(yw, yc, fy, gy_w, gy_c);
    }
    if (std::abs(F_old - Fx) <= tol_obj * std::max(1.0, std::abs(Fx))) {
      if (++stall >= 200) {
        out.converged = kkt_at(x_w, gx_w, gx_c) <= stall_tol;
        break;
      }
    } else {
      stall = 0;
    }
  }
  w = x_w;
  c = x_c;
  return out;
}

SolverSolution finish(VectorXd w_kept, double c, const ColumnTransform& t, Index m) {
  SolverSolution s;
  s.w = VectorXd::Zero(m);
  for (std::size_t k = 0; k < t.kept.size(); ++k) s.w[t.kept[k]] = w_kept[static_cast<Index>(k)];
  s.c = c;
  s.center = t.center;
  s.scale = t.scale;
  return s;
}

void check_inputs(const Eigen::Ref<const MatrixXd>& X, const Labels& y) {
  if (X.rows() != y.size()) throw Error("solver: dimension mismatch between X and y");
  if (!X.allFinite()) throw Error("solver: X must be finite");
  for (Index i = 0; i < y.size(); ++i) {
    if (y[i] != 1 && y[i] != -1) throw Error("solver: labels must be +1/-1");
  }
}

}  // namespace

SolverSolution fit_l1_logistic(const Eigen::Ref<const MatrixXd>& X, const Labels& y,
                               const SolverConfig& cfg) {
  cfg.validate();
  check_inputs(X, y);
  const auto transform = standardization(X, cfg.standardize);
  const MatrixXd Z = transformed_columns(X, transform);
  const VectorXd yr = as_real(y);
  const Index k = Z.cols();
  const double lambda = cfg.lambda;

  VectorXd w = VectorXd::Zero(k);
  double c = intercept_only(yr);
  std::vector<Index> active;
  std::vector<char> is_active(static_cast<std::size_t>(k), 0);
  double step = 0.0;
  int used = 0;
  bool inner_ok = false;
  std::vector<double> history;
  const double inner_tol = 0.5 * cfg.tol_kkt;

  for (;;) {
    MatrixXd ZA(Z.rows(), static_cast<Index>(active.size()));
    VectorXd wA(static_cast<Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) {
      ZA.col(static_cast<Index>(a)) = Z.col(active[a]);
      wA[static_cast<Index>(a)] = w[active[a]];
    }
    const auto inner = fista(ZA, yr, lambda, wA, c, inner_tol, cfg.tol_kkt, cfg.support_epsilon,
                             cfg.max_iters - used, cfg.tol_objective, step,
                             cfg.record_history ? &history : nullptr);
    used += inner.iterations;
    inner_ok = inner.converged;
    for (std::size_t a = 0; a < active.size(); ++a) w[active[a]] = wA[static_cast<Index>(a)];
    if (!inner_ok || used >= cfg.max_iters) break;

    const VectorXd margin = (Z * w).array() + c;
    const VectorXd g = lambda * (Z.transpose() * eval_smooth(margin, yr, true).dm);
    std::vector<Index> violators;
    for (Index j = 0; j < k; ++j) {
      if (!is_active[static_cast<std::size_t>(j)] && std::abs(g[j]) > 1.0 + inner_tol) {
        violators.push_back(j);
      }
    }
    if (violators.empty()) break;
    std::stable_sort(violators.begin(), violators.end(),
                     [&](Index a, Index b) { return std::abs(g[a]) > std::abs(g[b]); });
    const std::size_t add = std::min(violators.size(), std::max<std::size_t>(10, active.size()));
    for (std::size_t v = 0; v < add; ++v) {
      active.push_back(violators[v]);
      is_active[static_cast<std::size_t>(violators[v])] = 1;
    }
    std::sort(active.begin(), active.end());
    step = 0.0;
  }

  const VectorXd margin = (Z * w).array() + c;
  const auto e = eval_smooth(margin, yr, true);
  const VectorXd g = lambda * (Z.transpose() * e.dm);
  auto sol = finish(w, c, transform, X.cols());
  sol.objective = lambda * e.loss + w.lpNorm<1>();
  sol.kkt_residual = l1_kkt_residual(w, g, e.dm.sum(), cfg.support_epsilon);
  sol.iterations = used;
  sol.history = std::move(history);
  sol.converged = inner_ok && sol.kkt_residual <= cfg.tol_kkt;
  return sol;
}

SolverSolution fit_l2_logistic(const Eigen::Ref<const MatrixXd>& X, const Labels& y,
                               double lambda_ridge, const SolverConfig& cfg) {
  if (!(lambda_ridge > 0)) throw Error("solver: lambda_ridge must be positive");
  if (cfg.max_iters < 1 || !(cfg.tol_kkt > 0)) throw Error("solver: invalid configuration");
  check_inputs(X, y);
  const auto transform = standardization(X, cfg.standardize);
  const MatrixXd Z = transformed_columns(X, transform);
  const VectorXd yr = as_real(y);
  const Index k = Z.cols();

  VectorXd w = VectorXd::Zero(k);
  double c = intercept_only(yr);

  auto objective = [&](const VectorXd& wv, double cv) {
    const VectorXd margin = (Z * wv).array() + cv;
    return eval_smooth(margin, yr, false).loss + 0.5 * lambda_ridge * wv.squaredNorm();
  };

  VectorXd gw;
  double gc = 0.0;
  double f = 0.0;
  VectorXd curv;  // per-sample Hessian weights
  auto evaluate = [&]() {
    const VectorXd margin = (Z * w).array() + c;
    const auto e = eval_smooth(margin, yr, true);
    f = e.loss + 0.5 * lambda_ridge * w.squaredNorm();
    gw = Z.transpose() * e.dm + lambda_ridge * w;
    gc = e.dm.sum();
    curv.resize(margin.size());
    for (Index i = 0; i < margin.size(); ++i) {
      const double s = -detail::log1p_exp_neg_deriv(yr[i] * margin[i]);  // sigma(-m)
      curv[i] = s * (1.0 - s);
    }
  };
  auto grad_norm = [&]() { return std::max(k > 0 ? gw.lpNorm<Eigen::Infinity>() : 0.0, std::abs(gc)); };

  evaluate();
  std::vector<double> history;
  int it = 0;
  bool converged = grad_norm() <= cfg.tol_kkt;
  // Jacobi preconditioner diagonal
  VectorXd diag(k + 1);
  while (!converged && it < cfg.max_iters) {
    ++it;
    for (Index j = 0; j < k; ++j) diag[j] = Z.col(j).cwiseAbs2().dot(curv) + lambda_ridge;
    diag[k] = std::max(curv.sum(), 1e-300);

    auto hess_vec = [&](const VectorXd& v) {
      const VectorXd u = ((Z * v.head(k)).array() + v[k]).matrix().cwiseProduct(curv);
      VectorXd out(k + 1);
      out.head(k) = Z.transpose() * u + lambda_ridge * v.head(k);
      out[k] = u.sum();
      return out;
    };

    VectorXd g(k + 1);
    g.head(k) = gw;
    g[k] = gc;
    // Preconditioned CG on H d = -g
    VectorXd d = VectorXd::Zero(k + 1);
    VectorXd r = -g;
    VectorXd zr = r.cwiseQuotient(diag);
    VectorXd pdir = zr;
    double rz = r.dot(zr);
    const double gnorm = g.norm();
    const double cg_tol = std::min(0.1, std::sqrt(gnorm)) * gnorm;
    const int cg_max = static_cast<int>(std::min<Index>(2 * (k + 1) + 10, 500));
    for (int cg = 0; cg < cg_max && r.norm() > cg_tol; ++cg) {
      const VectorXd Hp = hess_vec(pdir);
      const double pHp = pdir.dot(Hp);
      if (!(pHp > 0)) break;
      const double a = rz / pHp;
      d += a * pdir;
      r -= a * Hp;
      zr = r.cwiseQuotient(diag);
      const double rz_new = r.dot(zr);
      pdir = zr + (rz_new / rz) * pdir;
      rz = rz_new;
    }
    if (d.isZero(0.0)) d = -g.cwiseQuotient(diag);

    const double slope = g.dot(d);
    double s = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const VectorXd w_new = w + s * d.head(k);
      const double c_new = c + s * d[k];
      const double f_new = objective(w_new, c_new);
      if (f_new <= f + 1e-4 * s * slope) {
        if (cfg.record_history) history.push_back(f_new);
        w = w_new;
        c = c_new;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;
    evaluate();
    converged = grad_norm() <= cfg.tol_kkt;
  }

  auto sol = finish(w, c, transform, X.cols());
  sol.objective = f;
  sol.kkt_residual = grad_norm();
  sol.iterations = it;
  sol.history = std::move(history);
  sol.converged = converged;
  return sol;
}

}  // namespace rss
