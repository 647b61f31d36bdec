#include "rss/clustering.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "rss/error.hpp"
#include "rss/parallel.hpp"
#include "rss/rng.hpp"

namespace rss {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void ClusterConfig::validate(Index p) const {
  if (q < 1) throw Error("kmeans: q must be at least 1");
  if (static_cast<Index>(q) > p) {
    throw Error("kmeans: q = " + std::to_string(q) + " exceeds the number of features " +
                std::to_string(p));
  }
  if (restarts < 1) throw Error("kmeans: restarts must be at least 1");
  if (max_lloyd_iters < 1) throw Error("kmeans: max_lloyd_iters must be at least 1");
  if (!(spatial_weight >= 0)) throw Error("kmeans: spatial_weight must be non-negative");
}

MatrixXd build_feature_vectors(const Dataset& d, double spatial_weight) {
  const Index n = d.n(), p = d.p();
  const bool spatial = d.geometry().has_value() && spatial_weight > 0;
  MatrixXd F = MatrixXd::Zero(p, spatial ? n + 3 : n);
  for (Index j = 0; j < p; ++j) {
    const auto col = d.X().col(j);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().mean());
    if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
      F.row(j).head(n) = ((col.array() - mean) / sd).matrix().transpose();
    }
  }
  if (spatial) {
    const auto& dims = d.geometry()->dims();
    const auto& mask = d.geometry()->mask();
    auto norm = [](std::int32_t v, std::int32_t dim) {
      return dim > 1 ? static_cast<double>(v) / static_cast<double>(dim - 1) : 0.0;
    };
    for (Index j = 0; j < p; ++j) {
      const auto& c = mask[static_cast<std::size_t>(j)];
      F(j, n) = spatial_weight * norm(c.x, dims[0]);
      F(j, n + 1) = spatial_weight * norm(c.y, dims[1]);
      F(j, n + 2) = spatial_weight * norm(c.z, dims[2]);
    }
  }
  return F;
}

double within_cluster_ss(const MatrixXd& F, const std::vector<std::int32_t>& assignment, std::int32_t q) {
  MatrixXd sums = MatrixXd::Zero(q, F.cols());
  VectorXd counts = VectorXd::Zero(q);
  for (Index j = 0; j < F.rows(); ++j) {
    sums.row(assignment[static_cast<std::size_t>(j)]) += F.row(j);
    counts[assignment[static_cast<std::size_t>(j)]] += 1.0;
  }
  double total = 0.0;
  for (Index j = 0; j < F.rows(); ++j) {
    const auto g = assignment[static_cast<std::size_t>(j)];
    total += (F.row(j) - sums.row(g) / counts[g]).squaredNorm();
  }
  return total;
}

namespace {

constexpr Index kChunk = 2048;

struct RestartResult {
  std::vector<std::int32_t> assignment;
  double inertia = std::numeric_limits<double>::infinity();
  std::vector<double> history;
};

MatrixXd kmeanspp_init(const MatrixXd& F, std::int32_t q, RngStream& rng) {
  const Index p = F.rows();
  MatrixXd C(q, F.cols());
  VectorXd d2 = VectorXd::Constant(p, std::numeric_limits<double>::infinity());
  std::vector<char> chosen(static_cast<std::size_t>(p), 0);
  Index pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(p)));
  for (std::int32_t g = 0; g < q; ++g) {
    if (g > 0) {
      const double total = d2.sum();
      if (total > 0 && std::isfinite(total)) {
        double u = rng.uniform() * total;
        pick = -1;
        for (Index j = 0; j < p; ++j) {
          if (!(d2[j] > 0)) continue;
          pick = j;
          u -= d2[j];
          if (u < 0) break;
        }
      } else {
        // All remaining points coincide with chosen centers
        std::vector<Index> free;
        for (Index j = 0; j < p; ++j) {
          if (!chosen[static_cast<std::size_t>(j)]) free.push_back(j);
        }
        pick = free[static_cast<std::size_t>(rng.below(free.size()))];
      }
    }
    chosen[static_cast<std::size_t>(pick)] = 1;
    C.row(g) = F.row(pick);
    d2 = d2.cwiseMin((F.rowwise() - F.row(pick)).rowwise().squaredNorm());
    d2[pick] = 0.0;
  }
  return C;
}

/// Nearest center per point (lowest id on ties) and its squared distance.
void assign(const MatrixXd& F, const MatrixXd& C, std::vector<std::int32_t>& labels, VectorXd& dist) {
  const Index p = F.rows();
  const VectorXd cnorm = C.rowwise().squaredNorm();
  for (Index start = 0; start < p; start += kChunk) {
    const Index len = std::min(kChunk, p - start);
    const auto block = F.middleRows(start, len);
    const MatrixXd cross = block * C.transpose();
    const VectorXd xnorm = block.rowwise().squaredNorm();
    for (Index r = 0; r < len; ++r) {
      double best = std::numeric_limits<double>::infinity();
      std::int32_t arg = 0;
      for (Index g = 0; g < C.rows(); ++g) {
        const double v = cnorm[g] - 2.0 * cross(r, g);
        if (v < best) {
          best = v;
          arg = static_cast<std::int32_t>(g);
        }
      }
      labels[static_cast<std::size_t>(start + r)] = arg;
      dist[start + r] = std::max(0.0, best + xnorm[r]);
    }
  }
}

RestartResult lloyd(const MatrixXd& F, const ClusterConfig& cfg, RngStream rng) {
  const Index p = F.rows();
  const std::int32_t q = cfg.q;
  MatrixXd C = kmeanspp_init(F, q, rng);
  RestartResult res;
  res.assignment.assign(static_cast<std::size_t>(p), -1);
  std::vector<std::int32_t> labels(static_cast<std::size_t>(p), 0);
  VectorXd dist(p);
  std::vector<Index> counts(static_cast<std::size_t>(q));

  for (int it = 0; it < cfg.max_lloyd_iters; ++it) {
    assign(F, C, labels, dist);

    std::fill(counts.begin(), counts.end(), 0);
    for (auto g : labels) ++counts[static_cast<std::size_t>(g)];
    for (std::int32_t g = 0; g < q; ++g) {
      if (counts[static_cast<std::size_t>(g)] > 0) continue;
      // Reseed with the point farthest from its centroid among clusters that can spare one
      Index far = -1;
      for (Index j = 0; j < p; ++j) {
        if (counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] < 2) continue;
        if (far < 0 || dist[j] > dist[far]) far = j;
      }
      --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
      labels[static_cast<std::size_t>(far)] = g;
      counts[static_cast<std::size_t>(g)] = 1;
      dist[far] = 0.0;
      C.row(g) = F.row(far);
    }

    const bool stable = labels == res.assignment;
    res.assignment = labels;

    C.setZero();
    for (Index j = 0; j < p; ++j) C.row(labels[static_cast<std::size_t>(j)]) += F.row(j);
    for (std::int32_t g = 0; g < q; ++g) C.row(g) /= static_cast<double>(counts[static_cast<std::size_t>(g)]);

    double inertia = 0.0;
    for (Index j = 0; j < p; ++j) inertia += (F.row(j) - C.row(labels[static_cast<std::size_t>(j)])).squaredNorm();
    res.history.push_back(inertia);
    res.inertia = inertia;
    if (stable) break;
  }
  return res;
}

}  // namespace

KMeansFit kmeans_fit(const MatrixXd& features, const ClusterConfig& cfg) {
  cfg.validate(features.rows());
  std::vector<RestartResult> runs(static_cast<std::size_t>(cfg.restarts));
  parallel_for(runs.size(), cfg.threads, [&](std::size_t r) {
    runs[r] = lloyd(features, cfg, derive_stream(cfg.seed, r));
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].inertia < runs[best].inertia) best = r;
  }
  return KMeansFit{Parcellation(std::move(runs[best].assignment), cfg.q), runs[best].inertia,
                   static_cast<int>(best), std::move(runs[best].history)};
}

}  // namespace rss
