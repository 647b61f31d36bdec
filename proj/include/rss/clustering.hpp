#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "rss/dataset.hpp"

namespace rss {

struct ClusterConfig {
  std::int32_t q = 200;
  int restarts = 10;
  int max_lloyd_iters = 300;
  /// Multiplier for the normalized grid coordinates appended to each feature row.
  double spatial_weight = 0.0;
  std::uint64_t seed = 0;
  /// Restarts run in parallel; the result does not depend on this.
  int threads = 1;

  void validate(Index p) const;
};

/// One row per feature: the standardized column of X (zero for constant
/// columns), followed by spatial_weight * coordinates scaled to [0, 1] when
/// the dataset has geometry and spatial_weight > 0.
Eigen::MatrixXd build_feature_vectors(const Dataset& d, double spatial_weight);

struct KMeansFit {
  Parcellation parcellation;
  double inertia = 0.0;
  int restart = 0;
  /// Within-cluster sum of squares after each Lloyd iteration of the winning restart.
  std::vector<double> inertia_history;
};

/// Lloyd's k-means with k-means++ seeding, empty-cluster repair and restarts;
/// keeps the restart with the lowest within-cluster sum of squares.
KMeansFit kmeans_fit(const Eigen::MatrixXd& features, const ClusterConfig& cfg);

inline Parcellation kmeans(const Eigen::MatrixXd& features, const ClusterConfig& cfg) {
  return kmeans_fit(features, cfg).parcellation;
}

/// Within-cluster sum of squared distances to cluster means.
double within_cluster_ss(const Eigen::MatrixXd& features, const std::vector<std::int32_t>& assignment,
                         std::int32_t q);

}  // namespace rss
