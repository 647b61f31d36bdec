#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rss/dataset.hpp"

namespace rss {

struct SynthConfig {
  GridDims dims{46, 55, 46};
  std::int64_t mask_size = 27884;
  std::int64_t n_per_group = 50;
  /// Clusters 1-2 carry a mean shift; clusters 3-5 carry the triple-sum
  /// pattern and must have equal sizes.
  std::array<std::int64_t, 5> cluster_sizes{76, 76, 77, 77, 77};
  double noise_sd = 1.0;
  double constraint_threshold = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GroundTruth {
  /// Discriminative features, ascending.
  std::vector<Index> discriminative;
  /// Planted cluster id (1-5) per feature, 0 for background.
  std::vector<std::int32_t> cluster_of;
  /// Member features of each planted cluster in placement order; entry t of
  /// clusters 3, 4 and 5 together form one constrained triple.
  std::array<std::vector<Index>, 5> clusters;
};

struct SyntheticData {
  Dataset data;
  GroundTruth truth;
};

/// The mask_size grid cells closest to the grid centre in ellipsoidal
/// distance (ties by linear index), in linear-index order.
std::vector<Coord> ellipsoid_mask(const GridDims& dims, std::int64_t mask_size);

/// Five disjoint compact boxes inside the mask, truncated to the requested
/// sizes; voxels of each box are listed in raster order.
std::array<std::vector<Coord>, 5> default_cluster_placement(const GridGeometry& geometry,
                                                            const std::array<std::int64_t, 5>& sizes,
                                                            std::uint64_t seed);

/// Case/control data: the first n_per_group samples are cases (+1).
SyntheticData generate_synthetic(const SynthConfig& cfg);

}  // namespace rss
