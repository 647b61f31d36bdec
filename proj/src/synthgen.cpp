#include "rss/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rss/error.hpp"
#include "rss/rng.hpp"

namespace rss {

namespace {

constexpr std::int64_t kMaxRejections = 1'000'000;

// Relative positions of the planted regions (frontal, parietal, occipital and
// two subcortical spots), as fractions of each grid axis.
constexpr std::array<std::array<double, 3>, 5> kRegionCentres{{
    {0.65, 0.72, 0.55},
    {0.35, 0.40, 0.70},
    {0.50, 0.25, 0.50},
    {0.38, 0.55, 0.38},
    {0.64, 0.52, 0.34},
}};

std::array<std::int32_t, 3> box_shape(std::int64_t size, const GridDims& dims) {
  auto a = static_cast<std::int64_t>(std::ceil(std::cbrt(static_cast<double>(size)) - 1e-9));
  for (;; ++a) {
    const auto bx = std::min<std::int64_t>(a, dims[0]);
    const auto by = std::min<std::int64_t>(a, dims[1]);
    const auto bz = (size + bx * by - 1) / (bx * by);
    if (bz <= dims[2]) {
      if (size < bx * by) {
        return {static_cast<std::int32_t>(bx), static_cast<std::int32_t>((size + bx - 1) / bx), 1};
      }
      return {static_cast<std::int32_t>(bx), static_cast<std::int32_t>(by), static_cast<std::int32_t>(bz)};
    }
    if (bx == dims[0] && by == dims[1]) throw Error("cluster placement: cluster cannot fit in the grid");
  }
}

}  // namespace

void SynthConfig::validate() const {
  for (auto d : dims) {
    if (d < 1) throw Error("synth: grid dimensions must be positive");
  }
  const std::int64_t volume = std::int64_t{dims[0]} * dims[1] * dims[2];
  if (mask_size < 1 || mask_size > volume) throw Error("synth: mask size must lie in [1, grid volume]");
  if (n_per_group < 1) throw Error("synth: n_per_group must be positive");
  std::int64_t total = 0;
  for (auto s : cluster_sizes) {
    if (s < 1) throw Error("synth: cluster sizes must be positive");
    total += s;
  }
  if (total > mask_size) throw Error("synth: clusters do not fit inside the mask");
  if (cluster_sizes[2] != cluster_sizes[3] || cluster_sizes[3] != cluster_sizes[4]) {
    throw Error("synth: clusters 3-5 must have equal sizes");
  }
  if (!(noise_sd > 0)) throw Error("synth: noise_sd must be positive");
}

std::vector<Coord> ellipsoid_mask(const GridDims& dims, std::int64_t mask_size) {
  struct Cell {
    double dist;
    std::int64_t linear;
    Coord c;
  };
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(std::int64_t{dims[0]} * dims[1] * dims[2]));
  for (std::int32_t z = 0; z < dims[2]; ++z) {
    for (std::int32_t y = 0; y < dims[1]; ++y) {
      for (std::int32_t x = 0; x < dims[0]; ++x) {
        const double u = (x - 0.5 * (dims[0] - 1)) / (0.5 * dims[0]);
        const double v = (y - 0.5 * (dims[1] - 1)) / (0.5 * dims[1]);
        const double w = (z - 0.5 * (dims[2] - 1)) / (0.5 * dims[2]);
        const auto linear = x + std::int64_t{dims[0]} * (y + std::int64_t{dims[1]} * z);
        cells.push_back({u * u + v * v + w * w, linear, Coord{x, y, z}});
      }
    }
  }
  if (mask_size < 1 || mask_size > static_cast<std::int64_t>(cells.size())) {
    throw Error("ellipsoid mask: mask size must lie in [1, grid volume]");
  }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.linear < b.linear;
  });
  cells.resize(static_cast<std::size_t>(mask_size));
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.linear < b.linear; });
  std::vector<Coord> mask;
  mask.reserve(cells.size());
  for (const auto& c : cells) mask.push_back(c.c);
  return mask;
}

std::array<std::vector<Coord>, 5> default_cluster_placement(const GridGeometry& geometry,
                                                            const std::array<std::int64_t, 5>& sizes,
                                                            std::uint64_t seed) {
  const auto& dims = geometry.dims();
  std::vector<char> used(static_cast<std::size_t>(geometry.volume()), 0);
  std::array<std::vector<Coord>, 5> placed;

  for (std::size_t k = 0; k < 5; ++k) {
    if (sizes[k] < 1) throw Error("cluster placement: sizes must be positive");
    const auto shape = box_shape(sizes[k], dims);
    // Box voxels in raster order, truncated to the cluster size.
    std::vector<Coord> offsets;
    for (std::int32_t z = 0; z < shape[2]; ++z) {
      for (std::int32_t y = 0; y < shape[1]; ++y) {
        for (std::int32_t x = 0; x < shape[0]; ++x) {
          if (static_cast<std::int64_t>(offsets.size()) < sizes[k]) offsets.push_back({x, y, z});
        }
      }
    }

    auto rng = derive_stream(seed, 1000 + k);
    std::array<double, 3> target{};
    for (int a = 0; a < 3; ++a) {
      target[static_cast<std::size_t>(a)] = kRegionCentres[k][static_cast<std::size_t>(a)] * (dims[static_cast<std::size_t>(a)] - 1) -
                  0.5 * (shape[static_cast<std::size_t>(a)] - 1) + rng.uniform(-1.0, 1.0);
    }

    // Candidate anchors ordered by distance to the jittered target.
    struct Anchor {
      double dist;
      std::int64_t linear;
      Coord c;
    };
    std::vector<Anchor> anchors;
    for (std::int32_t z = 0; z + shape[2] <= dims[2]; ++z) {
      for (std::int32_t y = 0; y + shape[1] <= dims[1]; ++y) {
        for (std::int32_t x = 0; x + shape[0] <= dims[0]; ++x) {
          const double dx = x - target[0], dy = y - target[1], dz = z - target[2];
          anchors.push_back({dx * dx + dy * dy + dz * dz, geometry.linear({x, y, z}), {x, y, z}});
        }
      }
    }
    std::sort(anchors.begin(), anchors.end(), [](const Anchor& a, const Anchor& b) {
      return a.dist != b.dist ? a.dist < b.dist : a.linear < b.linear;
    });

    bool ok = false;
    for (const auto& anchor : anchors) {
      const bool fits = std::all_of(offsets.begin(), offsets.end(), [&](const Coord& o) {
        const Coord c{anchor.c.x + o.x, anchor.c.y + o.y, anchor.c.z + o.z};
        return geometry.feature_at(c) >= 0 && !used[static_cast<std::size_t>(geometry.linear(c))];
      });
      if (!fits) continue;
      for (const auto& o : offsets) {
        const Coord c{anchor.c.x + o.x, anchor.c.y + o.y, anchor.c.z + o.z};
        used[static_cast<std::size_t>(geometry.linear(c))] = 1;
        placed[k].push_back(c);
      }
      ok = true;
      break;
    }
    if (!ok) throw Error("cluster placement: cannot fit cluster " + std::to_string(k + 1));
  }
  return placed;
}

SyntheticData generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  GridGeometry geometry(cfg.dims, ellipsoid_mask(cfg.dims, cfg.mask_size));
  const auto placement = default_cluster_placement(geometry, cfg.cluster_sizes, cfg.seed);

  const auto p = static_cast<Index>(geometry.size());
  GroundTruth truth;
  truth.cluster_of.assign(static_cast<std::size_t>(p), 0);
  for (std::size_t k = 0; k < 5; ++k) {
    for (const auto& c : placement[k]) {
      const auto f = geometry.feature_at(c);
      truth.clusters[k].push_back(f);
      truth.cluster_of[static_cast<std::size_t>(f)] = static_cast<std::int32_t>(k + 1);
      truth.discriminative.push_back(f);
    }
  }
  std::sort(truth.discriminative.begin(), truth.discriminative.end());

  const Index n = 2 * cfg.n_per_group;
  RowMatrix X(n, p);
  Labels y(n);
  const double sd = cfg.noise_sd;
  const double thr = cfg.constraint_threshold;
  const auto triples = static_cast<std::size_t>(cfg.cluster_sizes[2]);

  for (Index i = 0; i < n; ++i) {
    const bool is_case = i < cfg.n_per_group;
    y[i] = is_case ? 1 : -1;
    auto rng = derive_stream(cfg.seed, static_cast<std::uint64_t>(i));
    auto row = X.row(i);
    for (Index j = 0; j < p; ++j) row[j] = rng.normal(0.0, sd);
    if (is_case) {
      for (std::size_t k = 0; k < 2; ++k) {
        for (auto f : truth.clusters[k]) row[f] += static_cast<double>(k + 1);
      }
    }
    for (std::size_t t = 0; t < triples; ++t) {
      std::array<double, 3> v{};
      std::int64_t attempts = 0;
      for (;;) {
        if (++attempts > kMaxRejections) {
          throw Error("synth: rejection sampling exceeded 1e6 attempts for a constrained triple");
        }
        for (auto& e : v) e = rng.normal(0.0, sd);
        const double sum = v[0] + v[1] + v[2];
        if (is_case ? sum > thr : sum < thr) break;
      }
      for (std::size_t k = 0; k < 3; ++k) row[truth.clusters[2 + k][t]] = v[k];
    }
  }
  return SyntheticData{Dataset(std::move(X), std::move(y), std::move(geometry)), std::move(truth)};
}

}  // namespace rss
