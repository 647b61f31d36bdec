#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rss {

/// Sample matrices are row-major: row subsampling is the hot path.
template <typename Scalar>
using RowMatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrix = RowMatrixT<double>;
using Labels = Eigen::VectorXi;
using Index = Eigen::Index;

struct Coord {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;
  friend bool operator==(const Coord&, const Coord&) = default;
};

using GridDims = std::array<std::int32_t, 3>;

/// Voxel grid layout: mask[j] is the grid coordinate of feature column j.
class GridGeometry {
 public:
  GridGeometry(GridDims dims, std::vector<Coord> mask);

  const GridDims& dims() const noexcept { return dims_; }
  const std::vector<Coord>& mask() const noexcept { return mask_; }
  std::size_t size() const noexcept { return mask_.size(); }
  std::int64_t volume() const noexcept {
    return std::int64_t{dims_[0]} * dims_[1] * dims_[2];
  }

  std::int64_t linear(const Coord& c) const noexcept {
    return c.x + std::int64_t{dims_[0]} * (c.y + std::int64_t{dims_[1]} * c.z);
  }
  bool in_grid(const Coord& c) const noexcept {
    return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < dims_[0] && c.y < dims_[1] &&
           c.z < dims_[2];
  }
  /// Feature index at c, or -1 when c is outside the mask.
  std::int32_t feature_at(const Coord& c) const noexcept {
    return in_grid(c) ? lookup_[static_cast<std::size_t>(linear(c))] : -1;
  }

  friend bool operator==(const GridGeometry& a, const GridGeometry& b) {
    return a.dims_ == b.dims_ && a.mask_ == b.mask_;
  }

 private:
  GridDims dims_;
  std::vector<Coord> mask_;
  std::vector<std::int32_t> lookup_;
};

/// n samples x p features with labels in {+1, -1}.
class Dataset {
 public:
  Dataset(RowMatrix X, Labels y, std::optional<GridGeometry> geometry = std::nullopt);

  Index n() const noexcept { return X_.rows(); }
  Index p() const noexcept { return X_.cols(); }
  const RowMatrix& X() const noexcept { return X_; }
  const Labels& y() const noexcept { return y_; }
  const std::optional<GridGeometry>& geometry() const noexcept { return geometry_; }

  Index count_label(int label) const noexcept { return (y_.array() == label).count(); }

  /// Same features, rows restricted to the given indices (in order).
  Dataset rows(std::span<const std::size_t> idx) const;
  /// Same X and geometry with replacement labels.
  Dataset with_labels(Labels y) const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.X_ == b.X_ && a.y_ == b.y_ && a.geometry_ == b.geometry_;
  }

 private:
  RowMatrix X_;
  Labels y_;
  std::optional<GridGeometry> geometry_;
};

/// Exact partition of p features into q non-empty clusters.
class Parcellation {
 public:
  Parcellation(std::vector<std::int32_t> assignment, std::int32_t q);

  std::int32_t q() const noexcept { return q_; }
  std::size_t p() const noexcept { return assignment_.size(); }
  const std::vector<std::int32_t>& assignment() const noexcept { return assignment_; }
  std::int32_t operator[](std::size_t j) const noexcept { return assignment_[j]; }
  /// Member features of each cluster in ascending order.
  const std::vector<std::vector<std::int32_t>>& members() const noexcept { return members_; }

  /// FNV-1a over the assignment; recorded in run metadata.
  std::uint64_t checksum() const noexcept;

  friend bool operator==(const Parcellation& a, const Parcellation& b) {
    return a.q_ == b.q_ && a.assignment_ == b.assignment_;
  }

 private:
  std::vector<std::int32_t> assignment_;
  std::int32_t q_;
  std::vector<std::vector<std::int32_t>> members_;
};

/// Per-feature selection counts over K resamplings.
struct StabilityScores {
  std::vector<std::int64_t> counts;
  std::int64_t K = 0;

  std::vector<double> normalized() const;
  void validate() const;
};

}  // namespace rss
