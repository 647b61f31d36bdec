#include "rss/dataset.hpp"

#include <cmath>
#include <string>

#include "rss/error.hpp"

namespace rss {

GridGeometry::GridGeometry(GridDims dims, std::vector<Coord> mask)
    : dims_(dims), mask_(std::move(mask)) {
  for (auto d : dims_) {
    if (d < 1) throw Error("grid geometry: dimensions must be positive");
  }
  lookup_.assign(static_cast<std::size_t>(volume()), -1);
  for (std::size_t j = 0; j < mask_.size(); ++j) {
    const auto& c = mask_[j];
    if (!in_grid(c)) throw Error("grid geometry: mask coordinate outside grid");
    auto& slot = lookup_[static_cast<std::size_t>(linear(c))];
    if (slot != -1) throw Error("grid geometry: duplicate mask coordinate");
    slot = static_cast<std::int32_t>(j);
  }
}

Dataset::Dataset(RowMatrix X, Labels y, std::optional<GridGeometry> geometry)
    : X_(std::move(X)), y_(std::move(y)), geometry_(std::move(geometry)) {
  if (y_.size() != X_.rows()) throw Error("dataset: dimension mismatch between X and labels");
  for (Index i = 0; i < y_.size(); ++i) {
    if (y_[i] != 1 && y_[i] != -1) throw Error("dataset: label domain violated (labels must be +1/-1)");
  }
  if (!X_.allFinite()) throw Error("dataset: X contains NaN or Inf");
  if (geometry_ && static_cast<Index>(geometry_->size()) != X_.cols()) {
    throw Error("dataset: geometry mask size does not match feature count");
  }
}

Dataset Dataset::rows(std::span<const std::size_t> idx) const {
  RowMatrix Xs(static_cast<Index>(idx.size()), p());
  Labels ys(static_cast<Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    Xs.row(static_cast<Index>(r)) = X_.row(static_cast<Index>(idx[r]));
    ys[static_cast<Index>(r)] = y_[static_cast<Index>(idx[r])];
  }
  return Dataset(std::move(Xs), std::move(ys), geometry_);
}

Dataset Dataset::with_labels(Labels y) const { return Dataset(X_, std::move(y), geometry_); }

Parcellation::Parcellation(std::vector<std::int32_t> assignment, std::int32_t q)
    : assignment_(std::move(assignment)), q_(q) {
  if (q_ < 1) throw Error("parcellation: q must be positive");
  members_.resize(static_cast<std::size_t>(q_));
  for (std::size_t j = 0; j < assignment_.size(); ++j) {
    const auto g = assignment_[j];
    if (g < 0 || g >= q_) {
      throw Error("parcellation: cluster id " + std::to_string(g) + " out of range");
    }
    members_[static_cast<std::size_t>(g)].push_back(static_cast<std::int32_t>(j));
  }
  for (std::int32_t g = 0; g < q_; ++g) {
    if (members_[static_cast<std::size_t>(g)].empty()) {
      throw Error("parcellation: cluster " + std::to_string(g) + " is empty");
    }
  }
}

std::uint64_t Parcellation::checksum() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint32_t v) {
    for (int b = 0; b < 4; ++b) {
      h ^= (v >> (8 * b)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  feed(static_cast<std::uint32_t>(q_));
  for (auto g : assignment_) feed(static_cast<std::uint32_t>(g));
  return h;
}

std::vector<double> StabilityScores::normalized() const {
  std::vector<double> out(counts.size(), 0.0);
  if (K <= 0) return out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = static_cast<double>(counts[i]) / static_cast<double>(K);
  }
  return out;
}

void StabilityScores::validate() const {
  if (K < 1) throw Error("stability scores: K must be positive");
  for (auto c : counts) {
    if (c < 0 || c > K) throw Error("stability scores: count outside [0, K]");
  }
}

}  // namespace rss
