#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace rss {

/// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of a child stream; pure function of its arguments.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_id) noexcept;

/// Counter-seeded xoshiro256** stream.
///
/// A stream is a pure function of (master_seed, stream_id): two streams built
/// from the same pair produce the same sequence on every platform, and the
/// floating-point transforms below only use IEEE-exact operations plus
/// std::log/std::sqrt.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) noexcept;
  /// Unbiased integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// Standard normal via the polar method.
  double normal() noexcept;
  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

  void fill_bytes(std::span<std::uint8_t> out) noexcept;

  /// Sorted sample of k distinct values from [0, n) (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  template <typename T>
  void shuffle(std::vector<T>& v) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> s_{};
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Stream k of a run seeded with master_seed.
inline RngStream derive_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
  return RngStream(master_seed, stream_id);
}

}  // namespace rss
