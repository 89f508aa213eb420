#pragma once

#include <cmath>
#include <cstdint>

namespace srw {

/// 64-bit finalizer with full avalanche (the SplitMix64 mixing function).
constexpr std::uint64_t avalanche64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Counter-based random stream.
///
/// A stream is a 64-bit key. `fork(i)` derives the i-th child stream and
/// `uniform(c)` / `normal(c)` return the draw at counter position `c`.
/// Every draw is a pure function of (key, counter), so iteration order,
/// thread layout and interleaving cannot change the values. Substreams for
/// (replication, stage, group) are built by chained forks from one seed.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : RngStream(avalanche64(seed ^ kSeedDomain), Raw{}) {}

  /// Child stream with index `index`; children of distinct indices and
  /// distinct parents are statistically independent.
  RngStream fork(std::uint64_t index) const {
    return RngStream(avalanche64(key_ ^ avalanche64(index ^ kForkDomain)), Raw{});
  }

  /// Uniform draw in the open interval (0,1) at counter position `counter`.
  double uniform(std::uint64_t counter) const {
    const std::uint64_t bits = avalanche64(base_ + (counter + 1) * kGamma);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal draw at counter position `counter` (Box-Muller).
  double normal(std::uint64_t counter) const {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  std::uint64_t key() const { return key_; }

 private:
  struct Raw {};
  RngStream(std::uint64_t key, Raw) : key_(key), base_(avalanche64(key ^ kDrawDomain)) {}

  static constexpr std::uint64_t kSeedDomain = 0x5851f42d4c957f2dull;
  static constexpr std::uint64_t kForkDomain = 0x14057b7ef767814full;
  static constexpr std::uint64_t kDrawDomain = 0x27bb2ee687b0b0fdull;
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;
  static constexpr double kTwoPi = 6.283185307179586476925286766559;

  std::uint64_t key_;
  std::uint64_t base_;
};

}  // namespace srw
