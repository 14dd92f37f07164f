#pragma once

// Counter-based random streams. Every replicate of an experiment owns a
// stream keyed by a hash of (master_seed, cell_index, replicate_index), so
// results do not depend on how replicates are scheduled across threads.

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace probitlr {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer; used to spread seeds before they become Philox keys.
std::uint64_t splitmix64(std::uint64_t x);

/// Stream seed for one replicate:
///   splitmix64(splitmix64(splitmix64(master) ^ cell) ^ replicate)
std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t cell_index,
                                 std::uint64_t replicate_index);

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint32_t next_u32();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_low();
  /// Standard normal via Box-Muller; both outputs of a pair are used in order.
  double normal();
  /// +1 or -1 with probability 1/2 each.
  double rademacher();

  Eigen::VectorXd normal_vector(Eigen::Index dim);

 private:
  void refill();

  std::uint64_t seed_;
  std::array<std::uint32_t, 2> key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace probitlr
