#pragma once

// Counter-based random streams (Philox4x32-10).
//
// A stream is addressed by (seed, stream id, substream) and is a pure function
// of that address, so trial t always sees the same draws no matter which
// thread runs it or in what order.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace rotarclt {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Named stream lanes. Index draws and summand draws never share a lane.
enum class StreamLane : std::uint32_t { kIndex = 1, kSummands = 2, kAux = 3 };

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamLane lane, std::uint64_t substream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        substream_(substream),
        lane_(static_cast<std::uint32_t>(lane)) {}

  std::uint64_t next_u64() {
    if (buffered_ == 0) refill();
    --buffered_;
    return buffer_[buffered_];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_positive() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  bool bit() {
    if (bits_left_ == 0) {
      bits_ = next_u64();
      bits_left_ = 64;
    }
    const bool b = bits_ & 1u;
    bits_ >>= 1;
    --bits_left_;
    return b;
  }

  /// Sum of `count` independent Rademacher signs.
  std::int64_t rademacher_sum(std::uint64_t count) {
    const auto total = static_cast<std::int64_t>(count);
    std::int64_t ones = 0;
    for (; count >= 64; count -= 64) ones += std::popcount(next_u64());
    for (; count > 0; --count) ones += bit() ? 1 : 0;
    return 2 * ones - total;
  }

  /// Box-Muller; the second variate of each pair is kept for the next call.
  double standard_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform_positive()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  void refill() {
    const auto out = Philox4x32::block(
        {static_cast<std::uint32_t>(substream_), static_cast<std::uint32_t>(substream_ >> 32), lane_,
         block_++},
        key_);
    buffer_[1] = (std::uint64_t{out[0]} << 32) | out[1];
    buffer_[0] = (std::uint64_t{out[2]} << 32) | out[3];
    buffered_ = 2;
  }

  Philox4x32::Key key_;
  std::uint64_t substream_;
  std::uint32_t lane_;
  std::uint32_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  std::uint64_t bits_ = 0;
  int bits_left_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rotarclt
