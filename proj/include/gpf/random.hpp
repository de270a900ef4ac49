#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace gpf {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
// The output is a pure function of (key, counter), so any sample can be
// regenerated from its index alone.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
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

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

// Stream of random numbers keyed by (seed, index). Two instances with the
// same key produce identical sequences regardless of construction order or
// thread.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t index)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        index_(index) {}

  std::uint64_t next_u64() {
    if (used_ == 2) refill();
    const std::uint64_t out =
        (std::uint64_t{block_[2 * used_ + 1]} << 32) | std::uint64_t{block_[2 * used_]};
    ++used_;
    return out;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; one of the pair is discarded so that the
  // stream position does not depend on call history.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  void refill() {
    block_ = Philox4x32::generate({static_cast<std::uint32_t>(index_),
                                   static_cast<std::uint32_t>(index_ >> 32),
                                   static_cast<std::uint32_t>(block_index_),
                                   static_cast<std::uint32_t>(block_index_ >> 32)},
                                  key_);
    ++block_index_;
    used_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t index_;
  std::uint64_t block_index_ = 0;
  Philox4x32::Counter block_{};
  int used_ = 2;
};

}  // namespace gpf
