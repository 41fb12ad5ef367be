#pragma once

#include "lamcmc/types.hpp"

#include <cstdint>
#include <limits>

namespace lamcmc {

/// Purposes for which a transition consumes randomness. Each purpose gets
/// its own substream so that, for example, refinement retries never touch
/// the accept/reject uniform.
enum class Slot : std::uint64_t {
  proposal = 0,
  refine_coin = 1,
  location_coin = 2,
  accept = 3,
  maximin = 4,
  initialization = 5,
};

/// SplitMix64 sequence started from a hashed (seed, chain, step, slot, retry)
/// key. Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Vector of i.i.d. standard normals.
  Vector standard_normal(std::size_t n);

 private:
  std::uint64_t state_;
};

/// Deterministic substream for one purpose within one step of one chain.
Stream substream(std::uint64_t seed, std::uint64_t chain, std::uint64_t step, Slot slot,
                 std::uint64_t retry = 0);

}  // namespace lamcmc
