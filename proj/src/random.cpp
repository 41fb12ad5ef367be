#include "lamcmc/random.hpp"

#include <random>

namespace lamcmc {

Vector Stream::standard_normal(std::size_t n) {
  std::normal_distribution<double> normal;
  Vector z(n);
  for (std::size_t i = 0; i < n; ++i) z(i) = normal(*this);
  return z;
}

Stream substream(std::uint64_t seed, std::uint64_t chain, std::uint64_t step, Slot slot,
                 std::uint64_t retry) {
  std::uint64_t key = Stream(seed)();
  for (std::uint64_t part : {chain, step, static_cast<std::uint64_t>(slot), retry})
    key = Stream(key ^ (part * 0xd1b54a32d192ed03ULL))();
  return Stream(key);
}

}  // namespace lamcmc
