#pragma once

#include <array>
#include <cstdint>

namespace fhn {

/// splitmix64 output function; also used to expand seeds.
std::uint64_t splitmix64(std::uint64_t z);

/// xoshiro256++ generator seeded through splitmix64. Standard normals come
/// from the Marsaglia polar method, so a fixed seed reproduces the same
/// stream on any build of this code; bit-exactness across compilers is
/// limited only by the libm functions involved (log, sqrt).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();

  /// Standard normal variate (polar method; pairs are cached).
  double gauss();

 private:
  std::array<std::uint64_t, 4> state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fhn
