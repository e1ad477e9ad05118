#pragma once

#include "vica/numerics/tensor.hpp"

#include <cstdint>
#include <random>

namespace vica::nx {

// Seeded generator with platform-independent draws (the standard
// distributions are implementation-defined, the engine is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Box-Muller.
  double normal();
  // Uniform integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi);

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Glorot/Xavier uniform: U(-a, a), a = sqrt(6 / (fan_in + fan_out)), for a
// (fan_in, fan_out) weight.
Tensor xavier_init(const Shape& shape, std::uint64_t seed);
Tensor xavier_init(const Shape& shape, Rng& rng);

Tensor uniform_tensor(const Shape& shape, double lo, double hi, Rng& rng);
Tensor normal_tensor(const Shape& shape, double stddev, Rng& rng);

} // namespace vica::nx
