#include "vica/numerics/random.hpp"

#include "vica/error.hpp"

#include <cmath>

namespace vica::nx {

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * EIGEN_PI * u2);
}

std::int64_t Rng::integer(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(engine_() % span);
}

Tensor xavier_init(const Shape& shape, Rng& rng) {
  if (shape.size() != 2) {
    throw Error(ErrorCode::kUnsupportedShape,
                "xavier_init needs a 2-D (fan_in, fan_out) shape, got " +
                    shape_string(shape));
  }
  const double a = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
  return uniform_tensor(shape, -a, a, rng);
}

Tensor xavier_init(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  return xavier_init(shape, rng);
}

Tensor uniform_tensor(const Shape& shape, double lo, double hi, Rng& rng) {
  Tensor t(shape);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(lo, hi);
  return t;
}

Tensor normal_tensor(const Shape& shape, double stddev, Rng& rng) {
  Tensor t(shape);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = stddev * rng.normal();
  return t;
}

} // namespace vica::nx
