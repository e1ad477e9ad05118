#include "doctest.h"
#include "oracles.hpp"

#include "vica/encoders.hpp"

using namespace vica;
using nx::Index;
using nx::Shape;
using nx::Tensor;

namespace {

Tensor random_frames(Index n, Index size, std::uint64_t seed) {
  nx::Rng rng(seed);
  return nx::uniform_tensor({n, size, size, 3}, 0.0, 1.0, rng);
}

} // namespace

TEST_CASE("flat encoder shapes") {
  const enc::FlatEncoder flat(enc::FlatEncoderConfig{});
  nx::ParamStore store;
  nx::Rng rng(1);
  flat.init_params(store, rng);
  const Index d = flat.config().embed_dim();

  const Tensor out = flat.encode(store, random_frames(2, 56, 3));
  CHECK(out.shape() == Shape{2, 14, 14, d});
  CHECK(flat.encode(store, Tensor({0, 56, 56, 3})).shape() == Shape{0, 14, 14, d});
  CHECK(oracle::error_of([&] { flat.encode(store, random_frames(1, 60, 3)); }) ==
        ErrorCode::kGeometry);
}

TEST_CASE("full-scale dry runs allocate nothing") {
  enc::FlatEncoderConfig fc;
  fc.geometry = budget::EncoderGeometry::full_scale_flat();
  const enc::FlatEncoder flat(fc);
  const Shape s = flat.output_shape(64);
  CHECK(s == Shape{64, 27, 27, fc.embed_dim()});

  enc::HierEncoderConfig hc;
  hc.geometry = budget::EncoderGeometry::full_scale_hier();
  const enc::HierEncoder hier(hc);
  CHECK(hier.output_shape(32, 4) == Shape{32, 32, 32, hc.stage_channels(4)});
  CHECK(hier.output_shape(32, 1) == Shape{32, 256, 256, hc.stage_channels(1)});
}

TEST_CASE("hierarchical encoder stage taps") {
  const enc::HierEncoder hier(enc::HierEncoderConfig{});
  nx::ParamStore store;
  nx::Rng rng(2);
  hier.init_params(store, rng);
  const Tensor frames = random_frames(2, 64, 4);
  CHECK(hier.encode(store, frames, 4).dim(1) == 2);
  CHECK(hier.encode(store, frames, 1).dim(1) == 16);
  CHECK(oracle::error_of([&] { hier.encode(store, frames, 5); }) == ErrorCode::kInvalidStage);
  CHECK(oracle::error_of([&] { hier.encode(store, frames, 0); }) == ErrorCode::kInvalidStage);
  CHECK(oracle::error_of([&] { hier.encode(store, random_frames(1, 32, 4), 1); }) ==
        ErrorCode::kGeometry);
}

TEST_CASE("hierarchical grids agree with the planner on every stage") {
  const auto geom = budget::EncoderGeometry::toy_hier();
  enc::HierEncoderConfig hc;
  hc.geometry = geom;
  const enc::HierEncoder hier(hc);
  nx::ParamStore store;
  nx::Rng rng(3);
  hier.init_params(store, rng);
  const Tensor frames = random_frames(1, geom.input_size, 5);
  Index prev = 0;
  for (int s = 1; s <= geom.stage_count(); ++s) {
    const Tensor out = hier.encode(store, frames, s);
    CHECK(out.dim(1) == budget::grid_side(geom, s));
    CHECK(out.dim(2) == budget::grid_side(geom, s));
    CHECK(out.dim(3) == hc.stage_channels(s));
    CHECK(hier.output_shape(1, s) == out.shape());
    if (s > 1) CHECK(out.dim(1) == prev / geom.stage_strides[static_cast<std::size_t>(s - 1)]);
    prev = out.dim(1);
  }

  // An odd geometry exercises floor semantics.
  budget::EncoderGeometry odd{44, 2, {1, 2, 2}, {4, 6, 8}};
  hc.geometry = odd;
  const enc::HierEncoder odd_enc(hc);
  nx::ParamStore odd_store;
  odd_enc.init_params(odd_store, rng);
  for (int s = 1; s <= 3; ++s) {
    CHECK(odd_enc.encode(odd_store, random_frames(1, 44, 6), s).dim(1) ==
          budget::grid_side(odd, s));
  }
}

TEST_CASE("encoders are deterministic") {
  const enc::FlatEncoder flat(enc::FlatEncoderConfig{});
  const enc::HierEncoder hier(enc::HierEncoderConfig{});
  nx::ParamStore a, b;
  nx::Rng ra(9), rb(9);
  flat.init_params(a, ra);
  hier.init_params(a, ra);
  flat.init_params(b, rb);
  hier.init_params(b, rb);
  CHECK(a == b);
  const Tensor f56 = random_frames(2, 56, 10);
  const Tensor f64 = random_frames(2, 64, 10);
  CHECK(flat.encode(a, f56) == flat.encode(b, f56));
  CHECK(hier.encode(a, f64, 3) == hier.encode(b, f64, 3));
}

TEST_CASE("preprocessing") {
  nx::Rng rng(11);
  const Tensor frame = nx::uniform_tensor({20, 30, 3}, 0.0, 1.0, rng);
  const Tensor std_frame = enc::preprocess_frame(frame, 16, true);
  CHECK(std_frame.shape() == Shape{16, 16, 3});
  const nx::Matrix m = std_frame.matrix();
  for (Index c = 0; c < 3; ++c) {
    const double mean = m.col(c).mean();
    CHECK(std::abs(mean) < 1e-12);
    // Standardization divides by sqrt(var + 1e-6).
    const nx::Matrix raw = nx::bilinear_resize(frame, 16, 16).matrix();
    const double var = (raw.col(c).array() - raw.col(c).mean()).square().mean();
    CHECK(std::abs((m.col(c).array() - mean).square().mean() - var / (var + 1e-6)) < 1e-12);
  }
  const Tensor ones = enc::preprocess_frame(Tensor::filled({8, 8, 3}, 1.0), 8, false);
  for (Index i = 0; i < ones.size(); ++i) CHECK(ones.data()[i] == 1.0);
  const Tensor zeros = enc::preprocess_frame(Tensor({8, 8, 3}), 4, false);
  for (Index i = 0; i < zeros.size(); ++i) CHECK(zeros.data()[i] == -1.0);
}

TEST_CASE("invalid hierarchical widths") {
  enc::HierEncoderConfig hc;
  hc.geometry.channels_per_stage = {8, 8, 16, 32};
  CHECK(oracle::error_of([&] { hc.validate(); }) == ErrorCode::kGeometry);
  hc.geometry.channels_per_stage = {8, 16};
  CHECK(oracle::error_of([&] { hc.validate(); }) == ErrorCode::kGeometry);
}
