#pragma once

// Toy stand-ins for the two vision towers. The flat encoder is a patch
// embedding followed by pre-norm attention blocks; the hierarchical encoder is
// a strided-convolution ladder whose stage k grid always equals
// budget::grid_side(geometry, k).

#include "vica/budget.hpp"
#include "vica/numerics.hpp"

#include <string>

namespace vica::enc {

using nx::Index;
using nx::Matrix;
using nx::Shape;
using nx::Tensor;

struct FlatEncoderConfig {
  budget::EncoderGeometry geometry = budget::EncoderGeometry::toy_flat();
  Index in_channels = 3;
  int depth = 2;
  int heads = 2;
  Index mlp_ratio = 2;

  Index embed_dim() const;
  Index grid() const;
};

struct HierEncoderConfig {
  budget::EncoderGeometry geometry = budget::EncoderGeometry::toy_hier();
  Index in_channels = 3;

  Index stage_channels(int stage) const;
  void validate() const;
};

class FlatEncoder {
 public:
  static constexpr const char* kPrefix = "flat_encoder";

  explicit FlatEncoder(FlatEncoderConfig cfg);

  const FlatEncoderConfig& config() const { return cfg_; }
  void init_params(nx::ParamStore& store, nx::Rng& rng) const;

  // One frame as (H*W) x C pixels -> (g*g) x D tokens.
  ag::Var forward_frame(ag::ParamBinder& params, const Matrix& frame) const;

  // (N, H, W, C) -> (N, g, g, D).
  Tensor encode(const nx::ParamStore& store, const Tensor& frames) const;

  // Shape-only dry run; allocates no weights.
  Shape output_shape(Index n_frames) const;

 private:
  FlatEncoderConfig cfg_;
};

class HierEncoder {
 public:
  static constexpr const char* kPrefix = "hiera_encoder";

  explicit HierEncoder(HierEncoderConfig cfg);

  const HierEncoderConfig& config() const { return cfg_; }
  void init_params(nx::ParamStore& store, nx::Rng& rng) const;

  // One frame -> stage tap as (g_s*g_s) x C_s tokens; `grid_out` gets g_s.
  ag::Var forward_frame(ag::ParamBinder& params, const Matrix& frame, int stage,
                        Index* grid_out = nullptr) const;

  // (N, H, W, C) -> (N, g_s, g_s, C_s).
  Tensor encode(const nx::ParamStore& store, const Tensor& frames, int stage) const;

  Shape output_shape(Index n_frames, int stage) const;

 private:
  void check_stage(int stage) const;

  HierEncoderConfig cfg_;
};

// Rescales an (H, W, C) frame to size x size. With `standardize`, each channel
// is shifted/scaled to zero mean and unit variance; otherwise values map
// [0, 1] -> [-1, 1].
Tensor preprocess_frame(const Tensor& frame, Index size, bool standardize);

} // namespace vica::enc
