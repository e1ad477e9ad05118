#include "vica/encoders.hpp"

#include "vica/error.hpp"

#include <cmath>

namespace vica::enc {
namespace {

std::string join(const std::string& a, const std::string& b) { return a + "." + b; }

void add_linear(nx::ParamStore& store, const std::string& name, Index in, Index out,
                nx::Rng& rng) {
  store.add(join(name, "weight"), nx::xavier_init({in, out}, rng));
  store.add(join(name, "bias"), Tensor({out}));
}

void add_norm(nx::ParamStore& store, const std::string& name, Index width) {
  store.add(join(name, "gamma"), Tensor::filled({width}, 1.0));
  store.add(join(name, "beta"), Tensor({width}));
}

ag::Var apply_linear(ag::ParamBinder& p, const std::string& name, const ag::Var& x) {
  return ag::linear(x, p(join(name, "weight")), p(join(name, "bias")));
}

ag::Var apply_norm(ag::ParamBinder& p, const std::string& name, const ag::Var& x) {
  return ag::layer_norm(x, p(join(name, "gamma")), p(join(name, "beta")));
}

void check_frames(const Tensor& frames, Index size, Index channels) {
  if (frames.rank() != 4 || frames.dim(1) != size || frames.dim(2) != size ||
      frames.dim(3) != channels) {
    throw Error(ErrorCode::kGeometry,
                "expected frames (N, " + std::to_string(size) + ", " +
                    std::to_string(size) + ", " + std::to_string(channels) + "), got " +
                    nx::shape_string(frames.shape()));
  }
}

} // namespace

Index FlatEncoderConfig::embed_dim() const {
  if (geometry.channels_per_stage.empty()) {
    throw Error(ErrorCode::kGeometry, "flat geometry needs an embedding width");
  }
  return geometry.channels_per_stage.back();
}

Index FlatEncoderConfig::grid() const {
  return budget::grid_side(geometry, geometry.stage_count());
}

Index HierEncoderConfig::stage_channels(int stage) const {
  return geometry.channels_per_stage.at(static_cast<std::size_t>(stage - 1));
}

void HierEncoderConfig::validate() const {
  geometry.validate();
  if (geometry.channels_per_stage.size() != geometry.stage_strides.size()) {
    throw Error(ErrorCode::kGeometry, "one channel width per hierarchical stage required");
  }
  for (std::size_t k = 1; k < geometry.channels_per_stage.size(); ++k) {
    if (geometry.channels_per_stage[k] <= geometry.channels_per_stage[k - 1]) {
      throw Error(ErrorCode::kGeometry, "stage widths must strictly increase");
    }
  }
}

// ---- flat ------------------------------------------------------------------

FlatEncoder::FlatEncoder(FlatEncoderConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.geometry.validate();
  if (cfg_.geometry.stage_count() != 1 || cfg_.geometry.stage_strides[0] != 1) {
    throw Error(ErrorCode::kGeometry, "flat encoder has exactly one stride-1 stage");
  }
  if (cfg_.embed_dim() % cfg_.heads != 0) {
    throw Error(ErrorCode::kGeometry, "embedding width not divisible by head count");
  }
}

void FlatEncoder::init_params(nx::ParamStore& store, nx::Rng& rng) const {
  const std::string root = kPrefix;
  const Index p = cfg_.geometry.patch_or_stem_stride;
  const Index d = cfg_.embed_dim();
  const Index g = cfg_.grid();
  add_linear(store, join(root, "patch"), p * p * cfg_.in_channels, d, rng);
  store.add(join(root, "pos_embed"), nx::normal_tensor({g * g, d}, 0.02, rng));
  for (int b = 0; b < cfg_.depth; ++b) {
    const std::string blk = join(root, "blocks." + std::to_string(b));
    add_norm(store, join(blk, "ln1"), d);
    for (const char* n : {"attn.q", "attn.k", "attn.v", "attn.o"}) {
      add_linear(store, join(blk, n), d, d, rng);
    }
    add_norm(store, join(blk, "ln2"), d);
    add_linear(store, join(blk, "mlp.fc1"), d, cfg_.mlp_ratio * d, rng);
    add_linear(store, join(blk, "mlp.fc2"), cfg_.mlp_ratio * d, d, rng);
  }
  add_norm(store, join(root, "ln_f"), d);
}

ag::Var FlatEncoder::forward_frame(ag::ParamBinder& params, const Matrix& frame) const {
  const std::string root = kPrefix;
  const Index size = cfg_.geometry.input_size;
  if (frame.rows() != size * size || frame.cols() != cfg_.in_channels) {
    throw Error(ErrorCode::kGeometry, "flat encoder frame has wrong pixel count");
  }
  ag::Tape& tape = params(join(root, "pos_embed")).tape();
  ag::Var x = ag::patchify(tape.constant(frame), size, size,
                           cfg_.geometry.patch_or_stem_stride);
  x = apply_linear(params, join(root, "patch"), x);
  x = ag::add(x, params(join(root, "pos_embed")));
  for (int b = 0; b < cfg_.depth; ++b) {
    const std::string blk = join(root, "blocks." + std::to_string(b));
    ag::Var h = apply_norm(params, join(blk, "ln1"), x);
    ag::Var a = ag::attention(apply_linear(params, join(blk, "attn.q"), h),
                              apply_linear(params, join(blk, "attn.k"), h),
                              apply_linear(params, join(blk, "attn.v"), h), cfg_.heads,
                              /*causal=*/false);
    x = ag::add(x, apply_linear(params, join(blk, "attn.o"), a));
    h = apply_norm(params, join(blk, "ln2"), x);
    h = ag::gelu(apply_linear(params, join(blk, "mlp.fc1"), h));
    x = ag::add(x, apply_linear(params, join(blk, "mlp.fc2"), h));
  }
  return apply_norm(params, join(root, "ln_f"), x);
}

Tensor FlatEncoder::encode(const nx::ParamStore& store, const Tensor& frames) const {
  check_frames(frames, cfg_.geometry.input_size, cfg_.in_channels);
  const Index n = frames.dim(0);
  Tensor out(output_shape(n));
  for (Index i = 0; i < n; ++i) {
    ag::Tape tape(false);
    ag::ParamBinder params(tape, store);
    out.slab(i) = forward_frame(params, frames.slab(i)).value();
  }
  return out;
}

Shape FlatEncoder::output_shape(Index n_frames) const {
  const Index g = cfg_.grid();
  return {n_frames, g, g, cfg_.embed_dim()};
}

// ---- hierarchical ----------------------------------------------------------

HierEncoder::HierEncoder(HierEncoderConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

void HierEncoder::check_stage(int stage) const {
  if (stage < 1 || stage > cfg_.geometry.stage_count()) {
    throw Error(ErrorCode::kInvalidStage,
                "stage " + std::to_string(stage) + " outside 1.." +
                    std::to_string(cfg_.geometry.stage_count()));
  }
}

void HierEncoder::init_params(nx::ParamStore& store, nx::Rng& rng) const {
  const std::string root = kPrefix;
  const Index stem = cfg_.geometry.patch_or_stem_stride;
  add_linear(store, join(root, "stem"), stem * stem * cfg_.in_channels,
             cfg_.stage_channels(1), rng);
  for (int k = 1; k <= cfg_.geometry.stage_count(); ++k) {
    const Index s = cfg_.geometry.stage_strides[static_cast<std::size_t>(k - 1)];
    const Index in = cfg_.stage_channels(k == 1 ? 1 : k - 1);
    add_linear(store, join(root, "stages." + std::to_string(k)), s * s * in,
               cfg_.stage_channels(k), rng);
  }
}

ag::Var HierEncoder::forward_frame(ag::ParamBinder& params, const Matrix& frame, int stage,
                                   Index* grid_out) const {
  check_stage(stage);
  const std::string root = kPrefix;
  const Index size = cfg_.geometry.input_size;
  if (frame.rows() != size * size || frame.cols() != cfg_.in_channels) {
    throw Error(ErrorCode::kGeometry, "hierarchical encoder frame has wrong pixel count");
  }
  ag::Tape& tape = params(join(root, "stem.weight")).tape();
  const Index stem = cfg_.geometry.patch_or_stem_stride;
  ag::Var x = ag::patchify(tape.constant(frame), size, size, stem);
  x = ag::gelu(apply_linear(params, join(root, "stem"), x));
  Index g = size / stem;
  for (int k = 1; k <= stage; ++k) {
    const Index s = cfg_.geometry.stage_strides[static_cast<std::size_t>(k - 1)];
    x = ag::patchify(x, g, g, s);
    g /= s;
    x = ag::gelu(apply_linear(params, join(root, "stages." + std::to_string(k)), x));
  }
  if (grid_out) *grid_out = g;
  return x;
}

Tensor HierEncoder::encode(const nx::ParamStore& store, const Tensor& frames,
                           int stage) const {
  check_stage(stage);
  check_frames(frames, cfg_.geometry.input_size, cfg_.in_channels);
  const Index n = frames.dim(0);
  Tensor out(output_shape(n, stage));
  for (Index i = 0; i < n; ++i) {
    ag::Tape tape(false);
    ag::ParamBinder params(tape, store);
    out.slab(i) = forward_frame(params, frames.slab(i), stage).value();
  }
  return out;
}

Shape HierEncoder::output_shape(Index n_frames, int stage) const {
  check_stage(stage);
  const Index g = budget::grid_side(cfg_.geometry, stage);
  return {n_frames, g, g, cfg_.stage_channels(stage)};
}

Tensor preprocess_frame(const Tensor& frame, Index size, bool standardize) {
  Tensor out = nx::bilinear_resize(frame, size, size);
  auto m = out.matrix();
  if (standardize) {
    for (Index c = 0; c < m.cols(); ++c) {
      const double mean = m.col(c).mean();
      const double var = (m.col(c).array() - mean).square().mean();
      const double inv = 1.0 / std::sqrt(var + 1e-6);
      m.col(c) = ((m.col(c).array() - mean) * inv).matrix();
    }
  } else {
    m = (m.array() * 2.0 - 1.0).matrix();
  }
  return out;
}

} // namespace vica::enc
