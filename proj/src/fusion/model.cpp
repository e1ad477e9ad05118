#include "vica/error.hpp"
#include "vica/fusion.hpp"

#include <array>
#include <cmath>

namespace vica::fusion {
namespace {

enc::FlatEncoderConfig flat_config(const ModelConfig& cfg) {
  enc::FlatEncoderConfig f;
  f.geometry = cfg.budget.geom_flat;
  f.in_channels = cfg.in_channels;
  f.depth = cfg.flat_depth;
  f.heads = cfg.flat_heads;
  return f;
}

enc::HierEncoderConfig hier_config(const ModelConfig& cfg) {
  enc::HierEncoderConfig h;
  h.geometry = cfg.budget.geom_hier;
  h.in_channels = cfg.in_channels;
  return h;
}

Tensor frame_at(const Tensor& video, std::int64_t index) {
  if (video.rank() != 4) {
    throw Error(ErrorCode::kGeometry, "video must be (F, H, W, C), got " +
                                          nx::shape_string(video.shape()));
  }
  Tensor f({video.dim(1), video.dim(2), video.dim(3)});
  f.matrix() = video.slab(index);
  return f;
}

} // namespace

std::vector<std::string> prefix::all() {
  return {kDecoder, kFlatEncoder, kFlatProjector, kHieraEncoder, kHieraProjector, kRowTokens};
}

VicaModel::VicaModel(ModelConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      flat_(flat_config(cfg_)),
      hier_(hier_config(cfg_)),
      flat_proj_(prefix::kFlatProjector, flat_.config().embed_dim(), cfg_.hidden_width(),
                 cfg_.decoder.d_model),
      hier_proj_(prefix::kHieraProjector,
                 hier_.config().stage_channels(cfg_.budget.s_stage), cfg_.hidden_width(),
                 cfg_.decoder.d_model),
      decoder_(cfg_.decoder) {
  cfg_.budget.validate();
  if (cfg_.budget.geom_flat.stage_count() != 1) {
    throw Error(ErrorCode::kGeometry, "flat geometry must have one stage");
  }
  // Independent streams per subtree so adding a component never reshuffles
  // another's initial weights.
  nx::Rng root(seed);
  nx::Rng r_flat(root.next()), r_hier(root.next()), r_fp(root.next()), r_hp(root.next()),
      r_row(root.next()), r_dec(root.next());
  flat_.init_params(params_, r_flat);
  hier_.init_params(params_, r_hier);
  flat_proj_.init_params(params_, r_fp);
  hier_proj_.init_params(params_, r_hp);
  params_.add(std::string(prefix::kRowTokens) + ".flat",
              nx::normal_tensor({flat_.config().embed_dim()}, 1.0, r_row));
  params_.add(std::string(prefix::kRowTokens) + ".hiera",
              nx::normal_tensor({hier_.config().stage_channels(cfg_.budget.s_stage)}, 1.0,
                                r_row));
  decoder_.init_params(params_, r_dec);
}

TokenStream VicaModel::flat_stream(ag::ParamBinder& params, const Tensor& video,
                                   const std::vector<std::int64_t>& frames) const {
  const Index size = cfg_.budget.geom_flat.input_size;
  const Index g = flat_.config().grid();
  ag::Var row = params(std::string(prefix::kRowTokens) + ".flat");
  std::vector<TokenStream> parts;
  parts.reserve(frames.size());
  for (std::int64_t f : frames) {
    const Tensor frame = enc::preprocess_frame(frame_at(video, f), size, false);
    ag::Var grid = flat_.forward_frame(params, frame.matrix());
    parts.push_back(
        pool_and_rowtokens(grid, g, g, cfg_.budget.flat_pool, row, Source::kFlat, f));
  }
  if (parts.empty()) {
    TokenStream empty;
    empty.tokens = row.tape().constant(Matrix(0, flat_.config().embed_dim()));
    return empty;
  }
  return concat_streams(parts);
}

TokenStream VicaModel::hier_stream(ag::ParamBinder& params, const Tensor& video,
                                   const std::vector<std::int64_t>& frames) const {
  const Index size = cfg_.budget.geom_hier.input_size;
  const int stage = cfg_.budget.s_stage;
  ag::Var row = params(std::string(prefix::kRowTokens) + ".hiera");
  std::vector<TokenStream> parts;
  parts.reserve(frames.size());
  for (std::int64_t f : frames) {
    const Tensor frame = enc::preprocess_frame(frame_at(video, f), size, true);
    Index g = 0;
    ag::Var grid = hier_.forward_frame(params, frame.matrix(), stage, &g);
    parts.push_back(pool_and_rowtokens(grid, g, g, cfg_.budget.s_pool, row, Source::kHier, f));
  }
  if (parts.empty()) {
    TokenStream empty;
    empty.tokens = row.tape().constant(Matrix(0, hier_.config().stage_channels(stage)));
    return empty;
  }
  return concat_streams(parts);
}

FusedOutput VicaModel::encode_video(ag::ParamBinder& params, const Tensor& video,
                                    bool with_hier) const {
  if (video.rank() != 4 || video.dim(3) != cfg_.in_channels) {
    throw Error(ErrorCode::kGeometry, "video must be (F, H, W, " +
                                          std::to_string(cfg_.in_channels) + ")");
  }
  FusedOutput out;
  out.plan = sampler::plan_frames(video.dim(0), cfg_.budget.n_total,
                                  with_hier ? cfg_.budget.n_hiera : 0);
  out.flat = project(params, flat_stream(params, video, out.plan.flat_indices), flat_proj_);
  if (out.plan.hier_indices.empty()) {
    out.hier.tokens = out.flat.tokens.tape().constant(Matrix(0, cfg_.decoder.d_model));
  } else {
    out.hier = project(params, hier_stream(params, video, out.plan.hier_indices), hier_proj_);
  }
  out.fused = fuse(out.flat, out.hier);
  return out;
}

Tensor synthetic_video(std::uint64_t seed, Index frames, Index size) {
  nx::Rng rng(seed);
  Tensor video({frames, size, size, 3});
  // A few drifting Gaussian blobs over a smooth background.
  const int blobs = 3;
  std::vector<std::array<double, 7>> b(blobs);
  for (auto& p : b) {
    p = {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(-0.01, 0.01),
         rng.uniform(-0.01, 0.01), rng.uniform(0.05, 0.15), rng.uniform(), rng.uniform()};
  }
  for (Index t = 0; t < frames; ++t) {
    auto m = video.slab(t);
    for (Index y = 0; y < size; ++y) {
      for (Index x = 0; x < size; ++x) {
        const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(size);
        const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(size);
        double rgb[3] = {0.2 * u, 0.2 * v, 0.1};
        for (const auto& p : b) {
          const double cx = p[0] + p[2] * static_cast<double>(t);
          const double cy = p[1] + p[3] * static_cast<double>(t);
          const double w =
              std::exp(-((u - cx) * (u - cx) + (v - cy) * (v - cy)) / (2 * p[4] * p[4]));
          rgb[0] += 0.7 * w * p[5];
          rgb[1] += 0.7 * w * p[6];
          rgb[2] += 0.7 * w * (1.0 - p[5]);
        }
        for (int c = 0; c < 3; ++c) m(y * size + x, c) = std::min(1.0, rgb[c]);
      }
    }
  }
  return video;
}

} // namespace vica::fusion
