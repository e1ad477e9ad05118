#pragma once

// Token interface between the vision towers and the language decoder: pooling
// with row-end tokens, per-stream projection, parameter-free concatenation and
// a tiny causal decoder with greedy generation.

#include "vica/budget.hpp"
#include "vica/encoders.hpp"
#include "vica/numerics.hpp"
#include "vica/sampler.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace vica::fusion {

using nx::Index;
using nx::Matrix;
using nx::Tensor;

enum class Source { kFlat, kHier, kText };
const char* source_name(Source s);

struct Provenance {
  Source encoder = Source::kFlat;
  std::int64_t frame_index = -1;
  Index row = 0;
  Index col = 0;  // == pooled width for row tokens
  bool is_row_token = false;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct TokenStream {
  ag::Var tokens;  // (T x width)
  std::vector<Provenance> provenance;

  Index length() const { return tokens.rows(); }
  Index width() const { return tokens.cols(); }
};

// Bilinear-pools an (h*w) x C grid to ceil(h/s) x ceil(w/s), flattens rows and
// appends `row_token` (1 x C) after each pooled row.
TokenStream pool_and_rowtokens(const ag::Var& grid, Index h, Index w, Index s_pool,
                               const ag::Var& row_token, Source encoder,
                               std::int64_t frame_index);

// Concatenates per-frame streams in order.
TokenStream concat_streams(std::span<const TokenStream> parts);

// [flat tokens, hier tokens]; no parameters involved. An empty hierarchical
// stream returns the flat stream itself.
TokenStream fuse(const TokenStream& flat, const TokenStream& hier);

struct ProvenanceSummary {
  std::map<Source, Index> tokens;
  std::map<Source, Index> row_tokens;
  std::map<std::pair<Source, std::int64_t>, Index> per_frame;
};
ProvenanceSummary summarize(const std::vector<Provenance>& provenance);
std::string render_summary(const ProvenanceSummary& s);

// ---- projector -------------------------------------------------------------

// fc1 -> GELU -> fc2, Xavier weights, zero biases, applied per token.
class Projector {
 public:
  Projector(std::string prefix, Index in_dim, Index hidden_dim, Index out_dim);

  const std::string& prefix() const { return prefix_; }
  Index in_dim() const { return in_dim_; }
  Index out_dim() const { return out_dim_; }

  void init_params(nx::ParamStore& store, nx::Rng& rng) const;
  ag::Var apply(ag::ParamBinder& params, const ag::Var& tokens) const;

 private:
  std::string prefix_;
  Index in_dim_;
  Index hidden_dim_;
  Index out_dim_;
};

TokenStream project(ag::ParamBinder& params, const TokenStream& stream,
                    const Projector& projector);

// ---- text ------------------------------------------------------------------

namespace text {
inline constexpr int kBos = 256;
inline constexpr int kEos = 257;
inline constexpr int kSep = 258;
inline constexpr Index kVocabSize = 259;

// Byte-level identity mapping.
std::vector<int> encode(const std::string& s);
// Specials are dropped.
std::string decode(std::span<const int> ids);
} // namespace text

// ---- decoder ---------------------------------------------------------------

struct DecoderConfig {
  Index vocab_size = text::kVocabSize;
  Index d_model = 16;
  int layers = 2;
  int heads = 2;
  Index mlp_ratio = 4;
};

class DecoderStub {
 public:
  static constexpr const char* kPrefix = "decoder";

  explicit DecoderStub(DecoderConfig cfg);
  const DecoderConfig& config() const { return cfg_; }

  void init_params(nx::ParamStore& store, nx::Rng& rng) const;

  // Final hidden states for [visual rows, embed(ids)] with sinusoidal
  // positions; (T_vis + |ids|) x d_model.
  ag::Var hidden(ag::ParamBinder& params, const ag::Var& visual,
                 std::span<const int> ids) const;
  ag::Var lm_head(ag::ParamBinder& params, const ag::Var& hidden_rows) const;

  // Logits at every position of the sequence (visual and text).
  ag::Var logits_all(ag::ParamBinder& params, const ag::Var& visual,
                     std::span<const int> ids) const;
  // Logits at the text positions only; |ids| x vocab.
  ag::Var text_logits(ag::ParamBinder& params, const ag::Var& visual,
                      std::span<const int> ids) const;

 private:
  DecoderConfig cfg_;
};

Matrix sinusoidal_positions(Index length, Index width);

// Next-token cross-entropy over the text. The decoder reads
// [fused, BOS, text[0..n-2]] and is scored on text[i] for every i whose
// `target_mask` entry is true (all positions when the mask is empty).
ag::Var decode_loss(ag::ParamBinder& params, const DecoderStub& decoder,
                    const TokenStream& fused, std::span<const int> text,
                    std::span<const bool> target_mask = {});

struct Generation {
  std::vector<int> ids;
  bool truncated = false;  // stopped by max_len rather than eos
};

inline constexpr Index kDefaultMaxGenerationLength = 4096;

// Argmax decoding (lowest id wins ties) after [fused, BOS, prompt...].
Generation generate_greedy(const nx::ParamStore& store, const DecoderStub& decoder,
                           const Matrix& fused_tokens, std::span<const int> prompt_ids,
                           Index max_len = kDefaultMaxGenerationLength,
                           int eos_id = text::kEos);

int argmax_lowest(const Eigen::Ref<const nx::RowVector>& logits);

// ---- full model ------------------------------------------------------------

struct ModelConfig {
  budget::TokenBudgetConfig budget = budget::TokenBudgetConfig::toy_default();
  Index in_channels = 3;
  int flat_depth = 2;
  int flat_heads = 2;
  Index projector_hidden = 0;  // 0 -> 4 * d_model
  DecoderConfig decoder;

  Index hidden_width() const {
    return projector_hidden > 0 ? projector_hidden : 4 * decoder.d_model;
  }
};

// Parameter subtrees, matching the trainable masks of the staged schedule.
namespace prefix {
inline constexpr const char* kFlatEncoder = "flat_encoder";
inline constexpr const char* kHieraEncoder = "hiera_encoder";
inline constexpr const char* kFlatProjector = "flat_projector";
inline constexpr const char* kHieraProjector = "hiera_projector";
inline constexpr const char* kRowTokens = "row_tokens";
inline constexpr const char* kDecoder = "decoder";
std::vector<std::string> all();
} // namespace prefix

struct FusedOutput {
  TokenStream flat;
  TokenStream hier;
  TokenStream fused;
  sampler::FrameIndexPlan plan;
};

class VicaModel {
 public:
  VicaModel(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const enc::FlatEncoder& flat_encoder() const { return flat_; }
  const enc::HierEncoder& hier_encoder() const { return hier_; }
  const Projector& flat_projector() const { return flat_proj_; }
  const Projector& hier_projector() const { return hier_proj_; }
  const DecoderStub& decoder() const { return decoder_; }

  nx::ParamStore& params() { return params_; }
  const nx::ParamStore& params() const { return params_; }

  // Video is (F, H, W, C) with values in [0, 1].
  // With `hier_stream` false the hierarchical path is skipped entirely.
  FusedOutput encode_video(ag::ParamBinder& params, const Tensor& video,
                           bool hier_stream = true) const;

  // Flat stream only, before projection; used by the pooling checks.
  TokenStream flat_stream(ag::ParamBinder& params, const Tensor& video,
                          const std::vector<std::int64_t>& frames) const;
  TokenStream hier_stream(ag::ParamBinder& params, const Tensor& video,
                          const std::vector<std::int64_t>& frames) const;

 private:
  ModelConfig cfg_;
  enc::FlatEncoder flat_;
  enc::HierEncoder hier_;
  Projector flat_proj_;
  Projector hier_proj_;
  DecoderStub decoder_;
  nx::ParamStore params_;
};

// Deterministic synthetic clip: (frames, size, size, 3) in [0, 1].
Tensor synthetic_video(std::uint64_t seed, Index frames, Index size);

} // namespace vica::fusion
