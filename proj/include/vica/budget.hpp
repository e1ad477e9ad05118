#pragma once

// Visual-token accounting for the dual-encoder pipeline: grid sizes per
// encoder stage, pooled sizes, row-token-inclusive per-frame counts, stream
// totals and the flat:hierarchical ratio, plus a sweep over the
// (n_hiera, s_stage, s_pool) control triplet under a token budget.

#include "vica/kv_document.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace vica::budget {

using Count = std::int64_t;

struct EncoderGeometry {
  Count input_size = 0;             // square input, pixels per side
  Count patch_or_stem_stride = 1;   // patch size (flat) or stem stride (hierarchical)
  std::vector<Count> stage_strides{1};
  std::vector<Count> channels_per_stage;  // informational widths

  int stage_count() const { return static_cast<int>(stage_strides.size()); }
  void validate() const;

  // siglip-so400m-patch14-384: 384 px, patch 14, one stage.
  static EncoderGeometry full_scale_flat();
  // Hiera-B+ as derived from the reported totals: 1024 px, stem 4, [1,2,2,2].
  static EncoderGeometry full_scale_hier();
  static EncoderGeometry toy_flat();
  static EncoderGeometry toy_hier();

  friend bool operator==(const EncoderGeometry&, const EncoderGeometry&) = default;
};

struct TokenBudgetConfig {
  Count n_total = 64;
  Count n_hiera = 32;  // 0 disables the hierarchical stream
  int s_stage = 4;     // 1-based
  Count s_pool = 2;
  Count flat_pool = 2;  // pooling stride of the flat stream (not part of the triplet)
  EncoderGeometry geom_flat = EncoderGeometry::full_scale_flat();
  EncoderGeometry geom_hier = EncoderGeometry::full_scale_hier();

  void validate() const;

  static TokenBudgetConfig full_scale_default();
  static TokenBudgetConfig toy_default();

  friend bool operator==(const TokenBudgetConfig&, const TokenBudgetConfig&) = default;
};

struct TokenBudgetReport {
  Count grid_flat = 0;
  Count grid_hier = 0;
  Count pooled_flat = 0;
  Count pooled_hier = 0;
  Count per_frame_flat = 0;
  Count per_frame_hier = 0;
  Count t_siglip = 0;
  Count t_hiera = 0;
  double ratio = 0.0;  // t_siglip / t_hiera; +inf when t_hiera == 0

  Count total() const { return t_siglip + t_hiera; }
};

// floor(input / stride) reduced by stage_strides[0..stage-1] with integer
// division at each step.
Count grid_side(const EncoderGeometry& geom, int stage);
Count pooled_side(Count grid, Count s_pool);
Count tokens_per_frame(Count pooled_h, Count pooled_w);

TokenBudgetReport compute_budget(const TokenBudgetConfig& cfg);

struct PlannedConfig {
  TokenBudgetConfig config;
  TokenBudgetReport report;
};

// Every (n_hiera in 1..n_total, s_stage, s_pool in 1..grid(s_stage)) whose
// total fits in `budget_max_tokens`, ordered by descending t_hiera, then
// ascending total, then ascending (n_hiera, s_stage, s_pool).
std::vector<PlannedConfig> enumerate_configs(Count budget_max_tokens,
                                             const EncoderGeometry& geom_flat,
                                             const EncoderGeometry& geom_hier,
                                             Count n_total, Count flat_pool = 2);

std::string format_ratio(double ratio, int precision = 2);

// Aligned plain-text table and CSV for one report.
std::string render_table(const TokenBudgetConfig& cfg, const TokenBudgetReport& r,
                         int ratio_precision = 2);
std::string csv_header();
std::string csv_row(const TokenBudgetConfig& cfg, const TokenBudgetReport& r,
                    int ratio_precision = 2);

// Keys: n_total, n_hiera, s_stage, s_pool, flat_pool,
// flat.input_size, flat.stride, flat.stage_strides, flat.channels,
// hier.input_size, hier.stride, hier.stage_strides, hier.channels.
// Missing keys keep the values of `base`.
TokenBudgetConfig config_from_document(const KvDocument& doc, TokenBudgetConfig base);
// Inverse of config_from_document; round-trips every field.
KvDocument config_to_document(const TokenBudgetConfig& cfg);
const std::vector<std::string>& config_keys();

} // namespace vica::budget
