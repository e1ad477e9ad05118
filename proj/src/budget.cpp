#include "vica/budget.hpp"

#include "vica/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <tuple>

namespace vica::budget {

void EncoderGeometry::validate() const {
  if (input_size < 1 || patch_or_stem_stride < 1) {
    throw Error(ErrorCode::kGeometry, "encoder input size and stride must be >= 1");
  }
  if (input_size / patch_or_stem_stride < 1) {
    throw Error(ErrorCode::kGeometry, "stride larger than input: grid would be empty");
  }
  if (stage_strides.empty()) {
    throw Error(ErrorCode::kGeometry, "encoder needs at least one stage");
  }
  for (Count s : stage_strides) {
    if (s < 1) throw Error(ErrorCode::kGeometry, "stage strides must be >= 1");
  }
}

EncoderGeometry EncoderGeometry::full_scale_flat() { return {384, 14, {1}, {1152}}; }
EncoderGeometry EncoderGeometry::full_scale_hier() {
  return {1024, 4, {1, 2, 2, 2}, {112, 224, 448, 896}};
}
EncoderGeometry EncoderGeometry::toy_flat() { return {56, 4, {1}, {16}}; }
EncoderGeometry EncoderGeometry::toy_hier() { return {64, 4, {1, 2, 2, 2}, {8, 16, 32, 64}}; }

void TokenBudgetConfig::validate() const {
  geom_flat.validate();
  geom_hier.validate();
  if (n_total < 1) throw Error(ErrorCode::kInvalidConfig, "n_total must be >= 1");
  if (n_hiera < 0 || n_hiera > n_total) {
    throw Error(ErrorCode::kInvalidConfig, "n_hiera must lie in [0, n_total]");
  }
  if (s_stage < 1 || s_stage > geom_hier.stage_count()) {
    throw Error(ErrorCode::kInvalidStage,
                "s_stage " + std::to_string(s_stage) + " outside 1.." +
                    std::to_string(geom_hier.stage_count()));
  }
  if (s_pool < 1 || flat_pool < 1) {
    throw Error(ErrorCode::kInvalidConfig, "pooling strides must be >= 1");
  }
  if (grid_side(geom_hier, s_stage) < 1) {
    throw Error(ErrorCode::kGeometry, "hierarchical stage grid collapses to zero");
  }
}

TokenBudgetConfig TokenBudgetConfig::full_scale_default() { return {}; }

TokenBudgetConfig TokenBudgetConfig::toy_default() {
  TokenBudgetConfig c;
  c.n_total = 4;
  c.n_hiera = 2;
  c.s_stage = 3;
  c.s_pool = 2;
  c.flat_pool = 2;
  c.geom_flat = EncoderGeometry::toy_flat();
  c.geom_hier = EncoderGeometry::toy_hier();
  return c;
}

Count grid_side(const EncoderGeometry& geom, int stage) {
  if (stage < 1 || stage > geom.stage_count()) {
    throw Error(ErrorCode::kInvalidStage, "stage " + std::to_string(stage) +
                                              " outside 1.." +
                                              std::to_string(geom.stage_count()));
  }
  geom.validate();
  Count g = geom.input_size / geom.patch_or_stem_stride;
  for (int k = 0; k < stage; ++k) g /= geom.stage_strides[static_cast<std::size_t>(k)];
  return g;
}

Count pooled_side(Count grid, Count s_pool) {
  if (grid < 1 || s_pool < 1) {
    throw Error(ErrorCode::kInvalidConfig, "pooled_side needs grid >= 1 and s_pool >= 1");
  }
  return (grid + s_pool - 1) / s_pool;
}

Count tokens_per_frame(Count pooled_h, Count pooled_w) {
  if (pooled_h < 1 || pooled_w < 1) {
    throw Error(ErrorCode::kInvalidConfig, "pooled grid must be at least 1x1");
  }
  return pooled_h * (pooled_w + 1);
}

TokenBudgetReport compute_budget(const TokenBudgetConfig& cfg) {
  cfg.validate();
  TokenBudgetReport r;
  r.grid_flat = grid_side(cfg.geom_flat, cfg.geom_flat.stage_count());
  r.grid_hier = grid_side(cfg.geom_hier, cfg.s_stage);
  r.pooled_flat = pooled_side(r.grid_flat, cfg.flat_pool);
  r.pooled_hier = pooled_side(r.grid_hier, cfg.s_pool);
  r.per_frame_flat = tokens_per_frame(r.pooled_flat, r.pooled_flat);
  r.per_frame_hier = tokens_per_frame(r.pooled_hier, r.pooled_hier);
  r.t_siglip = cfg.n_total * r.per_frame_flat;
  r.t_hiera = cfg.n_hiera * r.per_frame_hier;
  r.ratio = r.t_hiera == 0 ? std::numeric_limits<double>::infinity()
                           : static_cast<double>(r.t_siglip) / static_cast<double>(r.t_hiera);
  return r;
}

std::vector<PlannedConfig> enumerate_configs(Count budget_max_tokens,
                                             const EncoderGeometry& geom_flat,
                                             const EncoderGeometry& geom_hier,
                                             Count n_total, Count flat_pool) {
  TokenBudgetConfig base;
  base.n_total = n_total;
  base.flat_pool = flat_pool;
  base.geom_flat = geom_flat;
  base.geom_hier = geom_hier;
  base.n_hiera = 0;
  base.s_stage = 1;
  base.s_pool = 1;
  const TokenBudgetReport flat_only = compute_budget(base);
  if (budget_max_tokens < flat_only.per_frame_flat) {
    throw Error(ErrorCode::kInvalidConfig,
                "budget " + std::to_string(budget_max_tokens) +
                    " is below one flat frame (" +
                    std::to_string(flat_only.per_frame_flat) + " tokens)");
  }

  std::vector<PlannedConfig> out;
  for (Count n = 1; n <= n_total; ++n) {
    for (int stage = 1; stage <= geom_hier.stage_count(); ++stage) {
      const Count grid = grid_side(geom_hier, stage);
      for (Count pool = 1; pool <= grid; ++pool) {
        TokenBudgetConfig cfg = base;
        cfg.n_hiera = n;
        cfg.s_stage = stage;
        cfg.s_pool = pool;
        TokenBudgetReport r = compute_budget(cfg);
        if (r.total() <= budget_max_tokens) out.push_back({std::move(cfg), r});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const PlannedConfig& a, const PlannedConfig& b) {
    return std::make_tuple(-a.report.t_hiera, a.report.total(), a.config.n_hiera,
                           a.config.s_stage, a.config.s_pool) <
           std::make_tuple(-b.report.t_hiera, b.report.total(), b.config.n_hiera,
                           b.config.s_stage, b.config.s_pool);
  });
  return out;
}

std::string format_ratio(double ratio, int precision) {
  if (std::isinf(ratio)) return "inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << ratio;
  return os.str();
}

std::string render_table(const TokenBudgetConfig& cfg, const TokenBudgetReport& r,
                         int ratio_precision) {
  std::ostringstream os;
  auto line = [&os](const std::string& label, const std::string& flat,
                    const std::string& hier) {
    os << std::left << std::setw(16) << label << std::right << std::setw(10) << flat
       << std::setw(10) << hier << '\n';
  };
  line("", "flat", "hier");
  line("frames", std::to_string(cfg.n_total), std::to_string(cfg.n_hiera));
  line("stage", std::to_string(cfg.geom_flat.stage_count()), std::to_string(cfg.s_stage));
  line("pool stride", std::to_string(cfg.flat_pool), std::to_string(cfg.s_pool));
  line("grid", std::to_string(r.grid_flat), std::to_string(r.grid_hier));
  line("pooled grid", std::to_string(r.pooled_flat), std::to_string(r.pooled_hier));
  line("tokens/frame", std::to_string(r.per_frame_flat), std::to_string(r.per_frame_hier));
  line("tokens", std::to_string(r.t_siglip), std::to_string(r.t_hiera));
  os << std::left << std::setw(16) << "total" << std::right << std::setw(20) << r.total()
     << '\n';
  os << std::left << std::setw(16) << "ratio" << std::right << std::setw(20)
     << format_ratio(r.ratio, ratio_precision) << '\n';
  return os.str();
}

std::string csv_header() {
  return "n_total,n_hiera,s_stage,s_pool,flat_pool,grid_flat,grid_hier,pooled_flat,"
         "pooled_hier,per_frame_flat,per_frame_hier,t_siglip,t_hiera,total,ratio";
}

std::string csv_row(const TokenBudgetConfig& cfg, const TokenBudgetReport& r,
                    int ratio_precision) {
  std::ostringstream os;
  os << cfg.n_total << ',' << cfg.n_hiera << ',' << cfg.s_stage << ',' << cfg.s_pool << ','
     << cfg.flat_pool << ',' << r.grid_flat << ',' << r.grid_hier << ',' << r.pooled_flat
     << ',' << r.pooled_hier << ',' << r.per_frame_flat << ',' << r.per_frame_hier << ','
     << r.t_siglip << ',' << r.t_hiera << ',' << r.total() << ','
     << format_ratio(r.ratio, ratio_precision);
  return os.str();
}

namespace {

void apply_geometry(const KvDocument& doc, const std::string& prefix, EncoderGeometry& g) {
  if (auto v = doc.get_int(prefix + ".input_size")) g.input_size = *v;
  if (auto v = doc.get_int(prefix + ".stride")) g.patch_or_stem_stride = *v;
  if (auto v = doc.get_int_list(prefix + ".stage_strides")) {
    g.stage_strides.assign(v->begin(), v->end());
  }
  if (auto v = doc.get_int_list(prefix + ".channels")) {
    g.channels_per_stage.assign(v->begin(), v->end());
  }
}

} // namespace

TokenBudgetConfig config_from_document(const KvDocument& doc, TokenBudgetConfig base) {
  if (auto v = doc.get_int("n_total")) base.n_total = *v;
  if (auto v = doc.get_int("n_hiera")) base.n_hiera = *v;
  if (auto v = doc.get_int("s_stage")) base.s_stage = static_cast<int>(*v);
  if (auto v = doc.get_int("s_pool")) base.s_pool = *v;
  if (auto v = doc.get_int("flat_pool")) base.flat_pool = *v;
  apply_geometry(doc, "flat", base.geom_flat);
  apply_geometry(doc, "hier", base.geom_hier);
  base.validate();
  return base;
}

namespace {

std::string join_counts(const std::vector<Count>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

void put_geometry(KvDocument& doc, const std::string& prefix, const EncoderGeometry& g) {
  doc.set(prefix + ".input_size", std::to_string(g.input_size));
  doc.set(prefix + ".stride", std::to_string(g.patch_or_stem_stride));
  doc.set(prefix + ".stage_strides", join_counts(g.stage_strides));
  doc.set(prefix + ".channels", join_counts(g.channels_per_stage));
}

} // namespace

KvDocument config_to_document(const TokenBudgetConfig& cfg) {
  KvDocument doc;
  doc.set("n_total", std::to_string(cfg.n_total));
  doc.set("n_hiera", std::to_string(cfg.n_hiera));
  doc.set("s_stage", std::to_string(cfg.s_stage));
  doc.set("s_pool", std::to_string(cfg.s_pool));
  doc.set("flat_pool", std::to_string(cfg.flat_pool));
  put_geometry(doc, "flat", cfg.geom_flat);
  put_geometry(doc, "hier", cfg.geom_hier);
  return doc;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "n_total",          "n_hiera",      "s_stage",           "s_pool",
      "flat_pool",        "flat.input_size", "flat.stride",    "flat.stage_strides",
      "flat.channels",    "hier.input_size", "hier.stride",    "hier.stage_strides",
      "hier.channels"};
  return keys;
}

} // namespace vica::budget
