#include "doctest.h"
#include "oracles.hpp"

#include "vica/budget.hpp"
#include "vica/kv_document.hpp"
#include "vica/numerics/random.hpp"

#include <cmath>
#include <limits>

using namespace vica;
using namespace vica::budget;

TEST_CASE("grid_side examples") {
  CHECK(grid_side(EncoderGeometry::full_scale_flat(), 1) == 27);
  CHECK(grid_side(EncoderGeometry::full_scale_hier(), 4) == 32);
  CHECK(grid_side(EncoderGeometry::full_scale_hier(), 1) == 256);
  CHECK(oracle::error_of([] { grid_side(EncoderGeometry::full_scale_hier(), 5); }) ==
        ErrorCode::kInvalidStage);
  CHECK(oracle::error_of([] { grid_side(EncoderGeometry::full_scale_hier(), 0); }) ==
        ErrorCode::kInvalidStage);
}

TEST_CASE("grid_side matches the integer oracle on every stage") {
  for (const auto& g : {EncoderGeometry::full_scale_flat(), EncoderGeometry::full_scale_hier(),
                        EncoderGeometry::toy_flat(), EncoderGeometry::toy_hier()}) {
    for (int s = 1; s <= g.stage_count(); ++s) {
      CHECK(grid_side(g, s) ==
            oracle::grid(g.input_size, g.patch_or_stem_stride, g.stage_strides, s));
    }
  }
}

TEST_CASE("pooled_side and tokens_per_frame examples") {
  CHECK(pooled_side(27, 2) == 14);
  CHECK(pooled_side(32, 2) == 16);
  CHECK(pooled_side(32, 1) == 32);
  CHECK(tokens_per_frame(14, 14) == 210);
  CHECK(tokens_per_frame(16, 16) == 272);
  CHECK(tokens_per_frame(1, 1) == 2);
}

TEST_CASE("full-scale configuration totals") {
  const auto r = compute_budget(TokenBudgetConfig::full_scale_default());
  CHECK(r.t_siglip == 13440);
  CHECK(r.t_hiera == 8704);
  CHECK(r.total() == 22144);
  CHECK(format_ratio(r.ratio) == "1.54");
}

TEST_CASE("compute_budget variants") {
  auto cfg = TokenBudgetConfig::full_scale_default();
  cfg.n_hiera = 64;
  auto r = compute_budget(cfg);
  CHECK(r.t_hiera == 17408);
  CHECK(format_ratio(r.ratio, 3) == "0.772");

  cfg = TokenBudgetConfig::full_scale_default();
  cfg.s_pool = 4;
  r = compute_budget(cfg);
  CHECK(r.per_frame_hier == 72);
  CHECK(r.t_hiera == 2304);
}

TEST_CASE("empty hierarchical stream") {
  auto cfg = TokenBudgetConfig::full_scale_default();
  cfg.n_hiera = 0;
  const auto r = compute_budget(cfg);
  CHECK(r.t_hiera == 0);
  CHECK(r.t_siglip == 13440);
  CHECK(std::isinf(r.ratio));
  CHECK(format_ratio(r.ratio) == "inf");
}

TEST_CASE("invalid configurations") {
  auto cfg = TokenBudgetConfig::full_scale_default();
  cfg.n_hiera = 65;
  CHECK(oracle::error_of([&] { compute_budget(cfg); }) == ErrorCode::kInvalidConfig);
  cfg = TokenBudgetConfig::full_scale_default();
  cfg.s_stage = 5;
  CHECK(oracle::error_of([&] { compute_budget(cfg); }) == ErrorCode::kInvalidStage);
  cfg = TokenBudgetConfig::full_scale_default();
  cfg.s_pool = 0;
  CHECK(oracle::error_of([&] { compute_budget(cfg); }) == ErrorCode::kInvalidConfig);
  cfg = TokenBudgetConfig::full_scale_default();
  cfg.geom_hier.patch_or_stem_stride = 0;
  CHECK(oracle::error_of([&] { compute_budget(cfg); }) == ErrorCode::kGeometry);
}

TEST_CASE("enumerate_configs examples") {
  const auto flat = EncoderGeometry::full_scale_flat();
  const auto hier = EncoderGeometry::full_scale_hier();
  const auto within = enumerate_configs(22144, flat, hier, 64);
  bool found = false;
  for (const auto& p : within) {
    CHECK(p.report.total() <= 22144);
    if (p.config.n_hiera == 32 && p.config.s_stage == 4 && p.config.s_pool == 2) {
      found = true;
      CHECK(p.report.total() == 22144);
    }
  }
  CHECK(found);
  CHECK(enumerate_configs(13440, flat, hier, 64).empty());

  // Every (n_hiera, stage, s_pool) triplet fits an unbounded budget.
  std::int64_t expected = 0;
  for (int s = 1; s <= hier.stage_count(); ++s) {
    expected += 64 * oracle::grid(hier.input_size, hier.patch_or_stem_stride, hier.stage_strides, s);
  }
  CHECK(static_cast<std::int64_t>(enumerate_configs(1000000000, flat, hier, 64).size()) ==
        expected);
}

TEST_CASE("enumerate_configs ordering") {
  const auto list = enumerate_configs(20000, EncoderGeometry::full_scale_flat(),
                                      EncoderGeometry::full_scale_hier(), 64);
  REQUIRE(list.size() > 1);
  for (std::size_t i = 1; i < list.size(); ++i) {
    const auto& a = list[i - 1].report;
    const auto& b = list[i].report;
    CHECK((a.t_hiera > b.t_hiera || (a.t_hiera == b.t_hiera && a.total() <= b.total())));
  }
}

TEST_CASE("budget properties over random configurations") {
  nx::Rng rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    TokenBudgetConfig cfg = TokenBudgetConfig::full_scale_default();
    cfg.n_total = rng.integer(1, 128);
    cfg.n_hiera = rng.integer(0, cfg.n_total);
    cfg.s_stage = static_cast<int>(rng.integer(1, 4));
    const auto g = grid_side(cfg.geom_hier, cfg.s_stage);
    cfg.s_pool = rng.integer(1, g);
    cfg.flat_pool = rng.integer(1, 27);
    const auto r = compute_budget(cfg);

    // Totals are the sum over per-frame counts.
    CHECK(r.t_siglip == cfg.n_total * r.per_frame_flat);
    CHECK(r.t_hiera == cfg.n_hiera * r.per_frame_hier);
    CHECK(r.per_frame_flat == oracle::frame_tokens(27, cfg.flat_pool));
    CHECK(r.per_frame_hier == oracle::frame_tokens(g, cfg.s_pool));
    // Row-token share.
    CHECK(r.per_frame_hier - r.pooled_hier * r.pooled_hier == r.pooled_hier);
    CHECK(r.per_frame_flat - r.pooled_flat * r.pooled_flat == r.pooled_flat);

    // A larger pooling stride never adds tokens.
    if (cfg.s_pool < g) {
      auto coarser = cfg;
      coarser.s_pool += 1;
      CHECK(compute_budget(coarser).t_hiera <= r.t_hiera);
    }
  }
}

TEST_CASE("next stage halves the grid across stride-2 transitions") {
  const auto hier = EncoderGeometry::full_scale_hier();
  for (int s = 1; s < hier.stage_count(); ++s) {
    if (hier.stage_strides[static_cast<std::size_t>(s)] == 2) {
      CHECK(grid_side(hier, s + 1) == grid_side(hier, s) / 2);
    }
  }
  // Floor semantics on an odd grid.
  EncoderGeometry odd{100, 4, {1, 2, 2}, {}};
  CHECK(grid_side(odd, 1) == 25);
  CHECK(grid_side(odd, 2) == 12);
  CHECK(grid_side(odd, 3) == 6);
}

TEST_CASE("config documents round-trip") {
  auto cfg = TokenBudgetConfig::toy_default();
  cfg.n_total = 6;
  cfg.s_pool = 1;
  const KvDocument doc = config_to_document(cfg);
  for (const auto& k : config_keys()) CHECK(doc.has(k));
  CHECK(config_from_document(doc, TokenBudgetConfig::full_scale_default()) == cfg);

  const auto parsed = KvDocument::parse("# comment\nn_hiera = 16\n\nhier.stage_strides = 1, 2, 2, 2\n");
  const auto c2 = config_from_document(parsed, TokenBudgetConfig::full_scale_default());
  CHECK(c2.n_hiera == 16);
  CHECK(c2.n_total == 64);
}

TEST_CASE("csv rows and table") {
  const auto cfg = TokenBudgetConfig::full_scale_default();
  const auto r = compute_budget(cfg);
  const std::string row = csv_row(cfg, r);
  CHECK(row.find("13440") != std::string::npos);
  CHECK(row.find("8704") != std::string::npos);
  CHECK(render_table(cfg, r).find("1.54") != std::string::npos);
}
