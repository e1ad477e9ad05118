#include "doctest.h"
#include "oracles.hpp"

#include "vica/fusion.hpp"
#include "vica/training.hpp"

#include <cmath>
#include <numeric>

using namespace vica;
using fusion::Source;
using fusion::TokenStream;
using nx::Index;
using nx::Matrix;
using nx::Tensor;

namespace {

Matrix random_matrix(Index r, Index c, nx::Rng& rng) {
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

TokenStream constant_stream(ag::Tape& tape, Index n, Index width, Source src, double value) {
  TokenStream s;
  s.tokens = tape.constant(Matrix::Constant(n, width, value));
  for (Index i = 0; i < n; ++i) s.provenance.push_back({src, 0, i, 0, false});
  return s;
}

TokenStream empty_stream(ag::Tape& tape, Index width) {
  TokenStream s;
  s.tokens = tape.constant(Matrix(0, width));
  return s;
}

// Cross-entropy of `logits` rows against `targets`, computed directly.
double ce_oracle(const Matrix& logits, const std::vector<int>& targets) {
  double total = 0.0;
  for (Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    double z = 0.0;
    for (Index c = 0; c < logits.cols(); ++c) z += std::exp(logits(r, c) - m);
    total += m + std::log(z) - logits(r, targets[static_cast<std::size_t>(r)]);
  }
  return total / static_cast<double>(logits.rows());
}

fusion::ModelConfig random_toy_config(nx::Rng& rng) {
  fusion::ModelConfig cfg;
  auto& b = cfg.budget;
  b.n_total = rng.integer(1, 4);
  b.n_hiera = rng.integer(0, b.n_total);
  b.s_stage = static_cast<int>(rng.integer(1, 4));
  b.s_pool = rng.integer(1, budget::grid_side(b.geom_hier, b.s_stage));
  b.flat_pool = rng.integer(1, 5);
  cfg.flat_depth = 1;
  cfg.decoder.layers = 1;
  cfg.decoder.d_model = 8;
  return cfg;
}

} // namespace

// ---- pooling and row tokens --------------------------------------------------

TEST_CASE("pool 4x4 with stride 2") {
  ag::Tape tape(false);
  nx::Rng rng(1);
  const Matrix row = random_matrix(1, 3, rng);
  const TokenStream s = fusion::pool_and_rowtokens(tape.constant(random_matrix(16, 3, rng)), 4,
                                                   4, 2, tape.constant(row), Source::kHier, 7);
  REQUIRE(s.length() == 6);
  for (Index i = 0; i < 6; ++i) {
    const auto& p = s.provenance[static_cast<std::size_t>(i)];
    CHECK(p.is_row_token == (i == 2 || i == 5));
    CHECK(p.frame_index == 7);
    CHECK(p.encoder == Source::kHier);
    CHECK(p.row == i / 3);
    CHECK(p.col == i % 3);
  }
  CHECK(s.tokens.value().row(2) == row);
  CHECK(s.tokens.value().row(5) == row);
}

TEST_CASE("stride-1 pooling keeps content bitwise") {
  ag::Tape tape(false);
  nx::Rng rng(2);
  const Index h = 3, w = 5;
  const Matrix grid = random_matrix(h * w, 4, rng);
  const TokenStream s = fusion::pool_and_rowtokens(
      tape.constant(grid), h, w, 1, tape.constant(random_matrix(1, 4, rng)), Source::kFlat, 0);
  REQUIRE(s.length() == h * (w + 1));
  for (Index r = 0; r < h; ++r) {
    for (Index c = 0; c < w; ++c) CHECK(s.tokens.value().row(r * (w + 1) + c) == grid.row(r * w + c));
  }
}

TEST_CASE("27x27 grid pools to 210 tokens") {
  ag::Tape tape(false);
  const TokenStream s = fusion::pool_and_rowtokens(tape.constant(Matrix::Zero(729, 2)), 27, 27,
                                                   2, tape.constant(Matrix::Zero(1, 2)),
                                                   Source::kFlat, 0);
  CHECK(s.length() == 210);
}

TEST_CASE("pooled content matches the bilinear oracle") {
  ag::Tape tape(false);
  nx::Rng rng(3);
  const Index h = 7, w = 7, c = 2, s_pool = 3;
  const Matrix grid = random_matrix(h * w, c, rng);
  const TokenStream s = fusion::pool_and_rowtokens(
      tape.constant(grid), h, w, s_pool, tape.constant(Matrix::Zero(1, c)), Source::kFlat, 0);
  const std::vector<double> src(grid.data(), grid.data() + grid.size());
  const auto want = oracle::bilinear(src, h, w, c, 3, 3);
  for (Index r = 0; r < 3; ++r) {
    for (Index col = 0; col < 3; ++col) {
      for (Index ch = 0; ch < c; ++ch) {
        CHECK(std::abs(s.tokens.value()(r * 4 + col, ch) -
                       want[static_cast<std::size_t>((r * 3 + col) * c + ch)]) < 1e-12);
      }
    }
  }
}

// ---- projector ---------------------------------------------------------------

TEST_CASE("projector") {
  const fusion::Projector proj("p", 6, 10, 4);
  nx::ParamStore store;
  nx::Rng rng(4);
  proj.init_params(store, rng);
  // Non-zero biases make the zero-input case informative.
  for (const char* b : {"p.fc1.bias", "p.fc2.bias"}) {
    auto& t = store.value(b);
    for (Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1.0, 1.0);
  }
  const Matrix w1 = store.value("p.fc1.weight").matrix();
  const Matrix b1 = store.value("p.fc1.bias").matrix();
  const Matrix w2 = store.value("p.fc2.weight").matrix();
  const Matrix b2 = store.value("p.fc2.bias").matrix();

  ag::Tape tape(false);
  ag::ParamBinder params(tape, store);

  SUBCASE("zero input gives the bias path") {
    const Matrix out = proj.apply(params, tape.constant(Matrix::Zero(2, 6))).value();
    for (Index j = 0; j < 4; ++j) {
      double v = b2(0, j);
      for (Index k = 0; k < 10; ++k) {
        const double x = b1(0, k);
        v += 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))) * w2(k, j);
      }
      CHECK(out(0, j) == doctest::Approx(v).epsilon(1e-13));
      CHECK(out(1, j) == out(0, j));
    }
  }

  SUBCASE("batched equals single-token application and the loop oracle") {
    const Matrix x = random_matrix(5, 6, rng);
    const Matrix batched = proj.apply(params, tape.constant(x)).value();
    for (Index t = 0; t < 5; ++t) {
      const Matrix single = proj.apply(params, tape.constant(x.row(t))).value();
      CHECK(single.row(0) == batched.row(t));
      for (Index j = 0; j < 4; ++j) {
        double v = b2(0, j);
        for (Index k = 0; k < 10; ++k) {
          double a = b1(0, k);
          for (Index i = 0; i < 6; ++i) a += x(t, i) * w1(i, k);
          v += 0.5 * a * (1.0 + std::erf(a / std::sqrt(2.0))) * w2(k, j);
        }
        CHECK(std::abs(batched(t, j) - v) < 1e-12);
      }
    }
  }

  SUBCASE("width mismatch") {
    CHECK(oracle::error_of([&] { proj.apply(params, tape.constant(Matrix::Zero(1, 5))); }) ==
          ErrorCode::kShape);
  }
}

// ---- fusion --------------------------------------------------------------------

TEST_CASE("fuse") {
  ag::Tape tape(false);
  const auto r = budget::compute_budget(budget::TokenBudgetConfig::full_scale_default());
  const TokenStream flat = constant_stream(tape, r.t_siglip, 4, Source::kFlat, 1.0);
  const TokenStream hier = constant_stream(tape, r.t_hiera, 4, Source::kHier, 2.0);
  const TokenStream fused = fusion::fuse(flat, hier);
  CHECK(fused.length() == 22144);
  CHECK(fused.provenance.front().encoder == Source::kFlat);
  CHECK(fused.provenance[13440].encoder == Source::kHier);
  CHECK(fused.tokens.value()(13439, 0) == 1.0);
  CHECK(fused.tokens.value()(13440, 0) == 2.0);

  const TokenStream alone = fusion::fuse(flat, empty_stream(tape, 4));
  CHECK(alone.tokens.value() == flat.tokens.value());
  CHECK(alone.provenance == flat.provenance);

  CHECK(oracle::error_of([&] {
          fusion::fuse(flat, constant_stream(tape, 3, 5, Source::kHier, 0.0));
        }) == ErrorCode::kShape);
}

TEST_CASE("toy pipeline length matches the planner") {
  fusion::ModelConfig cfg;
  cfg.budget.n_total = 2;
  cfg.budget.n_hiera = 1;
  cfg.budget.s_stage = 3;
  cfg.budget.s_pool = 2;
  cfg.budget.flat_pool = 2;
  const fusion::VicaModel model(cfg, 5);
  ag::Tape tape(false);
  ag::ParamBinder params(tape, model.params());
  const auto out = model.encode_video(params, fusion::synthetic_video(1, 6, 48));
  const auto r = budget::compute_budget(cfg.budget);
  CHECK(r.per_frame_flat == 7 * 8);
  CHECK(out.fused.length() == r.total());
  const auto sum = fusion::summarize(out.fused.provenance);
  CHECK(sum.tokens.at(Source::kFlat) == r.t_siglip);
  CHECK(sum.tokens.at(Source::kHier) == r.t_hiera);
  CHECK(out.fused.width() == cfg.decoder.d_model);
}

TEST_CASE("pipeline agrees with the planner on random configurations") {
  nx::Rng rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const fusion::ModelConfig cfg = random_toy_config(rng);
    CAPTURE(trial);
    const fusion::VicaModel model(cfg, static_cast<std::uint64_t>(trial));
    ag::Tape tape(false);
    ag::ParamBinder params(tape, model.params());
    const auto out = model.encode_video(
        params, fusion::synthetic_video(static_cast<std::uint64_t>(trial),
                                        cfg.budget.n_total + rng.integer(0, 3), 24));
    const auto r = budget::compute_budget(cfg.budget);
    auto sum = fusion::summarize(out.fused.provenance);
    CHECK(out.fused.length() == r.total());
    CHECK(static_cast<Index>(out.fused.provenance.size()) == r.total());
    CHECK(sum.tokens[Source::kFlat] == r.t_siglip);
    CHECK(sum.tokens[Source::kHier] == r.t_hiera);
    CHECK(sum.row_tokens[Source::kFlat] == cfg.budget.n_total * r.pooled_flat);
    CHECK(sum.row_tokens[Source::kHier] == cfg.budget.n_hiera * r.pooled_hier);
  }
}

TEST_CASE("row token embedding is shared within a stream") {
  const fusion::VicaModel model(train::toy_training_model(), 3);
  ag::Tape tape(false);
  ag::ParamBinder params(tape, model.params());
  const Tensor video = fusion::synthetic_video(2, 3, 40);
  const TokenStream flat = model.flat_stream(params, video, {0, 2});
  const TokenStream hier = model.hier_stream(params, video, {1});
  const Matrix flat_row = model.params().value("row_tokens.flat").matrix();
  const Matrix hier_row = model.params().value("row_tokens.hiera").matrix();
  int seen = 0;
  for (std::size_t i = 0; i < flat.provenance.size(); ++i) {
    if (!flat.provenance[i].is_row_token) continue;
    CHECK(flat.tokens.value().row(static_cast<Index>(i)) == flat_row);
    ++seen;
  }
  for (std::size_t i = 0; i < hier.provenance.size(); ++i) {
    if (!hier.provenance[i].is_row_token) continue;
    CHECK(hier.tokens.value().row(static_cast<Index>(i)) == hier_row);
    ++seen;
  }
  CHECK(seen > 2);
}

TEST_CASE("permuting frames preserves counts") {
  const fusion::VicaModel model(train::toy_training_model(), 4);
  const Tensor video = fusion::synthetic_video(3, 5, 32);
  std::vector<Tensor> frames;
  for (Index f = 4; f >= 0; --f) {
    Tensor frame({32, 32, 3});
    frame.matrix() = video.slab(f);
    frames.push_back(frame);
  }
  const Tensor reversed = nx::stack(frames);
  ag::Tape tape(false);
  ag::ParamBinder params(tape, model.params());
  const auto a = fusion::summarize(model.encode_video(params, video).fused.provenance);
  const auto b = fusion::summarize(model.encode_video(params, reversed).fused.provenance);
  CHECK(a.tokens == b.tokens);
  CHECK(a.row_tokens == b.row_tokens);
  Index total_a = 0, total_b = 0;
  for (const auto& [key, n] : a.per_frame) total_a += n;
  for (const auto& [key, n] : b.per_frame) total_b += n;
  CHECK(total_a == total_b);
}

// ---- decoder -------------------------------------------------------------------

TEST_CASE("text tokenizer") {
  CHECK(fusion::text::encode("hi") == std::vector<int>{104, 105});
  const std::vector<int> ids{fusion::text::kBos, 104, fusion::text::kSep, 105, fusion::text::kEos};
  CHECK(fusion::text::decode(ids) == "hi");
}

TEST_CASE("decode_loss of a uniform-logit decoder is ln(vocab)") {
  const fusion::DecoderStub dec(fusion::DecoderConfig{});
  nx::ParamStore store;
  nx::Rng rng(7);
  dec.init_params(store, rng);
  store.value("decoder.lm_head.weight").data().setZero();
  store.value("decoder.lm_head.bias").data().setZero();
  ag::Tape tape(false);
  ag::ParamBinder params(tape, store);
  const TokenStream visual = constant_stream(tape, 3, 16, Source::kFlat, 0.5);
  const auto ids = fusion::text::encode("uniform");
  const double loss = fusion::decode_loss(params, dec, visual, ids).value()(0, 0);
  CHECK(loss == doctest::Approx(std::log(259.0)).epsilon(1e-13));

  const std::vector<int> bad{1, 400};
  CHECK(oracle::error_of([&] { fusion::decode_loss(params, dec, visual, bad); }) ==
        ErrorCode::kVocab);
}

TEST_CASE("empty visual context equals the text-only loss") {
  const fusion::DecoderStub dec(fusion::DecoderConfig{});
  nx::ParamStore store;
  nx::Rng rng(8);
  dec.init_params(store, rng);
  ag::Tape tape(false);
  ag::ParamBinder params(tape, store);
  const auto text = fusion::text::encode("abc");
  const double loss = fusion::decode_loss(params, dec, empty_stream(tape, 16), text).value()(0, 0);

  const std::vector<int> inputs{fusion::text::kBos, text[0], text[1]};
  const Matrix logits = dec.text_logits(params, ag::Var{}, inputs).value();
  CHECK(std::abs(loss - ce_oracle(logits, text)) < 1e-12);
}

TEST_CASE("teacher-forced copy task overfits") {
  const fusion::DecoderStub dec(fusion::DecoderConfig{});
  nx::ParamStore store;
  nx::Rng rng(9);
  dec.init_params(store, rng);
  std::vector<int> seq = fusion::text::encode("abcd");
  seq.push_back(fusion::text::kSep);
  for (int id : fusion::text::encode("abcd")) seq.push_back(id);
  seq.push_back(fusion::text::kEos);
  std::vector<char> mask_bytes(seq.size(), 0);
  for (std::size_t i = 5; i < seq.size(); ++i) mask_bytes[i] = 1;
  std::unique_ptr<bool[]> mask(new bool[seq.size()]);
  for (std::size_t i = 0; i < seq.size(); ++i) mask[i] = mask_bytes[i] != 0;

  train::AdamW opt(1e-2);
  double loss = 0.0;
  for (int step = 0; step < 200; ++step) {
    ag::Tape tape;
    ag::ParamBinder params(tape, store);
    ag::Var l = fusion::decode_loss(params, dec, empty_stream(tape, 16), seq,
                                    std::span<const bool>(mask.get(), seq.size()));
    loss = l.value()(0, 0);
    tape.backward(l);
    opt.step(store, params.gradients());
  }
  CHECK(loss < 0.1);
}

TEST_CASE("greedy generation") {
  const fusion::DecoderStub dec(fusion::DecoderConfig{});
  nx::ParamStore store;
  nx::Rng rng(10);
  dec.init_params(store, rng);
  const Matrix visual = random_matrix(4, 16, rng);
  const std::vector<int> prompt{1, 2, 3};

  SUBCASE("deterministic") {
    const auto a = fusion::generate_greedy(store, dec, visual, prompt, 12);
    const auto b = fusion::generate_greedy(store, dec, visual, prompt, 12);
    CHECK(a.ids == b.ids);
    CHECK(a.truncated == b.truncated);
  }

  SUBCASE("rigged decoder spells a fixed sequence") {
    // Residual branches are zeroed so each position's hidden state is its own
    // scaled one-hot embedding; the head maps token k's direction to the
    // next token of the chain.
    for (const auto& path : store.paths()) {
      if (path.find("attn.o") != std::string::npos || path.find("mlp.fc2") != std::string::npos) {
        store.value(path).data().setZero();
      }
    }
    const std::vector<int> chain{fusion::text::kBos, 'h', 'i', '!', fusion::text::kEos};
    auto& embed = store.value("decoder.embed");
    auto& head = store.value("decoder.lm_head.weight");
    head.data().setZero();
    for (Index k = 0; k + 1 < static_cast<Index>(chain.size()); ++k) {
      auto row = embed.matrix().row(chain[static_cast<std::size_t>(k)]);
      row.setZero();
      row(k) = 100.0;
      head.matrix()(k, chain[static_cast<std::size_t>(k + 1)]) = 1.0;
    }
    const auto g = fusion::generate_greedy(store, dec, Matrix(0, 16), {}, 10);
    CHECK(g.ids == std::vector<int>{'h', 'i', '!', fusion::text::kEos});
    CHECK_FALSE(g.truncated);

    const auto one = fusion::generate_greedy(store, dec, Matrix(0, 16), {}, 1);
    CHECK(one.ids == std::vector<int>{'h'});
    CHECK(one.truncated);

    const std::vector<int> at_end{'h', 'i', '!'};
    const auto stop = fusion::generate_greedy(store, dec, Matrix(0, 16), at_end, 1);
    CHECK(stop.ids == std::vector<int>{fusion::text::kEos});
    CHECK_FALSE(stop.truncated);
  }
}

TEST_CASE("argmax ties go to the lowest id") {
  nx::RowVector v(5);
  v << 0.0, 2.0, -1.0, 2.0, 1.0;
  CHECK(fusion::argmax_lowest(v) == 1);
}

TEST_CASE("decoder is causal") {
  const fusion::DecoderStub dec(fusion::DecoderConfig{});
  nx::ParamStore store;
  nx::Rng rng(11);
  dec.init_params(store, rng);
  for (int probe = 0; probe < 10; ++probe) {
    const Matrix visual = random_matrix(3, 16, rng);
    std::vector<int> ids;
    for (int i = 0; i < 6; ++i) ids.push_back(static_cast<int>(rng.integer(0, 258)));
    const Index total = 3 + 6;
    const Index t = rng.integer(0, total - 2);
    const Index p = rng.integer(t + 1, total - 1);
    Matrix visual2 = visual;
    std::vector<int> ids2 = ids;
    if (p < 3) {
      visual2.row(p) = random_matrix(1, 16, rng);
    } else {
      ids2[static_cast<std::size_t>(p - 3)] = (ids2[static_cast<std::size_t>(p - 3)] + 1) % 259;
    }
    ag::Tape tape(false);
    ag::ParamBinder params(tape, store);
    const Matrix a = dec.logits_all(params, tape.constant(visual), ids).value();
    const Matrix b = dec.logits_all(params, tape.constant(visual2), ids2).value();
    CHECK(a.topRows(t + 1) == b.topRows(t + 1));
    CHECK_FALSE(a.bottomRows(total - p) == b.bottomRows(total - p));
  }
}

TEST_CASE("gradients reach the hierarchical projector through the decoder loss") {
  const fusion::VicaModel model(train::toy_training_model(), 12);
  nx::ParamStore store = model.params();
  store.set_trainable_prefixes({"hiera_projector"});
  const Tensor video = fusion::synthetic_video(4, 2, 40);
  const auto text = fusion::text::encode("red");
  const nx::LossBuilder f = [&](ag::Tape&, ag::ParamBinder& p) {
    const auto out = model.encode_video(p, video);
    return fusion::decode_loss(p, model.decoder(), out.fused, text);
  };
  for (const char* leaf : {"hiera_projector.fc1.bias", "hiera_projector.fc2.weight"}) {
    CAPTURE(leaf);
    CHECK(nx::grad_check(f, store, leaf, 1e-5) < 1e-4);
  }
}
