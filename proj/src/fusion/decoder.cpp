#include "vica/error.hpp"
#include "vica/fusion.hpp"

#include <cmath>

namespace vica::fusion {
namespace {

std::string join(const std::string& a, const std::string& b) { return a + "." + b; }

ag::Var norm(ag::ParamBinder& p, const std::string& name, const ag::Var& x) {
  return ag::layer_norm(x, p(join(name, "gamma")), p(join(name, "beta")));
}

ag::Var dense(ag::ParamBinder& p, const std::string& name, const ag::Var& x) {
  return ag::linear(x, p(join(name, "weight")), p(join(name, "bias")));
}

} // namespace

Matrix sinusoidal_positions(Index length, Index width) {
  Matrix pe(length, width);
  for (Index pos = 0; pos < length; ++pos) {
    for (Index i = 0; i < width; ++i) {
      const double freq =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
      const double angle = static_cast<double>(pos) * freq;
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

DecoderStub::DecoderStub(DecoderConfig cfg) : cfg_(cfg) {
  if (cfg_.d_model < 1 || cfg_.heads < 1 || cfg_.d_model % cfg_.heads != 0) {
    throw Error(ErrorCode::kInvalidConfig, "decoder width must be divisible by head count");
  }
  if (cfg_.vocab_size < text::kVocabSize) {
    throw Error(ErrorCode::kInvalidConfig, "vocabulary must cover bytes and specials");
  }
}

void DecoderStub::init_params(nx::ParamStore& store, nx::Rng& rng) const {
  const std::string root = kPrefix;
  const Index d = cfg_.d_model;
  auto add_dense = [&](const std::string& name, Index in, Index out) {
    store.add(join(name, "weight"), nx::xavier_init({in, out}, rng));
    store.add(join(name, "bias"), Tensor({out}));
  };
  auto add_norm = [&](const std::string& name) {
    store.add(join(name, "gamma"), Tensor::filled({d}, 1.0));
    store.add(join(name, "beta"), Tensor({d}));
  };
  store.add(join(root, "embed"), nx::normal_tensor({cfg_.vocab_size, d}, 1.0, rng));
  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string blk = join(root, "layers." + std::to_string(l));
    add_norm(join(blk, "ln1"));
    for (const char* n : {"attn.q", "attn.k", "attn.v", "attn.o"}) add_dense(join(blk, n), d, d);
    add_norm(join(blk, "ln2"));
    add_dense(join(blk, "mlp.fc1"), d, cfg_.mlp_ratio * d);
    add_dense(join(blk, "mlp.fc2"), cfg_.mlp_ratio * d, d);
  }
  add_norm(join(root, "ln_f"));
  add_dense(join(root, "lm_head"), d, cfg_.vocab_size);
}

ag::Var DecoderStub::hidden(ag::ParamBinder& params, const ag::Var& visual,
                            std::span<const int> ids) const {
  const std::string root = kPrefix;
  if (visual.valid() && visual.rows() > 0 && visual.cols() != cfg_.d_model) {
    throw Error(ErrorCode::kShape, "decoder: visual tokens have width " +
                                       std::to_string(visual.cols()) + ", expected " +
                                       std::to_string(cfg_.d_model));
  }
  ag::Var emb = ag::embedding(params(join(root, "embed")), ids);
  ag::Var x = emb;
  if (visual.valid() && visual.rows() > 0) {
    const ag::Var parts[] = {visual, emb};
    x = ag::concat_rows(parts);
  }
  ag::Tape& tape = emb.tape();
  x = ag::add(x, tape.constant(sinusoidal_positions(x.rows(), cfg_.d_model)));
  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string blk = join(root, "layers." + std::to_string(l));
    ag::Var h = norm(params, join(blk, "ln1"), x);
    ag::Var a = ag::attention(dense(params, join(blk, "attn.q"), h),
                              dense(params, join(blk, "attn.k"), h),
                              dense(params, join(blk, "attn.v"), h), cfg_.heads,
                              /*causal=*/true);
    x = ag::add(x, dense(params, join(blk, "attn.o"), a));
    h = norm(params, join(blk, "ln2"), x);
    h = ag::gelu(dense(params, join(blk, "mlp.fc1"), h));
    x = ag::add(x, dense(params, join(blk, "mlp.fc2"), h));
  }
  return norm(params, join(root, "ln_f"), x);
}

ag::Var DecoderStub::lm_head(ag::ParamBinder& params, const ag::Var& hidden_rows) const {
  return dense(params, join(kPrefix, "lm_head"), hidden_rows);
}

ag::Var DecoderStub::logits_all(ag::ParamBinder& params, const ag::Var& visual,
                                std::span<const int> ids) const {
  return lm_head(params, hidden(params, visual, ids));
}

ag::Var DecoderStub::text_logits(ag::ParamBinder& params, const ag::Var& visual,
                                 std::span<const int> ids) const {
  ag::Var h = hidden(params, visual, ids);
  const auto n = static_cast<Index>(ids.size());
  return lm_head(params, ag::slice_rows(h, h.rows() - n, n));
}

ag::Var decode_loss(ag::ParamBinder& params, const DecoderStub& decoder,
                    const TokenStream& fused, std::span<const int> text,
                    std::span<const bool> target_mask) {
  if (text.empty()) throw Error(ErrorCode::kInput, "decode_loss needs non-empty text");
  if (!target_mask.empty() && target_mask.size() != text.size()) {
    throw Error(ErrorCode::kShape, "target mask length differs from text length");
  }
  const Index vocab = decoder.config().vocab_size;
  for (int id : text) {
    if (id < 0 || id >= vocab) {
      throw Error(ErrorCode::kVocab, "token id " + std::to_string(id) +
                                         " outside vocabulary of " + std::to_string(vocab));
    }
  }
  std::vector<int> inputs;
  inputs.reserve(text.size());
  inputs.push_back(text::kBos);
  inputs.insert(inputs.end(), text.begin(), text.end() - 1);
  std::vector<int> targets(text.begin(), text.end());
  if (!target_mask.empty()) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (!target_mask[i]) targets[i] = -1;
    }
  }
  ag::Var logits = decoder.text_logits(params, fused.tokens, inputs);
  return ag::cross_entropy(logits, targets);
}

int argmax_lowest(const Eigen::Ref<const nx::RowVector>& logits) {
  int best = 0;
  for (Index i = 1; i < logits.size(); ++i) {
    if (logits(i) > logits(best)) best = static_cast<int>(i);
  }
  return best;
}

Generation generate_greedy(const nx::ParamStore& store, const DecoderStub& decoder,
                           const Matrix& fused_tokens, std::span<const int> prompt_ids,
                           Index max_len, int eos_id) {
  if (max_len < 1) throw Error(ErrorCode::kInput, "max_len must be >= 1");
  std::vector<int> ids;
  ids.push_back(text::kBos);
  ids.insert(ids.end(), prompt_ids.begin(), prompt_ids.end());
  Generation out;
  while (static_cast<Index>(out.ids.size()) < max_len) {
    ag::Tape tape(false);
    ag::ParamBinder params(tape, store);
    ag::Var visual = tape.constant(fused_tokens);
    ag::Var h = decoder.hidden(params, visual, ids);
    ag::Var last = decoder.lm_head(params, ag::slice_rows(h, h.rows() - 1, 1));
    const int next = argmax_lowest(last.value().row(0));
    out.ids.push_back(next);
    ids.push_back(next);
    if (next == eos_id) return out;
  }
  out.truncated = true;
  return out;
}

} // namespace vica::fusion
