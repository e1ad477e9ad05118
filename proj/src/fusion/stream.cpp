#include "vica/error.hpp"
#include "vica/fusion.hpp"

#include <iomanip>
#include <sstream>

namespace vica::fusion {

const char* source_name(Source s) {
  switch (s) {
    case Source::kFlat: return "flat";
    case Source::kHier: return "hier";
    case Source::kText: return "text";
  }
  return "?";
}

TokenStream pool_and_rowtokens(const ag::Var& grid, Index h, Index w, Index s_pool,
                               const ag::Var& row_token, Source encoder,
                               std::int64_t frame_index) {
  if (s_pool < 1) throw Error(ErrorCode::kInvalidConfig, "s_pool must be >= 1");
  const Index ph = budget::pooled_side(h, s_pool);
  const Index pw = budget::pooled_side(w, s_pool);
  ag::Var pooled = (ph == h && pw == w) ? grid : ag::resize_grid(grid, h, w, ph, pw);
  TokenStream out;
  out.tokens = ag::append_row_tokens(pooled, row_token, ph, pw);
  out.provenance.reserve(static_cast<std::size_t>(ph * (pw + 1)));
  for (Index r = 0; r < ph; ++r) {
    for (Index c = 0; c <= pw; ++c) {
      out.provenance.push_back({encoder, frame_index, r, c, c == pw});
    }
  }
  return out;
}

TokenStream concat_streams(std::span<const TokenStream> parts) {
  if (parts.empty()) throw Error(ErrorCode::kShape, "no streams to concatenate");
  if (parts.size() == 1) return parts.front();
  std::vector<ag::Var> vars;
  TokenStream out;
  for (const TokenStream& p : parts) {
    vars.push_back(p.tokens);
    out.provenance.insert(out.provenance.end(), p.provenance.begin(), p.provenance.end());
  }
  out.tokens = ag::concat_rows(vars);
  return out;
}

TokenStream fuse(const TokenStream& flat, const TokenStream& hier) {
  if (hier.length() == 0) return flat;
  if (flat.length() == 0) return hier;
  if (flat.width() != hier.width()) {
    throw Error(ErrorCode::kShape, "fuse: stream widths differ (" +
                                       std::to_string(flat.width()) + " vs " +
                                       std::to_string(hier.width()) + ")");
  }
  const TokenStream parts[] = {flat, hier};
  return concat_streams(parts);
}

ProvenanceSummary summarize(const std::vector<Provenance>& provenance) {
  ProvenanceSummary s;
  for (const Provenance& p : provenance) {
    ++s.tokens[p.encoder];
    if (p.is_row_token) ++s.row_tokens[p.encoder];
    ++s.per_frame[{p.encoder, p.frame_index}];
  }
  return s;
}

std::string render_summary(const ProvenanceSummary& s) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "encoder" << std::right << std::setw(8) << "frame"
     << std::setw(10) << "tokens" << '\n';
  for (const auto& [key, n] : s.per_frame) {
    os << std::left << std::setw(8) << source_name(key.first) << std::right << std::setw(8)
       << key.second << std::setw(10) << n << '\n';
  }
  Index total = 0;
  for (const auto& [src, n] : s.tokens) {
    const auto rt = s.row_tokens.count(src) ? s.row_tokens.at(src) : 0;
    os << std::left << std::setw(8) << source_name(src) << std::right << std::setw(8)
       << "all" << std::setw(10) << n << "  (row tokens " << rt << ")\n";
    total += n;
  }
  os << std::left << std::setw(8) << "fused" << std::right << std::setw(8) << "all"
     << std::setw(10) << total << '\n';
  return os.str();
}

// ---- projector -------------------------------------------------------------

Projector::Projector(std::string prefix, Index in_dim, Index hidden_dim, Index out_dim)
    : prefix_(std::move(prefix)), in_dim_(in_dim), hidden_dim_(hidden_dim), out_dim_(out_dim) {}

void Projector::init_params(nx::ParamStore& store, nx::Rng& rng) const {
  store.add(prefix_ + ".fc1.weight", nx::xavier_init({in_dim_, hidden_dim_}, rng));
  store.add(prefix_ + ".fc1.bias", Tensor({hidden_dim_}));
  store.add(prefix_ + ".fc2.weight", nx::xavier_init({hidden_dim_, out_dim_}, rng));
  store.add(prefix_ + ".fc2.bias", Tensor({out_dim_}));
}

ag::Var Projector::apply(ag::ParamBinder& params, const ag::Var& tokens) const {
  if (tokens.cols() != in_dim_) {
    throw Error(ErrorCode::kShape, prefix_ + ": expected width " + std::to_string(in_dim_) +
                                       ", got " + std::to_string(tokens.cols()));
  }
  ag::Var h = ag::gelu(ag::linear(tokens, params(prefix_ + ".fc1.weight"),
                                  params(prefix_ + ".fc1.bias")));
  return ag::linear(h, params(prefix_ + ".fc2.weight"), params(prefix_ + ".fc2.bias"));
}

TokenStream project(ag::ParamBinder& params, const TokenStream& stream,
                    const Projector& projector) {
  TokenStream out;
  out.provenance = stream.provenance;
  out.tokens = projector.apply(params, stream.tokens);
  return out;
}

// ---- text ------------------------------------------------------------------

namespace text {

std::vector<int> encode(const std::string& s) {
  std::vector<int> ids;
  ids.reserve(s.size());
  for (unsigned char c : s) ids.push_back(c);
  return ids;
}

std::string decode(std::span<const int> ids) {
  std::string s;
  for (int id : ids) {
    if (id >= 0 && id < 256) s.push_back(static_cast<char>(id));
  }
  return s;
}

} // namespace text

} // namespace vica::fusion
