#include "vica/training.hpp"

#include "vica/error.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <cmath>
#include <numeric>
#include <sstream>

namespace vica::train {

const char* task_name(TaskKind k) {
  switch (k) {
    case TaskKind::kAlignment: return "alignment";
    case TaskKind::kCaptioning: return "captioning";
    case TaskKind::kSpatialQa: return "spatial_qa";
    case TaskKind::kThinking: return "thinking";
  }
  return "?";
}

TaskKind parse_task(const std::string& name) {
  for (TaskKind k : {TaskKind::kAlignment, TaskKind::kCaptioning, TaskKind::kSpatialQa,
                     TaskKind::kThinking}) {
    if (name == task_name(k)) return k;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown task '" + name + "'");
}

void StageSpec::validate() const {
  for (const auto& t : trainable) {
    for (const auto& f : frozen) {
      if (nx::path_under(t, f) || nx::path_under(f, t)) {
        throw Error(ErrorCode::kInvalidConfig,
                    name + ": prefix '" + t + "' is both trainable and frozen");
      }
    }
  }
  if (std::find(frozen.begin(), frozen.end(), fusion::prefix::kHieraEncoder) == frozen.end()) {
    throw Error(ErrorCode::kInvalidConfig, name + ": hierarchical encoder must stay frozen");
  }
  if (learning_rate < 0.0) throw Error(ErrorCode::kInvalidConfig, "negative learning rate");
}

std::vector<StageSpec> build_stage_schedule() {
  namespace p = fusion::prefix;
  std::vector<std::string> all_but_hiera;
  for (const auto& pre : p::all()) {
    if (pre != p::kHieraEncoder) all_but_hiera.push_back(pre);
  }
  std::vector<std::string> all_but_projector;
  for (const auto& pre : p::all()) {
    if (pre != p::kHieraProjector) all_but_projector.push_back(pre);
  }
  std::vector<StageSpec> s;
  s.push_back({"stage-1", {p::kHieraProjector}, all_but_projector, 1e-3, 1,
               TaskKind::kAlignment, false});
  s.push_back({"stage-2", all_but_hiera, {p::kHieraEncoder}, 1e-5, 1, TaskKind::kCaptioning,
               false});
  s.push_back({"stage-3", all_but_hiera, {p::kHieraEncoder}, 1e-5, 1, TaskKind::kSpatialQa,
               false});
  s.push_back({"thinking", all_but_hiera, {p::kHieraEncoder}, 1e-5, 1, TaskKind::kThinking,
               true});
  for (const auto& spec : s) spec.validate();
  return s;
}

StageSpec base_pretraining_stage() {
  namespace p = fusion::prefix;
  StageSpec s{"base",
              {p::kFlatEncoder, p::kFlatProjector, std::string(p::kRowTokens) + ".flat",
               p::kDecoder},
              {p::kHieraEncoder, p::kHieraProjector, std::string(p::kRowTokens) + ".hiera"},
              3e-3,
              1,
              TaskKind::kAlignment,
              false,
              false};
  s.validate();
  return s;
}

const StageSpec& find_stage(const std::vector<StageSpec>& schedule, const std::string& name) {
  for (const auto& s : schedule) {
    if (s.name == name) return s;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown stage '" + name + "'");
}

void apply_stage_mask(const StageSpec& spec, nx::ParamStore& store) {
  for (auto& [path, leaf] : store) {
    bool on = false;
    for (const auto& t : spec.trainable) on = on || nx::path_under(path, t);
    for (const auto& f : spec.frozen) on = on && !nx::path_under(path, f);
    leaf.trainable = on;
  }
}

// ---- synthetic data --------------------------------------------------------

namespace {

std::array<double, 3> color_rgb(const std::string& color) {
  if (color == "red") return {0.9, 0.1, 0.1};
  if (color == "green") return {0.1, 0.8, 0.1};
  if (color == "blue") return {0.1, 0.2, 0.9};
  if (color == "yellow") return {0.9, 0.9, 0.1};
  throw Error(ErrorCode::kInput, "unknown colour " + color);
}

std::vector<int> with_eos(const std::string& s) {
  auto ids = fusion::text::encode(s);
  ids.push_back(fusion::text::kEos);
  return ids;
}

std::vector<int> with_sep(const std::string& s) {
  auto ids = fusion::text::encode(s);
  ids.push_back(fusion::text::kSep);
  return ids;
}

} // namespace

Tensor render_scene(std::uint64_t seed, int blobs, const std::string& color, Index frames,
                    Index size) {
  constexpr Index kCells = 4;
  if (blobs < 0 || blobs > kCells * kCells) {
    throw Error(ErrorCode::kInput, "blob count must lie in [0, 16]");
  }
  nx::Rng rng(seed);
  std::vector<Index> cells(kCells * kCells);
  std::iota(cells.begin(), cells.end(), 0);
  for (Index i = static_cast<Index>(cells.size()) - 1; i > 0; --i) {
    std::swap(cells[static_cast<std::size_t>(i)],
              cells[static_cast<std::size_t>(rng.integer(0, i))]);
  }
  const Index cell = size / kCells;
  const Index side = std::max<Index>(2, cell / 2);
  struct Square { Index y, x; };
  std::vector<Square> squares;
  for (int b = 0; b < blobs; ++b) {
    const Index c = cells[static_cast<std::size_t>(b)];
    // Offsets keep a one-pixel margin so squares in adjacent cells never touch.
    const Index oy = 1 + rng.integer(0, cell - side - 2);
    const Index ox = 1 + rng.integer(0, cell - side - 2);
    squares.push_back({(c / kCells) * cell + oy, (c % kCells) * cell + ox});
  }
  const auto rgb = color_rgb(color);
  Tensor video({frames, size, size, 3});
  for (Index t = 0; t < frames; ++t) {
    auto m = video.slab(t);
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index ch = 0; ch < 3; ++ch) m(i, ch) = 0.05 + 0.05 * rng.uniform();
    }
    for (const Square& s : squares) {
      for (Index y = s.y; y < s.y + side; ++y) {
        for (Index x = s.x; x < s.x + side; ++x) {
          for (Index ch = 0; ch < 3; ++ch) m(y * size + x, ch) = rgb[static_cast<std::size_t>(ch)];
        }
      }
    }
  }
  return video;
}

Dataset synthetic_task(TaskKind kind, std::uint64_t seed, const TaskShape& shape) {
  Dataset d;
  d.kind = kind;
  nx::Rng rng(seed);
  for (Index i = 0; i < shape.samples; ++i) {
    Sample s;
    s.blob_count = static_cast<int>(rng.integer(1, 4));
    s.color = palette()[static_cast<std::size_t>(rng.integer(0, 3))];
    s.video = render_scene(rng.next(), s.blob_count, s.color, shape.frames, shape.frame_size);
    const std::string count = std::to_string(s.blob_count);
    switch (kind) {
      case TaskKind::kAlignment:
        s.answer = s.color;
        break;
      case TaskKind::kCaptioning:
        s.answer = count + " " + s.color + " blobs";
        break;
      case TaskKind::kSpatialQa:
        s.prompt = with_sep("how many blobs?");
        s.answer = count;
        break;
      case TaskKind::kThinking:
        s.prompt = with_sep("how many blobs?");
        s.answer = "i see " + count + " " + s.color + " blobs. answer: " + count;
        break;
    }
    s.target = with_eos(s.answer);
    d.samples.push_back(std::move(s));
  }
  return d;
}

// ---- loss log --------------------------------------------------------------

std::size_t LossLog::default_window() const {
  return std::max<std::size_t>(1, entries.size() / 10);
}

double LossLog::initial_mean(std::size_t window) const {
  window = std::min(window, entries.size());
  if (window == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < window; ++i) s += entries[i].second;
  return s / static_cast<double>(window);
}

double LossLog::final_mean(std::size_t window) const {
  window = std::min(window, entries.size());
  if (window == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = entries.size() - window; i < entries.size(); ++i) s += entries[i].second;
  return s / static_cast<double>(window);
}

std::string LossLog::csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "step,loss\n";
  for (const auto& [step, loss] : entries) os << step << ',' << loss << '\n';
  return os.str();
}

// ---- optimizer -------------------------------------------------------------

void AdamW::step(nx::ParamStore& store, const std::map<std::string, Tensor>& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& [path, g] : grads) {
    nx::Leaf& leaf = store.leaf(path);
    if (!leaf.trainable) continue;
    auto [mit, mnew] = m_.try_emplace(path, nx::Vector::Zero(g.size()));
    auto [vit, vnew] = v_.try_emplace(path, nx::Vector::Zero(g.size()));
    nx::Vector& m = mit->second;
    nx::Vector& v = vit->second;
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g.data();
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.data().cwiseAbs2();
    nx::Vector& p = leaf.value.data();
    const nx::Vector update =
        (m / bc1).array() / ((v / bc2).array().sqrt() + cfg_.eps) + cfg_.weight_decay * p.array();
    p -= lr_ * update;
  }
}

// ---- loop ------------------------------------------------------------------

std::pair<std::vector<int>, std::vector<bool>> sequence_for(const Sample& s) {
  std::vector<int> ids = s.prompt;
  ids.insert(ids.end(), s.target.begin(), s.target.end());
  std::vector<bool> mask(s.prompt.size(), false);
  mask.resize(ids.size(), true);
  return {std::move(ids), std::move(mask)};
}

ag::Var sample_loss(ag::ParamBinder& params, const fusion::VicaModel& model,
                    const Sample& sample, bool hier_stream) {
  const fusion::FusedOutput out = model.encode_video(params, sample.video, hier_stream);
  auto [ids, mask] = sequence_for(sample);
  std::unique_ptr<bool[]> flags(new bool[mask.size()]);
  for (std::size_t i = 0; i < mask.size(); ++i) flags[i] = mask[i];
  return fusion::decode_loss(params, model.decoder(), out.fused, ids,
                             std::span<const bool>(flags.get(), mask.size()));
}

LossLog run_stage(const StageSpec& spec, fusion::VicaModel& model, const Dataset& data,
                  const RunOptions& opts) {
  if (opts.steps < 1) throw Error(ErrorCode::kInvalidConfig, "steps must be >= 1");
  if (data.samples.empty()) throw Error(ErrorCode::kInput, "empty dataset");
  spec.validate();
  apply_stage_mask(spec, model.params());
  const double lr = opts.lr_override >= 0.0 ? opts.lr_override : spec.learning_rate;
  AdamW opt(lr);
  nx::Rng rng(opts.seed);
  LossLog log;
  const auto n = static_cast<std::int64_t>(data.samples.size());
  for (std::int64_t step = 0; step < opts.steps; ++step) {
    ag::Tape tape;
    ag::ParamBinder params(tape, model.params());
    std::vector<ag::Var> losses;
    for (Index b = 0; b < opts.batch_size; ++b) {
      const auto idx = static_cast<std::size_t>(rng.integer(0, n - 1));
      losses.push_back(sample_loss(params, model, data.samples[idx], spec.hier_stream));
    }
    ag::Var total = ag::scale(ag::sum(ag::concat_rows(losses)),
                              1.0 / static_cast<double>(opts.batch_size));
    const double loss = total.value()(0, 0);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kDivergence,
                  spec.name + ": non-finite loss at step " + std::to_string(step));
    }
    tape.backward(total);
    opt.step(model.params(), params.gradients());
    log.entries.emplace_back(step, loss);
  }
  return log;
}

std::map<std::string, std::uint64_t> hashes_under(const nx::ParamStore& store,
                                                  const std::vector<std::string>& prefixes,
                                                  bool invert) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& [path, leaf] : store) {
    bool under = false;
    for (const auto& p : prefixes) under = under || nx::path_under(path, p);
    if (under != invert) out.emplace(path, nx::content_hash(leaf.value));
  }
  return out;
}

fusion::ModelConfig toy_training_model() {
  fusion::ModelConfig cfg;
  cfg.budget.n_total = 2;
  cfg.budget.n_hiera = 1;
  cfg.budget.s_stage = 3;
  cfg.budget.s_pool = 1;
  cfg.budget.flat_pool = 2;
  return cfg;
}

} // namespace vica::train
