#pragma once

// Staged training at toy scale: per-stage trainable masks and learning rates,
// synthetic stand-in datasets, an AdamW loop and loss logging.

#include "vica/fusion.hpp"
#include "vica/numerics.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace vica::train {

using nx::Index;
using nx::Tensor;

enum class TaskKind { kAlignment, kCaptioning, kSpatialQa, kThinking };
const char* task_name(TaskKind k);
TaskKind parse_task(const std::string& name);

struct StageSpec {
  std::string name;
  std::vector<std::string> trainable;  // ParamStore path prefixes
  std::vector<std::string> frozen;
  double learning_rate = 0.0;
  int epochs = 1;
  TaskKind dataset = TaskKind::kAlignment;
  bool optional = false;
  bool hier_stream = true;  // false runs the flat stream alone

  void validate() const;
};

// stage-1, stage-2, stage-3, thinking.
std::vector<StageSpec> build_stage_schedule();

// Stand-in for the pretrained single-encoder checkpoint the schedule starts
// from: trains the flat path and decoder with the hierarchical stream absent,
// leaving the hierarchical projector at its Xavier initialization.
StageSpec base_pretraining_stage();
const StageSpec& find_stage(const std::vector<StageSpec>& schedule, const std::string& name);

// Applies a stage's masks to the store: trainable iff under a trainable prefix
// and under no frozen prefix.
void apply_stage_mask(const StageSpec& spec, nx::ParamStore& store);

struct Sample {
  Tensor video;  // (F, S, S, 3) in [0, 1]
  std::vector<int> prompt;
  std::vector<int> target;  // ends with EOS
  std::string answer;
  int blob_count = 0;
  std::string color;
};

struct Dataset {
  TaskKind kind = TaskKind::kAlignment;
  std::vector<Sample> samples;
};

struct TaskShape {
  Index samples = 32;
  Index frames = 8;
  Index frame_size = 64;
};

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> kColors{"red", "green", "blue", "yellow"};
  return kColors;
}

// Renders a static scene of `blobs` non-touching solid squares of one colour
// on a dark background, with small per-frame jitter of the background noise.
Tensor render_scene(std::uint64_t seed, int blobs, const std::string& color, Index frames,
                    Index size);

Dataset synthetic_task(TaskKind kind, std::uint64_t seed, const TaskShape& shape = {});

struct LossLog {
  std::vector<std::pair<std::int64_t, double>> entries;

  double initial_mean(std::size_t window) const;
  double final_mean(std::size_t window) const;
  std::size_t default_window() const;
  std::string csv() const;
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Decoupled-weight-decay Adam over the trainable leaves of a store.
class AdamW {
 public:
  AdamW(double lr, AdamWConfig cfg = {}) : lr_(lr), cfg_(cfg) {}
  void step(nx::ParamStore& store, const std::map<std::string, Tensor>& grads);
  std::int64_t steps_taken() const { return t_; }

 private:
  double lr_;
  AdamWConfig cfg_;
  std::int64_t t_ = 0;
  std::map<std::string, nx::Vector> m_;
  std::map<std::string, nx::Vector> v_;
};

struct RunOptions {
  std::int64_t steps = 100;
  Index batch_size = 4;
  std::uint64_t seed = 0;
  double lr_override = -1.0;  // < 0 keeps the stage learning rate
};

// Prompt + target token sequence and its loss mask (targets only).
std::pair<std::vector<int>, std::vector<bool>> sequence_for(const Sample& s);

ag::Var sample_loss(ag::ParamBinder& params, const fusion::VicaModel& model,
                    const Sample& sample, bool hier_stream = true);

LossLog run_stage(const StageSpec& spec, fusion::VicaModel& model, const Dataset& data,
                  const RunOptions& opts);

// Frozen-leaf audit helpers.
std::map<std::string, std::uint64_t> hashes_under(const nx::ParamStore& store,
                                                  const std::vector<std::string>& prefixes,
                                                  bool invert = false);

// Model configuration used by the training harness and CLI.
fusion::ModelConfig toy_training_model();

} // namespace vica::train
