#pragma once

// Benchmark scorers: prediction records, multiple-choice accuracy and mean
// relative accuracy (MRA) for numerical answers.

#include <array>
#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vica::eval {

// Column order of the benchmark table: four numerical tasks, then four
// multiple-choice tasks.
enum class Task {
  kObjCount,
  kAbsDist,
  kObjSize,
  kRoomSize,
  kRelDist,
  kRelDir,
  kRoutePlan,
  kApprOrder,
};
inline constexpr std::size_t kTaskCount = 8;

enum class AnswerKind { kNumeric, kMultipleChoice };

const std::array<Task, kTaskCount>& all_tasks();
std::string_view task_key(Task t);     // "obj_count"
std::string_view task_header(Task t);  // "Obj. Count"
AnswerKind task_kind(Task t);
std::string_view kind_key(AnswerKind k);  // "numeric" | "multiple_choice"
std::optional<Task> parse_task(std::string_view key);
std::optional<AnswerKind> parse_kind(std::string_view key);

// A predicted value is either a number, an option letter, or absent (the model
// produced nothing parseable), which always scores as wrong.
using Answer = std::variant<std::monostate, double, std::string>;

struct PredictionRecord {
  Task task = Task::kObjCount;
  std::string question_id;
  AnswerKind kind = AnswerKind::kNumeric;
  Answer predicted;
  Answer gold;
};

// Line-delimited JSON, one object per line:
//   {"task": "obj_count", "question_id": "q17", "kind": "numeric",
//    "predicted": 9, "gold": 10}
// Blank lines are skipped; any malformed line aborts with its line number.
std::vector<PredictionRecord> read_predictions(std::istream& in);
std::vector<PredictionRecord> load_predictions(const std::string& path);
std::string to_json_line(const PredictionRecord& r);

// The ten thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> default_mra_thresholds();

// 100 x exact-match fraction over option letters, case-insensitive.
double score_mcq(std::span<const PredictionRecord> records);

// 100 x mean over records and thresholds of [ |pred - gold| / |gold| < 1 - theta ].
double score_mra(std::span<const PredictionRecord> records,
                 std::span<const double> thresholds);
double score_mra(std::span<const PredictionRecord> records);

} // namespace vica::eval
