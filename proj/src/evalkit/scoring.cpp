#include "vica/evalkit/scoring.hpp"

#include "vica/error.hpp"

#include "json.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace vica::eval {

namespace {

struct TaskInfo {
  Task task;
  const char* key;
  const char* header;
  AnswerKind kind;
};

constexpr TaskInfo kTasks[kTaskCount] = {
    {Task::kObjCount, "obj_count", "Obj. Count", AnswerKind::kNumeric},
    {Task::kAbsDist, "abs_dist", "Abs. Dist.", AnswerKind::kNumeric},
    {Task::kObjSize, "obj_size", "Obj. Size", AnswerKind::kNumeric},
    {Task::kRoomSize, "room_size", "Room Size", AnswerKind::kNumeric},
    {Task::kRelDist, "rel_dist", "Rel. Dist.", AnswerKind::kMultipleChoice},
    {Task::kRelDir, "rel_dir", "Rel. Dir.", AnswerKind::kMultipleChoice},
    {Task::kRoutePlan, "route_plan", "Route Plan", AnswerKind::kMultipleChoice},
    {Task::kApprOrder, "appr_order", "Appr. Order", AnswerKind::kMultipleChoice},
};

const TaskInfo& info(Task t) { return kTasks[static_cast<std::size_t>(t)]; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Error line_error(ErrorCode code, std::size_t line, const std::string& what) {
  return Error(code, "predictions line " + std::to_string(line) + ": " + what);
}

Answer answer_from_json(const nlohmann::json& j, AnswerKind kind, const char* field,
                        std::size_t line, bool allow_null) {
  if (j.is_null()) {
    if (allow_null) return std::monostate{};
    throw line_error(ErrorCode::kRecord, line, std::string(field) + " must not be null");
  }
  if (kind == AnswerKind::kNumeric) {
    if (!j.is_number()) {
      throw line_error(ErrorCode::kRecord, line, std::string(field) + " must be a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      throw line_error(ErrorCode::kRecord, line, std::string(field) + " is not finite");
    }
    return v;
  }
  if (!j.is_string() || j.get<std::string>().empty()) {
    throw line_error(ErrorCode::kRecord, line,
                     std::string(field) + " must be a non-empty option letter");
  }
  return j.get<std::string>();
}

void require_records(std::span<const PredictionRecord> records, AnswerKind kind,
                     const char* scorer) {
  if (records.empty()) {
    throw Error(ErrorCode::kEmptySubset, std::string(scorer) + ": no records, score undefined");
  }
  for (const auto& r : records) {
    if (r.kind != kind) {
      throw Error(ErrorCode::kKind, std::string(scorer) + ": record " + r.question_id +
                                        " is " + std::string(kind_key(r.kind)) +
                                        ", expected " + std::string(kind_key(kind)));
    }
  }
}

} // namespace

const std::array<Task, kTaskCount>& all_tasks() {
  static const std::array<Task, kTaskCount> tasks = {
      Task::kObjCount, Task::kAbsDist,  Task::kObjSize,   Task::kRoomSize,
      Task::kRelDist,  Task::kRelDir,   Task::kRoutePlan, Task::kApprOrder};
  return tasks;
}

std::string_view task_key(Task t) { return info(t).key; }
std::string_view task_header(Task t) { return info(t).header; }
AnswerKind task_kind(Task t) { return info(t).kind; }

std::string_view kind_key(AnswerKind k) {
  return k == AnswerKind::kNumeric ? "numeric" : "multiple_choice";
}

std::optional<Task> parse_task(std::string_view key) {
  for (const auto& t : kTasks) {
    if (key == t.key) return t.task;
  }
  return std::nullopt;
}

std::optional<AnswerKind> parse_kind(std::string_view key) {
  if (key == "numeric") return AnswerKind::kNumeric;
  if (key == "multiple_choice") return AnswerKind::kMultipleChoice;
  return std::nullopt;
}

std::vector<PredictionRecord> read_predictions(std::istream& in) {
  std::vector<PredictionRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw line_error(ErrorCode::kParse, line, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw line_error(ErrorCode::kParse, line, "expected a JSON object");
    for (const char* field : {"task", "question_id", "kind", "predicted", "gold"}) {
      if (!j.contains(field)) {
        throw line_error(ErrorCode::kRecord, line, std::string("missing field '") + field + "'");
      }
    }
    if (!j["task"].is_string() || !j["kind"].is_string()) {
      throw line_error(ErrorCode::kRecord, line, "task and kind must be strings");
    }
    PredictionRecord r;
    const auto task = parse_task(j["task"].get<std::string>());
    if (!task) {
      throw line_error(ErrorCode::kRecord, line, "unknown task '" + j["task"].get<std::string>() + "'");
    }
    const auto kind = parse_kind(j["kind"].get<std::string>());
    if (!kind) {
      throw line_error(ErrorCode::kRecord, line, "unknown kind '" + j["kind"].get<std::string>() + "'");
    }
    if (*kind != task_kind(*task)) {
      throw line_error(ErrorCode::kRecord, line,
                       std::string("task ") + std::string(task_key(*task)) + " is " +
                           std::string(kind_key(task_kind(*task))) + ", record says " +
                           std::string(kind_key(*kind)));
    }
    r.task = *task;
    r.kind = *kind;
    const auto& qid = j["question_id"];
    if (qid.is_string()) {
      r.question_id = qid.get<std::string>();
    } else if (qid.is_number_integer()) {
      r.question_id = std::to_string(qid.get<long long>());
    } else {
      throw line_error(ErrorCode::kRecord, line, "question_id must be a string or integer");
    }
    r.predicted = answer_from_json(j["predicted"], r.kind, "predicted", line, true);
    r.gold = answer_from_json(j["gold"], r.kind, "gold", line, false);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PredictionRecord> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open predictions file " + path);
  return read_predictions(in);
}

std::string to_json_line(const PredictionRecord& r) {
  auto answer = [](const Answer& a) -> nlohmann::json {
    if (const auto* d = std::get_if<double>(&a)) return *d;
    if (const auto* s = std::get_if<std::string>(&a)) return *s;
    return nullptr;
  };
  nlohmann::ordered_json j;
  j["task"] = std::string(task_key(r.task));
  j["question_id"] = r.question_id;
  j["kind"] = std::string(kind_key(r.kind));
  j["predicted"] = answer(r.predicted);
  j["gold"] = answer(r.gold);
  return j.dump();
}

std::vector<double> default_mra_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back(static_cast<double>(50 + 5 * k) / 100.0);
  return t;
}

double score_mcq(std::span<const PredictionRecord> records) {
  require_records(records, AnswerKind::kMultipleChoice, "score_mcq");
  std::size_t correct = 0;
  for (const auto& r : records) {
    const auto* p = std::get_if<std::string>(&r.predicted);
    const auto* g = std::get_if<std::string>(&r.gold);
    if (g == nullptr) {
      throw Error(ErrorCode::kRecord, "score_mcq: record " + r.question_id + " has no gold option");
    }
    if (p != nullptr && lower(*p) == lower(*g)) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(records.size());
}

double score_mra(std::span<const PredictionRecord> records, std::span<const double> thresholds) {
  require_records(records, AnswerKind::kNumeric, "score_mra");
  if (thresholds.empty()) throw Error(ErrorCode::kInput, "score_mra: empty threshold set");
  for (double th : thresholds) {
    if (!(th >= 0.0 && th < 1.0)) {
      throw Error(ErrorCode::kInput, "score_mra: threshold outside [0, 1)");
    }
  }
  // Integer success count keeps the percentage exact (8 of 10 -> 80.0).
  std::size_t hits = 0;
  for (const auto& r : records) {
    const auto* g = std::get_if<double>(&r.gold);
    if (g == nullptr) {
      throw Error(ErrorCode::kRecord, "score_mra: record " + r.question_id + " has no gold value");
    }
    if (*g == 0.0) {
      throw Error(ErrorCode::kRecord,
                  "score_mra: record " + r.question_id + " has gold 0; relative error undefined");
    }
    const auto* p = std::get_if<double>(&r.predicted);
    if (p == nullptr) continue;
    const double rel = std::abs(*p - *g) / std::abs(*g);
    for (double th : thresholds) {
      if (rel < 1.0 - th) ++hits;
    }
  }
  return 100.0 * static_cast<double>(hits) /
         static_cast<double>(records.size() * thresholds.size());
}

double score_mra(std::span<const PredictionRecord> records) {
  const auto th = default_mra_thresholds();
  return score_mra(records, th);
}

} // namespace vica::eval
