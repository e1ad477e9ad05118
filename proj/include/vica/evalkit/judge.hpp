#pragma once

// Description-quality judging: prompt assembly over four candidate
// descriptions, score parsing, an external grader client with retries and an
// offline fixture mode, and per-model aggregation.

#include <array>
#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vica::eval {

inline constexpr std::array<char, 4> kJudgeLabels = {'A', 'B', 'C', 'D'};

// Keys "A".."D" -> description text.
using Descriptions = std::map<std::string, std::string>;

std::string build_judge_prompt(const Descriptions& descriptions);

struct JudgeScores {
  std::array<int, 4> score{};  // indexed like kJudgeLabels

  int operator[](char label) const;
  bool operator==(const JudgeScores&) const = default;
};

// Reads the last fenced block of the response as a JSON object with integer
// scores 0..10 for A-D. Anything else is a kParse error naming the defect.
JudgeScores parse_judge_scores(const std::string& response);

// Renders a response in the format the prompt requests (used for fixtures and
// echo round-trips).
std::string format_judge_scores(const JudgeScores& s);

// ---- client ----------------------------------------------------------------

struct JudgeRequest {
  std::string id;  // stable per video; used for fixture lookup and ordering
  std::string prompt;
};

// Outcome of one transport attempt. `status` is the HTTP status when a
// response arrived; `network_error` is set when none did.
struct TransportReply {
  std::optional<std::string> network_error;
  int status = 0;
  std::string body;
};
using Transport = std::function<TransportReply(const JudgeRequest&)>;

struct JudgeEndpoint {
  std::string url = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4.1-mini";
  std::string api_key;
  std::chrono::seconds timeout{120};
};

// Environment: JUDGE_API_KEY (required online), JUDGE_ENDPOINT and
// JUDGE_MODEL (optional overrides).
JudgeEndpoint endpoint_from_env();

// HTTP(S) chat-completions transport; the reply body is the assistant text.
Transport http_transport(const JudgeEndpoint& endpoint);
// Offline mode: reply body is the bytes of <dir>/<id>.txt, unchanged.
Transport fixture_transport(const std::string& dir);

struct AuditEntry {
  std::string id;
  int attempt = 0;
  std::string request;
  std::string outcome;  // "ok", "network: ...", "status N"
  std::string response;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};  // doubles after each failure
};

class JudgeClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit JudgeClient(Transport transport, RetryPolicy retry = {}, Sleeper sleep = {});

  // Returns the raw response text. Throws kTransport when every attempt failed
  // without a response, kService on a non-success status (body excerpt in the
  // message). Attempts are appended to `audit` when given.
  std::string complete(const JudgeRequest& request, std::vector<AuditEntry>* audit = nullptr) const;

 private:
  Transport transport_;
  RetryPolicy retry_;
  Sleeper sleep_;
};

struct JudgeOutcome {
  std::string id;
  std::string response;
  JudgeScores scores;
  std::vector<AuditEntry> audit;
};

// Runs the requests with at most `parallelism` in flight; results come back
// sorted by id regardless of completion order. The first failure is rethrown
// after all workers stop.
std::vector<JudgeOutcome> run_judging(const JudgeClient& client,
                                      std::vector<JudgeRequest> requests,
                                      std::size_t parallelism = 4);

struct JudgeAggregate {
  std::size_t videos = 0;
  std::array<double, 4> mean{};  // per model label
};

JudgeAggregate aggregate_scores(std::span<const JudgeScores> scores);
std::string render_aggregate_csv(const JudgeAggregate& a);
std::string render_aggregate_chart(const JudgeAggregate& a);
std::string render_audit_log(std::span<const JudgeOutcome> outcomes);

} // namespace vica::eval
