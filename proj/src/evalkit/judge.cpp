#include "vica/evalkit/judge.hpp"

#include "vica/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace vica::eval {

namespace {

constexpr const char* kPromptHead =
    R"(The following are detailed descriptions of the same video, generated by four different Vision-Language Large Models (VLLMs). These models will be referred to as Model A, Model B, Model C, and Model D.

Your task is to critically evaluate and score the output from each of these VLLMs. The scoring scale is from 0 (minimum) to 10 (maximum).

Please ensure your evaluation addresses at least the following dimensions for each model's description:

1.  Richness of Detail: How comprehensive and specific are the details provided about the video's content?
2.  Accuracy: How accurately does the description reflect the presumed events, objects, and context within the video?
3.  Organization/Coherence : How logically structured, clear, and easy to follow is the description? Is there a coherent narrative or flow?
4.  Language Fluency: How natural, grammatically correct, and well-phrased is the language used?
5.  Information Redundancy or Repetition: Does the description contain unnecessary repetition of information or superfluous content?

After providing your detailed textual evaluation for each model, discussing its performance across these dimensions, please conclude by returning only the final scores in the precise JSON format exemplified below.

```json
{
  "A": <score_for_model_A>,
  "B": <score_for_model_B>,
  "C": <score_for_model_C>,
  "D": <score_for_model_D>
}
```
)";

std::string excerpt(const std::string& s, std::size_t n = 200) {
  return s.size() <= n ? s : s.substr(0, n) + "...";
}

std::size_t label_index(char label) {
  for (std::size_t i = 0; i < kJudgeLabels.size(); ++i) {
    if (kJudgeLabels[i] == label) return i;
  }
  throw Error(ErrorCode::kInput, std::string("unknown judge label '") + label + "'");
}

} // namespace

std::string build_judge_prompt(const Descriptions& descriptions) {
  for (const auto& [key, text] : descriptions) {
    if (key.size() != 1 || std::find(kJudgeLabels.begin(), kJudgeLabels.end(), key[0]) ==
                               kJudgeLabels.end()) {
      throw Error(ErrorCode::kInput, "unexpected description key '" + key + "'");
    }
  }
  std::string out = kPromptHead;
  for (char label : kJudgeLabels) {
    const auto it = descriptions.find(std::string(1, label));
    if (it == descriptions.end()) {
      throw Error(ErrorCode::kInput, std::string("missing description for model ") + label);
    }
    if (it->second.empty()) {
      throw Error(ErrorCode::kInput, std::string("empty description for model ") + label);
    }
    out += '\n';
    out += '[';
    out += label;
    out += "]\n\n";
    out += it->second;
    if (label != kJudgeLabels.back()) out += '\n';
  }
  return out;
}

int JudgeScores::operator[](char label) const { return score[label_index(label)]; }

JudgeScores parse_judge_scores(const std::string& response) {
  // Fences pair up in order of appearance; the last complete pair wins.
  std::vector<std::size_t> fences;
  for (std::size_t at = response.find("```"); at != std::string::npos;
       at = response.find("```", at + 3)) {
    fences.push_back(at);
  }
  if (fences.size() < 2) throw Error(ErrorCode::kParse, "judge response has no fenced score block");
  const std::size_t pair = fences.size() / 2 - 1;
  const std::size_t open = fences[2 * pair] + 3;
  const std::size_t close = fences[2 * pair + 1];
  std::string body = response.substr(open, close - open);
  // An info string ("json") may follow the opening fence on its line.
  const auto nl = body.find('\n');
  if (nl != std::string::npos && body.substr(0, nl).find('{') == std::string::npos) {
    body = body.substr(nl + 1);
  }

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("score block is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParse, "score block is not a JSON object");

  JudgeScores s;
  for (std::size_t i = 0; i < kJudgeLabels.size(); ++i) {
    const std::string key(1, kJudgeLabels[i]);
    if (!j.contains(key)) throw Error(ErrorCode::kParse, "score block is missing key " + key);
    const auto& v = j[key];
    if (!v.is_number_integer()) {
      throw Error(ErrorCode::kParse, "score for " + key + " is not an integer: " + v.dump());
    }
    const auto n = v.get<long long>();
    if (n < 0 || n > 10) {
      throw Error(ErrorCode::kParse,
                  "score for " + key + " is out of range 0..10: " + std::to_string(n));
    }
    s.score[i] = static_cast<int>(n);
  }
  return s;
}

std::string format_judge_scores(const JudgeScores& s) {
  std::ostringstream os;
  os << "```json\n{\n";
  for (std::size_t i = 0; i < kJudgeLabels.size(); ++i) {
    os << "  \"" << kJudgeLabels[i] << "\": " << s.score[i]
       << (i + 1 < kJudgeLabels.size() ? ",\n" : "\n");
  }
  os << "}\n```\n";
  return os.str();
}

// ---- transports ------------------------------------------------------------

JudgeEndpoint endpoint_from_env() {
  JudgeEndpoint e;
  if (const char* v = std::getenv("JUDGE_ENDPOINT"); v != nullptr && *v != '\0') e.url = v;
  if (const char* v = std::getenv("JUDGE_MODEL"); v != nullptr && *v != '\0') e.model = v;
  if (const char* v = std::getenv("JUDGE_API_KEY"); v != nullptr) e.api_key = v;
  return e;
}

Transport fixture_transport(const std::string& dir) {
  return [dir](const JudgeRequest& req) {
    const std::string path = dir + "/" + req.id + ".txt";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "no offline fixture for request " + req.id + " (" + path + ")");
    std::ostringstream os;
    os << in.rdbuf();
    TransportReply r;
    r.status = 200;
    r.body = os.str();
    return r;
  };
}

// http_transport lives in judge_http.cpp so only it pulls in the HTTP client.

// ---- client ----------------------------------------------------------------

JudgeClient::JudgeClient(Transport transport, RetryPolicy retry, Sleeper sleep)
    : transport_(std::move(transport)), retry_(retry), sleep_(std::move(sleep)) {
  if (!transport_) throw Error(ErrorCode::kInvalidConfig, "judge client needs a transport");
  if (retry_.attempts < 1) throw Error(ErrorCode::kInvalidConfig, "judge client needs >= 1 attempt");
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string JudgeClient::complete(const JudgeRequest& request,
                                  std::vector<AuditEntry>* audit) const {
  auto backoff = retry_.initial_backoff;
  for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
    const TransportReply reply = transport_(request);
    AuditEntry entry{request.id, attempt, request.prompt, "", reply.body};
    const bool success = !reply.network_error && reply.status >= 200 && reply.status < 300;
    if (reply.network_error) {
      entry.outcome = "network: " + *reply.network_error;
    } else {
      entry.outcome = success ? "ok" : "status " + std::to_string(reply.status);
    }
    if (audit != nullptr) audit->push_back(entry);
    if (success) return reply.body;

    // Client errors other than rate limiting will not improve on retry.
    const bool transient = reply.network_error || reply.status == 429 || reply.status >= 500;
    if (!transient || attempt == retry_.attempts) {
      if (reply.network_error) {
        throw Error(ErrorCode::kTransport, "judge request " + request.id + " failed after " +
                                               std::to_string(attempt) +
                                               " attempts: " + *reply.network_error);
      }
      throw Error(ErrorCode::kService, "judge request " + request.id + " got status " +
                                           std::to_string(reply.status) + ": " +
                                           excerpt(reply.body));
    }
    sleep_(backoff);
    backoff *= 2;
  }
  throw Error(ErrorCode::kTransport, "judge request " + request.id + " failed");
}

std::vector<JudgeOutcome> run_judging(const JudgeClient& client,
                                      std::vector<JudgeRequest> requests,
                                      std::size_t parallelism) {
  std::sort(requests.begin(), requests.end(),
            [](const JudgeRequest& a, const JudgeRequest& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < requests.size(); ++i) {
    if (requests[i].id == requests[i - 1].id) {
      throw Error(ErrorCode::kInput, "duplicate judge request id " + requests[i].id);
    }
  }
  std::vector<JudgeOutcome> out(requests.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= requests.size()) return;
      try {
        JudgeOutcome& o = out[i];
        o.id = requests[i].id;
        o.response = client.complete(requests[i], &o.audit);
        o.scores = parse_judge_scores(o.response);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(parallelism, requests.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

JudgeAggregate aggregate_scores(std::span<const JudgeScores> scores) {
  if (scores.empty()) throw Error(ErrorCode::kEmptySubset, "no judge scores to aggregate");
  JudgeAggregate a;
  a.videos = scores.size();
  std::array<long long, 4> sum{};
  for (const auto& s : scores) {
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += s.score[i];
  }
  for (std::size_t i = 0; i < sum.size(); ++i) {
    a.mean[i] = static_cast<double>(sum[i]) / static_cast<double>(a.videos);
  }
  return a;
}

std::string render_aggregate_csv(const JudgeAggregate& a) {
  std::ostringstream os;
  os << "model,mean_score,videos\n" << std::setprecision(17);
  for (std::size_t i = 0; i < kJudgeLabels.size(); ++i) {
    os << kJudgeLabels[i] << ',' << a.mean[i] << ',' << a.videos << '\n';
  }
  return os.str();
}

std::string render_aggregate_chart(const JudgeAggregate& a) {
  // 40 characters span the 0..10 scale.
  std::ostringstream os;
  os << "mean judge score (0-10) over " << a.videos << " videos\n";
  for (std::size_t i = 0; i < kJudgeLabels.size(); ++i) {
    const int n = static_cast<int>(std::lround(std::clamp(a.mean[i], 0.0, 10.0) * 4.0));
    os << "Model " << kJudgeLabels[i] << " |" << std::string(static_cast<std::size_t>(n), '#')
       << std::string(static_cast<std::size_t>(40 - n), ' ') << "| " << std::fixed
       << std::setprecision(2) << a.mean[i] << '\n';
  }
  return os.str();
}

std::string render_audit_log(std::span<const JudgeOutcome> outcomes) {
  std::ostringstream os;
  for (const auto& o : outcomes) {
    for (const auto& e : o.audit) {
      nlohmann::ordered_json j;
      j["id"] = e.id;
      j["attempt"] = e.attempt;
      j["outcome"] = e.outcome;
      j["request"] = e.request;
      j["response"] = e.response;
      os << j.dump() << '\n';
    }
  }
  return os.str();
}

} // namespace vica::eval
