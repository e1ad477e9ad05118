#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "vica/error.hpp"
#include "vica/evalkit/judge.hpp"

#include "json.hpp"

namespace vica::eval {

Transport http_transport(const JudgeEndpoint& endpoint) {
  if (endpoint.api_key.empty()) {
    throw Error(ErrorCode::kInvalidConfig,
                "judge API key not set (JUDGE_API_KEY); use offline mode for fixtures");
  }
  const auto scheme_end = endpoint.url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidConfig, "judge endpoint is not an absolute URL: " + endpoint.url);
  }
  const auto path_start = endpoint.url.find('/', scheme_end + 3);
  const std::string origin =
      path_start == std::string::npos ? endpoint.url : endpoint.url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : endpoint.url.substr(path_start);

  return [endpoint, origin, path](const JudgeRequest& req) {
    httplib::Client cli(origin);
    const auto secs = static_cast<time_t>(endpoint.timeout.count());
    cli.set_connection_timeout(secs);
    cli.set_read_timeout(secs);
    cli.set_write_timeout(secs);

    nlohmann::json body;
    body["model"] = endpoint.model;
    body["temperature"] = 0;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}});
    const httplib::Headers headers = {{"Authorization", "Bearer " + endpoint.api_key}};

    TransportReply reply;
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      reply.network_error = httplib::to_string(res.error());
      return reply;
    }
    reply.status = res->status;
    if (res->status < 200 || res->status >= 300) {
      reply.body = res->body;
      return reply;
    }
    try {
      const auto j = nlohmann::json::parse(res->body);
      reply.body = j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kService,
                  std::string("judge service returned an unexpected payload: ") + e.what());
    }
    return reply;
  };
}

} // namespace vica::eval
