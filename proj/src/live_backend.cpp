#include "fxbench/live_backend.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

namespace fxbench {
namespace {

using json = nlohmann::json;

std::string env_or_empty(const std::string& name) {
  const char* value = std::getenv(name.c_str());
  return value ? std::string(value) : std::string();
}

}  // namespace

std::string chat_request_body(const ChatRequest& request) {
  json body = {{"model", request.params.model_name},
               {"messages", json::array({{{"role", "user"}, {"content", request.text}}})},
               {"max_tokens", request.params.max_tokens},
               {"temperature", request.params.temperature}};
  return body.dump();
}

BackendReply parse_chat_response(const std::string& body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw BackendError(200, "response is not JSON: " + body.substr(0, 200));
  try {
    BackendReply reply;
    const auto& message = doc.at("choices").at(0).at("message");
    const auto& content = message.at("content");
    reply.text = content.is_null() ? std::string() : content.get<std::string>();
    if (doc.contains("usage") && doc["usage"].is_object()) {
      const auto& usage = doc["usage"];
      reply.usage = TokenUsage{usage.value("prompt_tokens", 0L), usage.value("completion_tokens", 0L)};
    }
    return reply;
  } catch (const json::exception& e) {
    throw BackendError(200, std::string("unexpected response shape: ") + e.what());
  }
}

LiveBackend::LiveBackend(LiveBackendConfig config)
    : LiveBackend(config, env_or_empty(config.api_key_env)) {}

LiveBackend::LiveBackend(LiveBackendConfig config, std::string api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)) {
  if (api_key_.empty()) {
    throw AuthError("no API key: environment variable " + config_.api_key_env + " is unset");
  }
  std::string url = config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base_url needs a scheme: " + config_.base_url);
  auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? std::string() : url.substr(path_start);
}

BackendReply LiveBackend::send(const ChatRequest& request) {
  httplib::Client client(origin_);
  auto secs = config_.timeout.count();
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  client.set_bearer_token_auth(api_key_);

  auto result = client.Post(path_prefix_ + "/chat/completions", chat_request_body(request),
                            "application/json");
  if (!result) {
    auto err = result.error();
    if (err == httplib::Error::Read || err == httplib::Error::Write ||
        err == httplib::Error::ConnectionTimeout) {
      throw Timeout("request timed out: " + httplib::to_string(err));
    }
    throw BackendError(0, "transport error: " + httplib::to_string(err));
  }
  const int status = result->status;
  if (status == 401 || status == 403) throw AuthError("authentication rejected: " + result->body);
  if (status == 429) throw RateLimited("rate limited: " + result->body);
  if (status == 408) throw Timeout("server timeout: " + result->body);
  if (status < 200 || status >= 300) throw BackendError(status, result->body);
  return parse_chat_response(result->body);
}

}  // namespace fxbench
