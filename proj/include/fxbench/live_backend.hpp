#pragma once

#include <chrono>
#include <string>

#include "fxbench/gateway.hpp"

namespace fxbench {

struct LiveBackendConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::seconds timeout{60};
};

/// Chat-completions client. Each request carries a single user message.
class LiveBackend final : public ChatBackend {
 public:
  /// Reads the key from the configured environment variable; throws
  /// AuthError when it is unset or empty.
  explicit LiveBackend(LiveBackendConfig config);
  LiveBackend(LiveBackendConfig config, std::string api_key);

  BackendReply send(const ChatRequest& request) override;
  std::string id() const override { return "live:" + config_.base_url; }

 private:
  LiveBackendConfig config_;
  std::string api_key_;
  std::string origin_;  // scheme://host[:port]
  std::string path_prefix_;
};

/// Request body for one chat completion.
std::string chat_request_body(const ChatRequest& request);

/// Extracts the first choice's message content and usage, if reported.
BackendReply parse_chat_response(const std::string& body);

}  // namespace fxbench
