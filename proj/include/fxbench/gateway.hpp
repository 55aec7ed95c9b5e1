#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fxbench/error.hpp"
#include "fxbench/prompt.hpp"

namespace fxbench {

struct GenerationParams {
  std::string model_name;
  int max_tokens = 1;
  double temperature = 0.2;

  bool operator==(const GenerationParams&) const = default;
};

/// Budget and temperature from the template.
GenerationParams params_for(const PromptTemplate& prompt, std::string model_name);
GenerationParams params_for(const RenderedPrompt& prompt, std::string model_name);

/// Throws ConfigError unless model_name is set, max_tokens >= 1 and
/// temperature is in [0, 2].
void validate_params(const GenerationParams& params);

struct ChatRequest {
  std::string text;
  GenerationParams params;
};

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct BackendReply {
  std::string text;
  std::optional<TokenUsage> usage;  // absent when the backend does not report it
};

/// A chat-completion endpoint. `send` performs exactly one round-trip and
/// reports failures as BackendFailure subclasses. Implementations must be
/// safe to call from several threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual BackendReply send(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
  /// Replay backends report zero latency so their output is reproducible.
  virtual bool is_replay() const { return false; }
};

struct ChatExchange {
  std::string request_text;
  GenerationParams params;
  std::string response_text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  bool tokens_estimated = false;
  double latency_seconds = 0.0;               // whole call, retries and backoff included
  double last_attempt_latency_seconds = 0.0;  // the successful attempt alone
  int attempt_count = 1;
  std::string backend_id;

  long total_tokens() const noexcept { return prompt_tokens + completion_tokens; }
  bool operator==(const ChatExchange&) const = default;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_backoff{1000};
  double backoff_multiplier = 2.0;
  std::set<int> retryable_statuses{408, 429, 500, 502, 503, 504};

  /// Rate limits and timeouts always; backend errors when their status is
  /// listed; auth failures and fixture misses never.
  bool is_retryable(const BackendFailure& failure) const;

  /// Pause before attempt `next_attempt` (2, 3, ...).
  std::chrono::milliseconds delay_before(int next_attempt) const;
};

void validate_policy(const RetryPolicy& policy);

using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct ItemError {
  FailureKind kind = FailureKind::Backend;
  int attempts = 1;
  std::string message;
};

/// Exactly one of `exchange` / `error` is set.
struct BatchItem {
  std::optional<ChatExchange> exchange;
  std::optional<ItemError> error;

  bool ok() const noexcept { return exchange.has_value(); }
};

enum class BatchMode { Lenient, Strict };

/// Dispatches prompts to a backend with retries and bounded concurrency.
///
/// Token counts come from the backend when it reports usage; otherwise
/// they are whitespace-token estimates and the exchange is flagged.
class Gateway {
 public:
  explicit Gateway(ChatBackend& backend, RetryPolicy policy = {}, Sleeper sleeper = {});

  ChatExchange complete(const RenderedPrompt& prompt, const GenerationParams& params) const;
  ChatExchange complete(const ChatRequest& request) const;

  /// Results follow input order whatever the completion order. At most
  /// `parallelism` requests are in flight. Lenient mode records per-item
  /// errors; strict mode stops dispatching after the first error and throws
  /// BatchAborted. An AuthError always aborts the batch and is rethrown.
  std::vector<BatchItem> run_batch(const std::vector<RenderedPrompt>& prompts,
                                   const GenerationParams& params, int parallelism,
                                   BatchMode mode = BatchMode::Lenient) const;
  std::vector<BatchItem> run_batch(const std::vector<ChatRequest>& requests, int parallelism,
                                   BatchMode mode = BatchMode::Lenient) const;

  const RetryPolicy& policy() const noexcept { return policy_; }

 private:
  ChatExchange attempt_loop(const ChatRequest& request, int& attempts) const;

  ChatBackend& backend_;
  RetryPolicy policy_;
  Sleeper sleeper_;
};

}  // namespace fxbench
