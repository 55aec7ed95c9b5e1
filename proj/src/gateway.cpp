#include "fxbench/gateway.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "fxbench/tokenizer.hpp"

namespace fxbench {
namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

const char* to_string(FailureKind kind) noexcept {
  switch (kind) {
    case FailureKind::Auth:
      return "auth";
    case FailureKind::RateLimited:
      return "rate_limited";
    case FailureKind::Timeout:
      return "timeout";
    case FailureKind::Backend:
      return "backend";
    case FailureKind::FixtureMiss:
      return "fixture_miss";
  }
  return "backend";
}

GenerationParams params_for(const PromptTemplate& prompt, std::string model_name) {
  return GenerationParams{std::move(model_name), prompt.max_tokens, prompt.temperature};
}

GenerationParams params_for(const RenderedPrompt& prompt, std::string model_name) {
  return GenerationParams{std::move(model_name), prompt.max_tokens, prompt.temperature};
}

void validate_params(const GenerationParams& params) {
  if (params.model_name.empty()) throw ConfigError("model_name is empty");
  if (params.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (!(params.temperature >= 0.0 && params.temperature <= 2.0)) {
    throw ConfigError("temperature must be in [0, 2]");
  }
}

bool RetryPolicy::is_retryable(const BackendFailure& failure) const {
  switch (failure.kind()) {
    case FailureKind::RateLimited:
    case FailureKind::Timeout:
      return true;
    case FailureKind::Backend:
      if (auto* e = dynamic_cast<const BackendError*>(&failure)) {
        return retryable_statuses.count(e->status()) != 0;
      }
      return false;
    case FailureKind::Auth:
    case FailureKind::FixtureMiss:
      return false;
  }
  return false;
}

std::chrono::milliseconds RetryPolicy::delay_before(int next_attempt) const {
  if (next_attempt <= 1) return std::chrono::milliseconds{0};
  double factor = std::pow(backoff_multiplier, next_attempt - 2);
  return std::chrono::milliseconds{static_cast<long long>(std::llround(base_backoff.count() * factor))};
}

void validate_policy(const RetryPolicy& policy) {
  if (policy.max_attempts < 1) throw ConfigError("retry max_attempts must be >= 1");
  if (!(policy.backoff_multiplier >= 1.0)) throw ConfigError("retry backoff_multiplier must be >= 1");
  if (policy.base_backoff.count() < 0) throw ConfigError("retry base_backoff must be >= 0");
}

Gateway::Gateway(ChatBackend& backend, RetryPolicy policy, Sleeper sleeper)
    : backend_(backend), policy_(std::move(policy)), sleeper_(std::move(sleeper)) {
  validate_policy(policy_);
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

ChatExchange Gateway::complete(const RenderedPrompt& prompt, const GenerationParams& params) const {
  return complete(ChatRequest{prompt.text, params});
}

ChatExchange Gateway::complete(const ChatRequest& request) const {
  int attempts = 0;
  return attempt_loop(request, attempts);
}

ChatExchange Gateway::attempt_loop(const ChatRequest& request, int& attempts) const {
  validate_params(request.params);
  const auto call_start = std::chrono::steady_clock::now();
  for (attempts = 1;; ++attempts) {
    const auto attempt_start = std::chrono::steady_clock::now();
    try {
      BackendReply reply = backend_.send(request);
      ChatExchange exchange;
      exchange.request_text = request.text;
      exchange.params = request.params;
      exchange.response_text = std::move(reply.text);
      if (reply.usage) {
        exchange.prompt_tokens = reply.usage->prompt_tokens;
        exchange.completion_tokens = reply.usage->completion_tokens;
      } else {
        WhitespaceTokenizer estimator;
        exchange.prompt_tokens = static_cast<long>(estimator.count(request.text));
        exchange.completion_tokens = static_cast<long>(estimator.count(exchange.response_text));
        exchange.tokens_estimated = true;
      }
      if (!backend_.is_replay()) {
        exchange.last_attempt_latency_seconds = seconds_since(attempt_start);
        exchange.latency_seconds = seconds_since(call_start);
      }
      exchange.attempt_count = attempts;
      exchange.backend_id = backend_.id();
      return exchange;
    } catch (const BackendFailure& failure) {
      if (!policy_.is_retryable(failure)) throw;
      if (attempts >= policy_.max_attempts) {
        throw ExhaustedRetries(attempts, failure.kind(), failure.what());
      }
      sleeper_(policy_.delay_before(attempts + 1));
    }
  }
}

std::vector<BatchItem> Gateway::run_batch(const std::vector<RenderedPrompt>& prompts,
                                          const GenerationParams& params, int parallelism,
                                          BatchMode mode) const {
  std::vector<ChatRequest> requests;
  requests.reserve(prompts.size());
  for (const auto& p : prompts) requests.push_back(ChatRequest{p.text, params});
  return run_batch(requests, parallelism, mode);
}

std::vector<BatchItem> Gateway::run_batch(const std::vector<ChatRequest>& requests, int parallelism,
                                          BatchMode mode) const {
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  std::vector<BatchItem> results(requests.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex failure_mutex;
  std::optional<std::size_t> first_failure;
  std::optional<AuthError> auth_failure;

  auto note_failure = [&](std::size_t index) {
    std::lock_guard lock(failure_mutex);
    if (!first_failure || index < *first_failure) first_failure = index;
    if (mode == BatchMode::Strict) stop = true;
  };

  auto worker = [&] {
    while (!stop) {
      std::size_t i = next.fetch_add(1);
      if (i >= requests.size()) return;
      int attempts = 0;
      try {
        results[i].exchange = attempt_loop(requests[i], attempts);
      } catch (const AuthError& e) {
        results[i].error = ItemError{FailureKind::Auth, attempts, e.what()};
        std::lock_guard lock(failure_mutex);
        if (!auth_failure) auth_failure = e;
        stop = true;
      } catch (const ExhaustedRetries& e) {
        results[i].error = ItemError{e.last_kind(), e.attempts(), e.what()};
        note_failure(i);
      } catch (const BackendFailure& e) {
        results[i].error = ItemError{e.kind(), attempts, e.what()};
        note_failure(i);
      } catch (const std::exception& e) {
        results[i].error = ItemError{FailureKind::Backend, attempts, e.what()};
        note_failure(i);
      }
    }
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism), requests.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  if (auth_failure) throw *auth_failure;
  if (mode == BatchMode::Strict && first_failure) {
    throw BatchAborted(*first_failure, results[*first_failure].error->message);
  }
  return results;
}

}  // namespace fxbench
