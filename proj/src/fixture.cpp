#include "fxbench/fixture.hpp"

#include <fstream>

#include <json.hpp>

#include "fxbench/csv.hpp"
#include "fxbench/hash.hpp"
#include "fxbench/tokenizer.hpp"

namespace fxbench {
namespace {

using json = nlohmann::json;

[[noreturn]] void raise_scripted(const std::string& kind, const std::string& hash) {
  if (kind == "rate_limited") throw RateLimited("scripted rate limit for " + hash);
  if (kind == "timeout") throw Timeout("scripted timeout for " + hash);
  if (kind == "auth") throw AuthError("scripted auth failure for " + hash);
  if (kind == "server_error") throw BackendError(503, "scripted server error for " + hash);
  throw Error("unknown scripted failure '" + kind + "'");
}

}  // namespace

std::string prompt_hash(const ChatRequest& request) {
  json key = json::array({request.text, request.params.model_name, request.params.max_tokens,
                          request.params.temperature});
  return sha256_hex(key.dump());
}

Fixture Fixture::parse(std::string_view json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error("fixture must be a JSON object keyed by prompt hash");
  }
  Fixture fixture;
  for (const auto& [hash, value] : doc.items()) {
    try {
      FixtureEntry entry;
      entry.response_text = value.at("response_text").get<std::string>();
      entry.prompt_tokens = value.at("prompt_tokens").get<long>();
      entry.completion_tokens = value.at("completion_tokens").get<long>();
      if (value.contains("fail_first")) {
        entry.fail_first = value.at("fail_first").get<std::vector<std::string>>();
      }
      fixture.entries_.emplace(hash, std::move(entry));
    } catch (const json::exception& e) {
      throw Error("fixture entry " + hash + ": " + e.what());
    }
  }
  return fixture;
}

Fixture Fixture::load(const std::string& path) { return parse(csv::read_file(path)); }

std::string Fixture::dump() const {
  json doc = json::object();
  for (const auto& [hash, entry] : entries_) {
    json value = {{"response_text", entry.response_text},
                  {"prompt_tokens", entry.prompt_tokens},
                  {"completion_tokens", entry.completion_tokens}};
    if (!entry.fail_first.empty()) value["fail_first"] = entry.fail_first;
    doc[hash] = std::move(value);
  }
  return doc.dump(2) + "\n";
}

void Fixture::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write fixture " + path);
  out << dump();
}

void Fixture::put(const std::string& hash, FixtureEntry entry) { entries_[hash] = std::move(entry); }

const FixtureEntry* Fixture::find(const std::string& hash) const {
  auto it = entries_.find(hash);
  return it == entries_.end() ? nullptr : &it->second;
}

ReplayBackend::ReplayBackend(Fixture fixture) : fixture_(std::move(fixture)) {}

BackendReply ReplayBackend::send(const ChatRequest& request) {
  const std::string hash = prompt_hash(request);
  const FixtureEntry* entry = fixture_.find(hash);
  if (entry == nullptr) throw FixtureMiss(hash);
  if (!entry->fail_first.empty()) {
    std::size_t served;
    {
      std::lock_guard lock(mutex_);
      served = failures_served_[hash]++;
    }
    if (served < entry->fail_first.size()) raise_scripted(entry->fail_first[served], hash);
  }
  return BackendReply{entry->response_text, TokenUsage{entry->prompt_tokens, entry->completion_tokens}};
}

BackendReply RecordingBackend::send(const ChatRequest& request) {
  BackendReply reply = inner_.send(request);
  FixtureEntry entry{reply.text, 0, 0, {}};
  if (reply.usage) {
    entry.prompt_tokens = reply.usage->prompt_tokens;
    entry.completion_tokens = reply.usage->completion_tokens;
  } else {
    WhitespaceTokenizer estimator;
    entry.prompt_tokens = static_cast<long>(estimator.count(request.text));
    entry.completion_tokens = static_cast<long>(estimator.count(reply.text));
  }
  std::lock_guard lock(mutex_);
  fixture_.put(prompt_hash(request), std::move(entry));
  return reply;
}

Fixture RecordingBackend::snapshot() const {
  std::lock_guard lock(mutex_);
  return fixture_;
}

Fixture record_fixture(ChatBackend& backend, const std::vector<ChatRequest>& requests,
                       const std::string& output_path, int parallelism, const RetryPolicy& policy,
                       Sleeper sleeper) {
  RecordingBackend recorder(backend);
  Gateway gateway(recorder, policy, std::move(sleeper));
  gateway.run_batch(requests, parallelism, BatchMode::Strict);
  Fixture fixture = recorder.snapshot();
  fixture.save(output_path);
  return fixture;
}

}  // namespace fxbench
