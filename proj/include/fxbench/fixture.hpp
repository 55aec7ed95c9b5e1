#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "fxbench/gateway.hpp"

namespace fxbench {

/// SHA-256 over (request text, model, max_tokens, temperature), so a
/// parameter change invalidates a recording.
std::string prompt_hash(const ChatRequest& request);

struct FixtureEntry {
  std::string response_text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  /// Failures the replay backend raises before serving the response, one per
  /// attempt: "rate_limited", "timeout", "server_error" or "auth".
  std::vector<std::string> fail_first;

  bool operator==(const FixtureEntry&) const = default;
};

/// Recorded responses keyed by prompt hash. Serialized as a JSON object
/// with sorted keys, two-space indent and a trailing newline, so that
/// load/save is byte-stable.
class Fixture {
 public:
  static Fixture parse(std::string_view json_text);
  static Fixture load(const std::string& path);

  std::string dump() const;
  void save(const std::string& path) const;

  void put(const std::string& hash, FixtureEntry entry);
  const FixtureEntry* find(const std::string& hash) const;
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<std::string, FixtureEntry>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, FixtureEntry> entries_;
};

/// Serves recorded responses; a missing prompt raises FixtureMiss.
class ReplayBackend final : public ChatBackend {
 public:
  explicit ReplayBackend(Fixture fixture);

  BackendReply send(const ChatRequest& request) override;
  std::string id() const override { return "replay"; }
  bool is_replay() const override { return true; }

 private:
  Fixture fixture_;
  std::mutex mutex_;
  std::map<std::string, std::size_t> failures_served_;
};

/// Forwards to another backend and captures every successful reply.
class RecordingBackend final : public ChatBackend {
 public:
  explicit RecordingBackend(ChatBackend& inner) : inner_(inner) {}

  BackendReply send(const ChatRequest& request) override;
  std::string id() const override { return inner_.id(); }

  Fixture snapshot() const;

 private:
  ChatBackend& inner_;
  mutable std::mutex mutex_;
  Fixture fixture_;
};

/// Runs every prompt through `backend` (strict batch) and writes the
/// resulting fixture to `output_path`.
Fixture record_fixture(ChatBackend& backend, const std::vector<ChatRequest>& requests,
                       const std::string& output_path, int parallelism = 1,
                       const RetryPolicy& policy = {}, Sleeper sleeper = {});

}  // namespace fxbench
