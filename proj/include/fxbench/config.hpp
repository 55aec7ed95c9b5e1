#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fxbench/evaluation.hpp"
#include "fxbench/gateway.hpp"
#include "fxbench/live_backend.hpp"
#include "fxbench/signals.hpp"
#include "fxbench/ticker.hpp"

namespace fxbench {

enum class BackendKind { Replay, Live };

std::string_view to_string(BackendKind kind) noexcept;
std::optional<BackendKind> backend_kind_from_string(std::string_view text) noexcept;

struct BackendSettings {
  BackendKind kind = BackendKind::Replay;
  std::string model = "gpt-3.5-turbo";
  std::string fixture;  // replay source, and the target of `record`
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 60;
  int max_attempts = 3;
  int base_backoff_ms = 1000;
};

/// Declarative description of one benchmark run. Paths are stored as
/// written in the file; `resolve` turns them into paths relative to the
/// directory holding the config.
struct RunConfig {
  std::filesystem::path base_dir;

  std::string corpus;
  std::string market_data;
  std::optional<std::string> finbert_probabilities;
  std::optional<std::string> template_overrides;
  std::vector<std::string> universe;  // empty: the five default pairs
  std::vector<std::string> prompts;   // empty: every registered template
  BackendSettings backend;
  int parallelism = 4;
  double price_per_1k = 0.002;
  std::int64_t articles_per_day = 5000;
  ZeroPolicy zero_policy = ZeroPolicy::Exclude;
  ReturnMode return_mode = ReturnMode::CloseToClose;
  Averaging averaging = Averaging::Weighted;
  int day_offset_minutes = 0;
  bool clamp_scores = false;
  /// Zero every wall-clock field so that replay runs are byte-identical.
  bool deterministic = true;
  std::string output = "run";

  std::filesystem::path resolve(const std::string& path) const;
  Universe universe_set() const;
  RetryPolicy retry_policy() const;
  LiveBackendConfig live_config() const;
  std::chrono::minutes day_offset() const { return std::chrono::minutes{day_offset_minutes}; }
};

/// Throws ConfigError naming the offending field on unknown keys, wrong
/// types or unparseable enum values. Does not touch the file system.
RunConfig parse_run_config(std::string_view json_text, std::filesystem::path base_dir);

/// FileNotFound when the file is missing, ConfigError otherwise.
RunConfig load_run_config(const std::filesystem::path& path);

/// The config as JSON. Execution-only fields (parallelism, output) are left
/// out so that the snapshot depends only on what shapes the results.
nlohmann::json config_snapshot(const RunConfig& config);

struct Diagnostic {
  std::string field;
  std::string message;
};

/// Path, id and range checks. An empty result means the config can run.
std::vector<Diagnostic> validate_config(const RunConfig& config);

/// Comma-separated prompt list, as accepted by `--prompts`.
std::vector<std::string> split_list(std::string_view text);

}  // namespace fxbench
