#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fxbench/config.hpp"
#include "fxbench/corpus.hpp"
#include "fxbench/dates.hpp"
#include "fxbench/evaluation.hpp"
#include "fxbench/gateway.hpp"
#include "fxbench/parsing.hpp"
#include "fxbench/prompt.hpp"
#include "fxbench/signals.hpp"

namespace fxbench {

inline constexpr std::string_view kToolName = "fxbench";
inline constexpr std::string_view kToolVersion = "0.1.0";

inline constexpr std::string_view kFinbertClassId = "FinBERT";
inline constexpr std::string_view kFinbertScoreId = "FinBERT-N";
inline constexpr std::string_view kTruthSeries = "True sentiment";
inline constexpr std::string_view kReturnsSeries = "Returns";

/// Outcome of one request, kept for the per-response audit file.
struct ItemOutcome {
  std::string scope;           // record id, "TICKER date" or date
  std::string status;          // "ok", a parse error kind, or "backend:<kind>"
  std::string response;        // raw reply text
  std::string detail;          // parse or backend message
  std::optional<double> value; // single-value replies only
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct ModelResult {
  std::string id;
  bool from_finbert = false;
  OutputKind kind = OutputKind::ClassToken;
  Granularity granularity = Granularity::SingleHeadline;

  std::size_t requests = 0;
  std::map<std::string, std::size_t> backend_failures;  // failure kind -> count
  std::map<std::string, std::size_t> parse_failures;    // parse error kind -> count
  std::size_t lenient_matches = 0;
  std::vector<ItemOutcome> items;
  std::vector<std::string> warnings;

  std::optional<ClassificationMetrics> classification;
  std::map<Ticker, ClassificationMetrics> classification_by_ticker;
  std::optional<ClassificationMetrics> filtered;
  std::optional<std::string> classification_note;
  std::optional<std::string> filtered_note;

  std::vector<DailySentiment> daily;
  JoinedSeries joined;
  std::optional<double> pearson_with_returns;  // pooled panel
  std::map<Ticker, std::optional<double>> pearson_per_ticker;
  std::map<ZeroPolicy, DirectionalAccuracy> directional;  // empty when nothing joined

  std::optional<CostReport> cost;  // LLM models only

  bool numeric() const noexcept { return !is_class_kind(kind); }
};

struct CorpusSummary {
  std::size_t records = 0;
  std::size_t rejected_rows = 0;
  std::size_t without_pair_mention = 0;
  std::map<Ticker, std::size_t> per_ticker;
  std::vector<Date> days;
};

struct RunResult {
  CorpusSummary corpus;
  std::vector<ModelResult> models;
  std::vector<DailySentiment> truth_daily;
  JoinedSeries truth_joined;
  std::size_t return_days = 0;
  CorrelationMatrix correlation;  // pooled (ticker, date) panel
  std::size_t correlation_rows = 0;
  std::map<Ticker, CorrelationMatrix> correlation_per_ticker;
  std::vector<std::string> warnings;
  Timestamp started{};   // epoch in deterministic runs
  Timestamp finished{};
};

/// "FinBERT" and "FinBERT-N" may appear in the prompt list next to
/// template ids. With an empty list both run whenever probabilities are
/// configured.
bool is_finbert_id(std::string_view id) noexcept;
bool finbert_selected(const RunConfig& config, std::string_view id);

/// Templates the config selects, overrides applied, in registry order.
std::vector<PromptTemplate> selected_templates(const RunConfig& config);

/// Every request the run would send, in run order.
std::vector<ChatRequest> planned_requests(const RunConfig& config, const Corpus& corpus);

/// Loads the corpus with the config's universe. Rejected rows are counted,
/// not fatal.
LoadResult load_run_corpus(const RunConfig& config);

/// Plan, query, parse, aggregate and evaluate. Parse failures and per-item
/// backend failures are recorded; AuthError aborts.
RunResult run_pipeline(const RunConfig& config, ChatBackend& backend, const Sleeper& sleeper = {});

/// Builds the backend the config describes. Live backends read their key
/// here, so a missing credential fails before any work starts.
std::unique_ptr<ChatBackend> make_backend(const RunConfig& config);

// ---- report ----------------------------------------------------------------

nlohmann::json report_json(const RunResult& result, const RunConfig& config);

struct Table {
  std::string name;   // file stem
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> notes;
};

/// The fixed set of tables derived from a report document.
std::vector<Table> render_tables(const nlohmann::json& report);

std::string format_table_text(const Table& table);
std::string format_tables_text(const std::vector<Table>& tables);
std::string format_table_csv(const Table& table);

/// Writes report.json, responses.csv, tables.txt, tables/<name>.csv and
/// manifest.json into `dir`.
void write_run(const std::filesystem::path& dir, const RunResult& result, const RunConfig& config);

/// The rendered tables of a finished run directory. FileNotFound when the
/// directory holds no report.
std::string report_text(const std::filesystem::path& run_dir);
std::string report_json_text(const std::filesystem::path& run_dir);

}  // namespace fxbench
