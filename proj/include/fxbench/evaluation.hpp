#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fxbench/corpus.hpp"
#include "fxbench/gateway.hpp"
#include "fxbench/signals.hpp"

namespace fxbench {

// ---- classification -------------------------------------------------------------

/// Row = true label, column = predicted label, both in Negative/Neutral/
/// Positive order. `unscored` counts records whose reply could not be parsed.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, 3>, 3> counts{};
  std::int64_t unscored = 0;

  void add(SentimentLabel truth, SentimentLabel predicted);
  std::int64_t scored() const noexcept;
  std::int64_t support(SentimentLabel truth) const noexcept;
  std::int64_t predicted(SentimentLabel label) const noexcept;
  std::int64_t correct() const noexcept;

  bool operator==(const ConfusionMatrix&) const = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

enum class Averaging { Weighted, Macro };

std::string_view to_string(Averaging averaging) noexcept;

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double s_mae = 0.0;
  std::map<SentimentLabel, ClassMetrics> per_class;
  ConfusionMatrix confusion;
  Averaging averaging = Averaging::Weighted;
};

/// Metrics over the scored part of `m`. Per-class ratios with a zero
/// denominator are 0. Under Weighted averaging, recall is computed as
/// correct / scored, which equals the support-weighted mean of per-class
/// recalls. Throws EmptyInput when nothing was scored.
ClassificationMetrics metrics_from_confusion(const ConfusionMatrix& m, Averaging averaging = Averaging::Weighted);

struct Prediction {
  std::string record_id;
  std::optional<SentimentLabel> label;  // nullopt: reply could not be parsed
};

/// Throws UnknownRecordId for ids outside the corpus and EmptyInput when no
/// prediction carries a label.
ClassificationMetrics classification_metrics(std::span<const Prediction> predictions, const Corpus& truths,
                                             Averaging averaging = Averaging::Weighted);

/// Same metrics computed separately on each ticker's records. Tickers with
/// no scored prediction are omitted.
std::map<Ticker, ClassificationMetrics> classification_by_ticker(std::span<const Prediction> predictions,
                                                                 const Corpus& truths,
                                                                 Averaging averaging = Averaging::Weighted);

/// Metrics on the records whose headline does not name their own pair.
/// Throws EmptyInput when that subset is empty, Error when a subset record
/// has no prediction.
ClassificationMetrics filtered_evaluation(std::span<const Prediction> predictions, const Corpus& corpus,
                                          Averaging averaging = Averaging::Weighted);

/// Mean |truth - prediction| over integer codes in {-1, 0, 1}.
/// Throws LengthMismatch, EmptyInput, or Error for other codes.
double s_mae(std::span<const int> predictions, std::span<const int> truths);

// ---- correlation ----------------------------------------------------------------

/// Product-moment correlation, two-pass with compensated sums. Throws
/// LengthMismatch, DegenerateSeries for fewer than two points or a constant
/// series.
double pearson(std::span<const double> x, std::span<const double> y);

struct NamedSeries {
  std::string name;
  std::vector<TickerDay> index;
  std::vector<double> values;
};

struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // NaN where a series is constant
};

/// Pairwise Pearson correlations. Every series must share the same index
/// (IndexMismatch otherwise). Entries involving a constant series are NaN.
CorrelationMatrix correlation_matrix(const std::vector<NamedSeries>& series);

// ---- directional accuracy -----------------------------------------------------

enum class ZeroPolicy { Exclude, CountWrong, CountHalf };

std::string_view to_string(ZeroPolicy policy) noexcept;
std::optional<ZeroPolicy> zero_policy_from_string(std::string_view text) noexcept;

struct DirectionalAccuracy {
  std::optional<double> value;  // nullopt when no row is left to score
  double credited = 0.0;        // agreeing rows, plus halves under CountHalf
  std::size_t considered = 0;   // denominator
  std::size_t n_days = 0;       // rows in the joined series
  std::size_t zero_sentiment_days = 0;
  ZeroPolicy policy = ZeroPolicy::Exclude;
  std::map<Ticker, std::optional<double>> per_ticker;
};

/// Share of rows where sign(sentiment) equals sign(return). Rows with zero
/// sentiment are dropped (Exclude), scored as misses (CountWrong) or given
/// half credit (CountHalf). Throws EmptySeries on an empty series.
DirectionalAccuracy directional_accuracy(std::span<const JoinedRow> rows, ZeroPolicy policy = ZeroPolicy::Exclude);

// ---- cost and latency ---------------------------------------------------------

struct CostReport {
  std::size_t n_prompts = 0;
  std::int64_t n_headlines = 0;
  std::int64_t total_prompt_tokens = 0;
  std::int64_t total_completion_tokens = 0;
  std::int64_t total_tokens = 0;
  bool tokens_estimated = false;
  double total_time = 0.0;
  double mean_time_per_prompt = 0.0;
  double mean_time_per_headline = 0.0;
  double mean_tokens_per_prompt = 0.0;
  double mean_tokens_per_headline = 0.0;
  double price_per_1k_tokens = 0.0;
  double estimated_cost = 0.0;
  std::optional<std::int64_t> articles_per_day;
  std::optional<double> projected_daily_cost;               // mean tokens per prompt basis
  std::optional<double> projected_daily_cost_per_headline;  // mean tokens per headline basis
};

/// tokens / 1000 * price.
double token_cost(double tokens, double price_per_1k);

/// mean_tokens * articles / 1000 * price.
double project_daily_cost(double mean_tokens, std::int64_t articles, double price_per_1k);

/// `headline_counts[i]` is the number of headlines exchange i covered.
/// Throws LengthMismatch when the spans differ in length.
CostReport cost_report(std::span<const ChatExchange> exchanges, std::span<const int> headline_counts,
                       double price_per_1k, std::optional<std::int64_t> articles_per_day = std::nullopt);

}  // namespace fxbench
