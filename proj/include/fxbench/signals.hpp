#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fxbench/corpus.hpp"
#include "fxbench/dates.hpp"
#include "fxbench/ticker.hpp"

namespace fxbench {

// ---- FinBERT probabilities --------------------------------------------------

/// Throws InvalidDistribution unless every probability is finite and
/// non-negative and the three sum to 1 within 1e-6.
void check_distribution(double p_pos, double p_neg, double p_neu);

/// p_pos - p_neg.
double finbert_score(double p_pos, double p_neg, double p_neu);

/// Arg-max class. Whenever the maximum is shared by two or more classes the
/// result is Neutral.
SentimentLabel finbert_class(double p_pos, double p_neg, double p_neu);

struct ProbabilityRow {
  std::string id;
  double p_positive = 0.0;
  double p_negative = 0.0;
  double p_neutral = 0.0;
};

/// CSV with header `id,p_positive,p_negative,p_neutral` (column order free).
/// Bad numbers raise SchemaError; rows off the simplex raise
/// InvalidDistribution naming the row.
std::vector<ProbabilityRow> parse_probabilities_csv(std::string_view text);
std::vector<ProbabilityRow> load_probabilities(const std::string& path);

// ---- observations and daily aggregation -------------------------------------

struct SentimentObservation {
  std::string model_id;
  Ticker ticker;
  Date date;
  std::optional<std::string> record_id;  // absent for grouped prompts
  double value = 0.0;                    // in [-1, 1]
  int headline_count = 1;                // headlines the value stands for
};

struct DailySentiment {
  std::string model_id;
  Ticker ticker;
  Date date;
  double score = 0.0;
  int n_headlines = 0;

  bool operator==(const DailySentiment&) const = default;
};

enum class AggregationMode { Sum, Mean };

/// One row per (ticker, date), ordered by ticker then date. The score is the
/// sum of observation values (or their mean in Mean mode). Values are summed
/// in sorted order with compensation, so the result does not depend on the
/// input order. Throws MixedModels when model ids differ and Error on values
/// outside [-1, 1].
std::vector<DailySentiment> aggregate_daily(std::span<const SentimentObservation> observations,
                                            AggregationMode mode = AggregationMode::Sum);

/// One observation per record with probabilities; UnknownRecordId when an id
/// is not in the corpus.
std::vector<SentimentObservation> finbert_observations(const Corpus& corpus,
                                                       std::span<const ProbabilityRow> rows,
                                                       const std::string& model_id = "FinBERT",
                                                       std::chrono::minutes day_offset = std::chrono::minutes{0});

// ---- market data --------------------------------------------------------------

struct PriceBar {
  Date date;
  double open = 0.0;
  double close = 0.0;
};

struct DailyReturn {
  Ticker ticker;
  Date date;
  double ret = 0.0;

  bool operator==(const DailyReturn&) const = default;
};

enum class ReturnMode { CloseToClose, Intraday };

std::string_view to_string(ReturnMode mode) noexcept;
std::optional<ReturnMode> return_mode_from_string(std::string_view text) noexcept;

/// close / open - 1. Throws NonPositivePrice for prices that are not
/// strictly positive and finite.
double compute_return(double open, double close);

/// CSV with at least `date,open,close` columns; `high`/`low` are ignored.
/// Rows come back sorted by date; duplicate dates raise SchemaError.
std::vector<PriceBar> parse_price_csv(std::string_view text);

/// Close-to-close: one return per bar after the first, dated on the later
/// bar. Intraday: close / open - 1 for every bar.
std::vector<DailyReturn> bars_to_returns(const Ticker& ticker, std::span<const PriceBar> bars, ReturnMode mode);

/// Reads `<dir>/<TICKER>.csv` for every ticker of the universe.
std::vector<DailyReturn> load_market(const std::string& dir, const Universe& universe,
                                     ReturnMode mode = ReturnMode::CloseToClose);

// ---- join -----------------------------------------------------------------------

enum class JoinPolicy { Drop, Error };

struct JoinedRow {
  Ticker ticker;
  Date date;
  double sentiment = 0.0;
  double ret = 0.0;
  int n_headlines = 0;

  bool operator==(const JoinedRow&) const = default;
};

struct JoinedSeries {
  std::string model_id;
  std::vector<JoinedRow> rows;  // ordered by ticker, then date
  std::vector<TickerDay> dropped_days;  // sentiment days with no return
  std::vector<std::string> warnings;
};

/// Inner join on (ticker, date). Under Drop, unmatched sentiment days are
/// listed in `dropped_days`; under Error they raise UnmatchedDays.
JoinedSeries join_sentiment_returns(std::span<const DailySentiment> daily, std::span<const DailyReturn> returns,
                                    JoinPolicy policy = JoinPolicy::Drop);

}  // namespace fxbench
