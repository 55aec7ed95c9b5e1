#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fxbench/dates.hpp"
#include "fxbench/ticker.hpp"

namespace fxbench {

class Tokenizer;

enum class SentimentLabel { Negative, Neutral, Positive };

inline constexpr std::array<SentimentLabel, 3> kAllLabels = {
    SentimentLabel::Negative, SentimentLabel::Neutral, SentimentLabel::Positive};

/// -1 / 0 / +1.
constexpr int integer_code(SentimentLabel label) noexcept {
  switch (label) {
    case SentimentLabel::Negative:
      return -1;
    case SentimentLabel::Neutral:
      return 0;
    case SentimentLabel::Positive:
      return 1;
  }
  return 0;
}

std::optional<SentimentLabel> label_from_code(int code) noexcept;

/// "negative" | "neutral" | "positive".
std::string_view canonical_token(SentimentLabel label) noexcept;

/// Exact match against the canonical lower-case tokens.
std::optional<SentimentLabel> label_from_token(std::string_view token) noexcept;

struct HeadlineRecord {
  std::string id;
  Ticker ticker;
  Timestamp timestamp;
  std::string source;
  std::optional<std::string> author;
  std::optional<std::string> url;
  std::string headline;
  std::optional<std::string> article_text;
  SentimentLabel label = SentimentLabel::Neutral;

  bool operator==(const HeadlineRecord&) const = default;
};

/// Immutable, validated, timestamp-ordered collection of annotated headlines.
///
/// Records are ordered by (timestamp, id). Ids are unique, every ticker lies
/// in the universe and every headline is non-blank.
class Corpus {
 public:
  /// Throws fxbench::Error on any invariant violation.
  Corpus(std::vector<HeadlineRecord> records, Universe universe);

  const std::vector<HeadlineRecord>& records() const noexcept { return records_; }
  const Universe& universe() const noexcept { return universe_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const HeadlineRecord* find(std::string_view id) const;

  bool operator==(const Corpus& other) const {
    return records_ == other.records_ && universe_ == other.universe_;
  }

 private:
  std::vector<HeadlineRecord> records_;
  Universe universe_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class CorpusFormat { Auto, Csv, JsonLines };

struct LoadOptions {
  Universe universe = default_universe();
  /// Abort on the first invalid row instead of skipping it.
  bool strict = false;
  CorpusFormat format = CorpusFormat::Auto;
};

struct RowIssue {
  std::size_t row = 0;
  std::string field;
  std::string reason;
};

struct LoadResult {
  Corpus corpus;
  std::vector<RowIssue> rejected;
};

/// Reads CSV (`.csv`) or JSON-lines (`.jsonl`, `.ndjson`, `.json`) files.
///
/// Invalid rows are skipped and listed in `rejected` unless `strict` is set,
/// in which case the first one raises SchemaError or UnknownTicker. A missing
/// file raises FileNotFound; a missing CSV column raises SchemaError on row 0.
LoadResult load_corpus(const std::string& path, const LoadOptions& options = {});
LoadResult parse_corpus_csv(std::string_view text, const LoadOptions& options = {});
LoadResult parse_corpus_jsonl(std::string_view text, const LoadOptions& options = {});

void write_corpus_csv(std::ostream& out, const Corpus& corpus);
void write_corpus_jsonl(std::ostream& out, const Corpus& corpus);

/// True when the headline names the pair as TICKER, BASE/QUOTE, BASE-QUOTE or
/// "BASE QUOTE", case-insensitively.
bool mentions_pair(std::string_view headline, const Ticker& ticker);

Corpus filter_without_pair_mention(const Corpus& corpus);

enum class TextField { Headline, Article };

struct TokenStats {
  std::optional<double> mean;
  std::optional<double> std_dev;  // population
  std::size_t count = 0;
};

/// Throws EmptySelection when no record carries `field`.
TokenStats token_stats(const Corpus& corpus, TextField field, const Tokenizer& tokenizer);

struct TickerDay {
  Ticker ticker;
  Date date;

  auto operator<=>(const TickerDay&) const = default;
};

using TickerDayGroups = std::map<TickerDay, std::vector<HeadlineRecord>>;
using DayGroups = std::map<Date, std::vector<HeadlineRecord>>;

/// Group keys use the calendar date of each timestamp shifted by
/// `day_offset` (zero = UTC). Groups keep corpus order.
TickerDayGroups group_by_ticker_day(const Corpus& corpus,
                                    std::chrono::minutes day_offset = std::chrono::minutes{0});
DayGroups group_by_day(const Corpus& corpus,
                       std::chrono::minutes day_offset = std::chrono::minutes{0});

}  // namespace fxbench
