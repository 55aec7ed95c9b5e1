#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fxbench/corpus.hpp"
#include "fxbench/prompt.hpp"
#include "fxbench/ticker.hpp"

namespace fxbench {

enum class ParseErrorKind { Unparseable, OutOfRange, NoJsonFound, MalformedJson, MissingTicker };

std::string_view to_string(ParseErrorKind kind) noexcept;

struct ParseError {
  ParseErrorKind kind = ParseErrorKind::Unparseable;
  std::string detail;
  std::optional<double> value;  // OutOfRange only
  std::set<Ticker> missing;     // MissingTicker only
};

/// Either a value or a ParseError, never both.
template <class T>
class ParseResult {
 public:
  ParseResult(T value) : state_(std::move(value)) {}
  ParseResult(ParseError error) : state_(std::move(error)) {}

  bool ok() const noexcept { return state_.index() == 0; }
  const T& value() const { return std::get<0>(state_); }
  const ParseError& error() const { return std::get<1>(state_); }

 private:
  std::variant<T, ParseError> state_;
};

struct ClassParse {
  SentimentLabel label;
  bool lenient = false;  // matched on the first word of a longer reply
};

struct ParseOptions {
  bool clamp_scores = false;  // clamp out-of-range numbers instead of rejecting them
};

/// Exactly one of the two fields is set, depending on the output kind.
struct ParsedSentiment {
  std::optional<SentimentLabel> class_label;
  std::optional<double> score;

  /// -1/0/+1 for labels, the score itself otherwise.
  double value() const;
  bool operator==(const ParsedSentiment&) const = default;
};

struct JsonMapParse {
  std::map<Ticker, ParsedSentiment> entries;  // expected tickers only
  std::vector<Ticker> extra_tickers;
  std::vector<std::string> warnings;
};

/// Outcome of a map parse. On error, `partial` still holds the entries that
/// parsed cleanly so that callers can score what is there.
struct JsonMapOutcome {
  ParseResult<JsonMapParse> result;
  std::map<Ticker, ParsedSentiment> partial;
};

ParseResult<ClassParse> parse_class(std::string_view text);

ParseResult<double> parse_numeric(std::string_view text, const ParseOptions& options = {});

JsonMapOutcome parse_json_map(std::string_view text, const std::set<Ticker>& expected,
                              OutputKind kind, const ParseOptions& options = {});

/// Single-value dispatch for ClassToken / NumericScore replies.
ParseResult<ParsedSentiment> parse_single(std::string_view text, OutputKind kind,
                                          const ParseOptions& options = {});

/// Position and length of the first balanced `{...}` block, quotes respected.
/// Returns nullopt when there is no `{`; length 0 when it never closes.
std::optional<std::pair<std::size_t, std::size_t>> find_json_block(std::string_view text);

}  // namespace fxbench
