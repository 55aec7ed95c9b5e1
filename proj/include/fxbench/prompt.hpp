#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fxbench/corpus.hpp"

namespace fxbench {

enum class OutputKind { ClassToken, NumericScore, JsonClassMap, JsonScoreMap };
enum class Granularity { SingleHeadline, TickerDay, AllDay };

std::string_view to_string(OutputKind kind) noexcept;
std::string_view to_string(Granularity granularity) noexcept;
std::optional<OutputKind> output_kind_from_string(std::string_view text) noexcept;
std::optional<Granularity> granularity_from_string(std::string_view text) noexcept;

/// Class kinds produce labels; the others produce scores in [-1, 1].
constexpr bool is_class_kind(OutputKind kind) noexcept {
  return kind == OutputKind::ClassToken || kind == OutputKind::JsonClassMap;
}

/// A zero-shot prompt. Placeholders are `{name}` with `name` in [a-z_]; any
/// other brace text (such as the JSON example in P6) is literal.
struct PromptTemplate {
  std::string id;
  std::string body;
  OutputKind kind = OutputKind::ClassToken;
  Granularity granularity = Granularity::SingleHeadline;
  int max_tokens = 1;
  double temperature = 0.2;

  bool operator==(const PromptTemplate&) const = default;
};

/// Placeholder names in order of appearance.
std::vector<std::string> placeholders(std::string_view body);

/// Throws TemplateError unless the placeholders match the granularity, the
/// kind suits the granularity, max_tokens >= 1 and temperature is in [0, 2].
void validate_template(const PromptTemplate& prompt);

/// The twelve built-in prompts, P1..P6 then P1N..P6N.
std::vector<PromptTemplate> builtin_registry();

/// Applies a JSON object `{id: {body, kind, granularity, max_tokens,
/// temperature}}` to `registry`. Known ids may override any subset of
/// fields; new ids must supply body, kind and granularity.
std::vector<PromptTemplate> apply_template_overrides(std::vector<PromptTemplate> registry,
                                                     std::string_view json_text);

const PromptTemplate* find_template(const std::vector<PromptTemplate>& registry, std::string_view id);

struct RecordScope {
  std::string record_id;
  Ticker ticker;
  Date date;
  bool operator==(const RecordScope&) const = default;
};

struct TickerDayScope {
  Ticker ticker;
  Date date;
  bool operator==(const TickerDayScope&) const = default;
};

struct AllDayScope {
  Date date;
  std::vector<Ticker> tickers;  // tickers with at least one headline that day, sorted
  bool operator==(const AllDayScope&) const = default;
};

using PromptScope = std::variant<RecordScope, TickerDayScope, AllDayScope>;

struct RenderedPrompt {
  std::string template_id;
  std::string text;
  PromptScope scope;
  OutputKind expected_kind = OutputKind::ClassToken;
  std::size_t headline_count = 0;
  int max_tokens = 1;
  double temperature = 0.2;

  bool operator==(const RenderedPrompt&) const = default;
};

/// `["first", "second"]`; backslashes and double quotes inside a headline
/// are backslash-escaped.
std::string render_headline_list(const std::vector<HeadlineRecord>& records);

RenderedPrompt render(const PromptTemplate& prompt, const HeadlineRecord& record,
                      std::chrono::minutes day_offset = std::chrono::minutes{0});
RenderedPrompt render(const PromptTemplate& prompt, const TickerDay& key,
                      const std::vector<HeadlineRecord>& group);
RenderedPrompt render(const PromptTemplate& prompt, Date day,
                      const std::vector<HeadlineRecord>& group);

/// One request per record, per (ticker, day) group or per day, following the
/// template's granularity, in record / key order.
std::vector<RenderedPrompt> plan_requests(const Corpus& corpus, const PromptTemplate& prompt,
                                          std::chrono::minutes day_offset = std::chrono::minutes{0});

}  // namespace fxbench
