#include "fxbench/prompt.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "fxbench/error.hpp"

namespace fxbench {
namespace {

using json = nlohmann::json;

constexpr const char* kAnswerClass = "Answer in one token: positive, negative, or neutral.";
constexpr const char* kAnswerTrade =
    "Answer in one token: positive for buy, negative for sell, or neutral for hold position";
constexpr const char* kAnswerNumber =
    "Provide only a number ranging from -1 to 1 in a list eg [0]. 1 indicates a fully "
    "positive/bullish sentiment or buy position.";

bool is_name_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

struct PlaceholderRules {
  std::set<std::string> required;
  std::set<std::string> optional;
};

PlaceholderRules rules_for(Granularity granularity) {
  switch (granularity) {
    case Granularity::SingleHeadline:
      return {{"headline"}, {"ticker"}};
    case Granularity::TickerDay:
      return {{"ticker_daily_headlines"}, {"ticker"}};
    case Granularity::AllDay:
      return {{"all_daily_headlines", "tickers"}, {}};
  }
  return {};
}

// Single pass over the body: substituted values are never re-scanned, so
// brace text inside a headline cannot be mistaken for a placeholder.
std::string substitute(std::string_view body, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(body.size() + 128);
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      std::size_t j = i + 1;
      while (j < body.size() && is_name_char(body[j])) ++j;
      if (j > i + 1 && j < body.size() && body[j] == '}') {
        auto it = values.find(std::string(body.substr(i + 1, j - i - 1)));
        if (it == values.end()) {
          throw TemplateError("no value for placeholder " + std::string(body.substr(i, j - i + 1)));
        }
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out.push_back(body[i]);
    ++i;
  }
  return out;
}

std::string join_tickers(const std::vector<Ticker>& tickers) {
  std::string out;
  for (std::size_t i = 0; i < tickers.size(); ++i) {
    if (i) out += ", ";
    out += tickers[i].symbol();
  }
  return out;
}

void require_granularity(const PromptTemplate& prompt, Granularity expected) {
  if (prompt.granularity != expected) {
    throw GranularityMismatch("template " + prompt.id + " has granularity " +
                              std::string(to_string(prompt.granularity)) + ", scope is " +
                              std::string(to_string(expected)));
  }
}

PromptTemplate make(std::string id, std::string body, OutputKind kind, Granularity granularity,
                    int max_tokens) {
  return PromptTemplate{std::move(id), std::move(body), kind, granularity, max_tokens, 0.2};
}

}  // namespace

std::string_view to_string(OutputKind kind) noexcept {
  switch (kind) {
    case OutputKind::ClassToken:
      return "class_token";
    case OutputKind::NumericScore:
      return "numeric_score";
    case OutputKind::JsonClassMap:
      return "json_class_map";
    case OutputKind::JsonScoreMap:
      return "json_score_map";
  }
  return "class_token";
}

std::string_view to_string(Granularity granularity) noexcept {
  switch (granularity) {
    case Granularity::SingleHeadline:
      return "single_headline";
    case Granularity::TickerDay:
      return "ticker_day";
    case Granularity::AllDay:
      return "all_day";
  }
  return "single_headline";
}

std::optional<OutputKind> output_kind_from_string(std::string_view text) noexcept {
  for (auto kind : {OutputKind::ClassToken, OutputKind::NumericScore, OutputKind::JsonClassMap,
                    OutputKind::JsonScoreMap}) {
    if (text == to_string(kind)) return kind;
  }
  return std::nullopt;
}

std::optional<Granularity> granularity_from_string(std::string_view text) noexcept {
  for (auto g : {Granularity::SingleHeadline, Granularity::TickerDay, Granularity::AllDay}) {
    if (text == to_string(g)) return g;
  }
  return std::nullopt;
}

std::vector<std::string> placeholders(std::string_view body) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < body.size() && is_name_char(body[j])) ++j;
    if (j > i + 1 && j < body.size() && body[j] == '}') {
      names.emplace_back(body.substr(i + 1, j - i - 1));
      i = j;
    }
  }
  return names;
}

void validate_template(const PromptTemplate& prompt) {
  auto fail = [&](const std::string& why) { throw TemplateError("template '" + prompt.id + "': " + why); };
  if (prompt.id.empty()) fail("empty id");
  if (prompt.max_tokens < 1) fail("max_tokens must be >= 1");
  if (!(prompt.temperature >= 0.0 && prompt.temperature <= 2.0)) fail("temperature must be in [0, 2]");

  bool json_kind = prompt.kind == OutputKind::JsonClassMap || prompt.kind == OutputKind::JsonScoreMap;
  if (json_kind != (prompt.granularity == Granularity::AllDay)) {
    fail("kind " + std::string(to_string(prompt.kind)) + " does not suit granularity " +
         std::string(to_string(prompt.granularity)));
  }

  auto rules = rules_for(prompt.granularity);
  std::set<std::string> found;
  for (const auto& name : placeholders(prompt.body)) {
    if (rules.required.count(name) == 0 && rules.optional.count(name) == 0) {
      fail("placeholder {" + name + "} not allowed for " + std::string(to_string(prompt.granularity)));
    }
    found.insert(name);
  }
  for (const auto& name : rules.required) {
    if (found.count(name) == 0) fail("missing placeholder {" + name + "}");
  }
}

std::vector<PromptTemplate> builtin_registry() {
  using G = Granularity;
  using K = OutputKind;
  const std::string p1 = "Act as a financial expert holding {ticker}. How do you feel about the headline {headline}? ";
  const std::string p2 = "Act as a financial expert. Classify the sentiment for {ticker} based only on the headline {headline}. ";
  const std::string p3 = "Act as a sentiment analysis model trained on financial news headlines. Classify the sentiment of the headline {headline}. ";
  const std::string p4 = "Act as an expert at forex trading holding {ticker}. Based only on the headline {headline}, will you buy, sell or hold {ticker} in the short term? ";
  const std::string p6_intro =
      "Act as a sentiment analysis service of a financial platform. Based only on the following list of "
      "headlines {all_daily_headlines}, provide a summary of the daily sentiment for the forex pairs: {tickers}. ";
  return {
      make("P1", p1 + kAnswerClass, K::ClassToken, G::SingleHeadline, 1),
      make("P2", p2 + kAnswerClass, K::ClassToken, G::SingleHeadline, 1),
      make("P3", p3 + kAnswerClass, K::ClassToken, G::SingleHeadline, 1),
      make("P4", p4 + kAnswerTrade + ".", K::ClassToken, G::SingleHeadline, 1),
      make("P5",
           std::string("Act as an expert at forex trading holding {ticker}. Based only on the following list of "
                       "headlines {ticker_daily_headlines}, will you buy, sell or hold {ticker} in the short term? ") +
               kAnswerTrade,
           K::ClassToken, G::TickerDay, 1),
      make("P6",
           p6_intro +
               "Provide only the sentiment per forex pair in JSON format eg {'USDJPY': 'positive', 'EURUSD': "
               "'neutral'}. The sentiment can be positive for buy, negative for sell, or neutral for hold position.",
           K::JsonClassMap, G::AllDay, 200),
      make("P1N", p1 + kAnswerNumber, K::NumericScore, G::SingleHeadline, 10),
      make("P2N", p2 + kAnswerNumber, K::NumericScore, G::SingleHeadline, 10),
      make("P3N", p3 + kAnswerNumber, K::NumericScore, G::SingleHeadline, 10),
      make("P4N", p4 + kAnswerNumber, K::NumericScore, G::SingleHeadline, 10),
      make("P5N",
           "Act as an expert at forex trading. Based only on the following list of headlines "
           "{ticker_daily_headlines}, provide the short-term market sentiment score for {ticker}. Provide only a "
           "sentiment score ranging from -1 to 1 in a list eg [1]. 1 indicates a fully positive/bullish sentiment.",
           K::NumericScore, G::TickerDay, 20),
      make("P6N",
           p6_intro +
               "Provide the sentiment score per forex pair in JSON eg {'USDJPY': -0.4, 'EURUSD': 0.6}. The "
               "sentiment score ranges from -1 to 1. 1 indicates a fully positive/bullish sentiment.",
           K::JsonScoreMap, G::AllDay, 200),
  };
}

std::vector<PromptTemplate> apply_template_overrides(std::vector<PromptTemplate> registry,
                                                     std::string_view json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw TemplateError("template overrides must be a JSON object keyed by template id");
  }
  for (const auto& [id, spec] : doc.items()) {
    if (!spec.is_object()) {
      throw TemplateError("template '" + id + "': override must be an object");
    }
    auto existing = std::find_if(registry.begin(), registry.end(), [&](const auto& t) { return t.id == id; });
    bool is_new = existing == registry.end();
    PromptTemplate t = is_new ? PromptTemplate{id, "", OutputKind::ClassToken, Granularity::SingleHeadline, 1, 0.2}
                              : *existing;
    if (is_new) {
      for (const char* field : {"body", "kind", "granularity"}) {
        if (!spec.contains(field)) {
          throw TemplateError("template '" + id + "': new templates need '" + field + "'");
        }
      }
    }
    try {
      if (spec.contains("body")) t.body = spec.at("body").get<std::string>();
      if (spec.contains("kind")) {
        auto kind = output_kind_from_string(spec.at("kind").get<std::string>());
        if (!kind) throw TemplateError("template '" + id + "': unknown kind");
        t.kind = *kind;
      }
      if (spec.contains("granularity")) {
        auto g = granularity_from_string(spec.at("granularity").get<std::string>());
        if (!g) throw TemplateError("template '" + id + "': unknown granularity");
        t.granularity = *g;
      }
      if (spec.contains("max_tokens")) t.max_tokens = spec.at("max_tokens").get<int>();
      if (spec.contains("temperature")) t.temperature = spec.at("temperature").get<double>();
    } catch (const json::exception& e) {
      throw TemplateError("template '" + id + "': " + e.what());
    }
    validate_template(t);
    if (is_new) {
      registry.push_back(std::move(t));
    } else {
      *existing = std::move(t);
    }
  }
  return registry;
}

const PromptTemplate* find_template(const std::vector<PromptTemplate>& registry, std::string_view id) {
  auto it = std::find_if(registry.begin(), registry.end(), [&](const auto& t) { return t.id == id; });
  return it == registry.end() ? nullptr : &*it;
}

std::string render_headline_list(const std::vector<HeadlineRecord>& records) {
  std::string out = "[";
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i) out += ", ";
    out.push_back('"');
    for (char c : records[i].headline) {
      if (c == '"' || c == '\\') out.push_back('\\');
      out.push_back(c);
    }
    out.push_back('"');
  }
  out.push_back(']');
  return out;
}

RenderedPrompt render(const PromptTemplate& prompt, const HeadlineRecord& record,
                      std::chrono::minutes day_offset) {
  require_granularity(prompt, Granularity::SingleHeadline);
  std::string text = substitute(prompt.body, {{"ticker", record.ticker.symbol()}, {"headline", record.headline}});
  return RenderedPrompt{prompt.id,
                        std::move(text),
                        RecordScope{record.id, record.ticker, calendar_date(record.timestamp, day_offset)},
                        prompt.kind,
                        1,
                        prompt.max_tokens,
                        prompt.temperature};
}

RenderedPrompt render(const PromptTemplate& prompt, const TickerDay& key,
                      const std::vector<HeadlineRecord>& group) {
  require_granularity(prompt, Granularity::TickerDay);
  if (group.empty()) {
    throw EmptyGroup("template " + prompt.id + ": no headlines for " + key.ticker.symbol() + " on " +
                     format_date(key.date));
  }
  for (const auto& r : group) {
    if (r.ticker != key.ticker) {
      throw GranularityMismatch("record " + r.id + " does not belong to " + key.ticker.symbol());
    }
  }
  std::string text = substitute(prompt.body, {{"ticker", key.ticker.symbol()},
                                              {"ticker_daily_headlines", render_headline_list(group)}});
  return RenderedPrompt{prompt.id,   std::move(text),   TickerDayScope{key.ticker, key.date},
                        prompt.kind, group.size(),      prompt.max_tokens,
                        prompt.temperature};
}

RenderedPrompt render(const PromptTemplate& prompt, Date day, const std::vector<HeadlineRecord>& group) {
  require_granularity(prompt, Granularity::AllDay);
  if (group.empty()) {
    throw EmptyGroup("template " + prompt.id + ": no headlines on " + format_date(day));
  }
  std::set<Ticker> distinct;
  for (const auto& r : group) distinct.insert(r.ticker);
  std::vector<Ticker> tickers(distinct.begin(), distinct.end());
  std::string text = substitute(prompt.body, {{"tickers", join_tickers(tickers)},
                                              {"all_daily_headlines", render_headline_list(group)}});
  return RenderedPrompt{prompt.id,
                        std::move(text),
                        AllDayScope{day, std::move(tickers)},
                        prompt.kind,
                        group.size(),
                        prompt.max_tokens,
                        prompt.temperature};
}

std::vector<RenderedPrompt> plan_requests(const Corpus& corpus, const PromptTemplate& prompt,
                                          std::chrono::minutes day_offset) {
  std::vector<RenderedPrompt> plan;
  switch (prompt.granularity) {
    case Granularity::SingleHeadline:
      plan.reserve(corpus.size());
      for (const auto& r : corpus.records()) plan.push_back(render(prompt, r, day_offset));
      break;
    case Granularity::TickerDay:
      for (const auto& [key, group] : group_by_ticker_day(corpus, day_offset)) {
        plan.push_back(render(prompt, key, group));
      }
      break;
    case Granularity::AllDay:
      for (const auto& [day, group] : group_by_day(corpus, day_offset)) {
        plan.push_back(render(prompt, day, group));
      }
      break;
  }
  return plan;
}

}  // namespace fxbench
