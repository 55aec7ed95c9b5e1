#include "fxbench/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <functional>
#include <unordered_set>

#include <json.hpp>

#include "fxbench/csv.hpp"
#include "fxbench/error.hpp"
#include "fxbench/numeric.hpp"
#include "fxbench/tokenizer.hpp"

namespace fxbench {
namespace {

using json = nlohmann::json;

constexpr std::array<const char*, 9> kColumns = {"id",       "ticker", "timestamp",
                                                 "source",   "author", "url",
                                                 "headline", "article_text", "label"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<std::string> optional_text(std::optional<std::string> value) {
  if (!value || value->empty()) {
    return std::nullopt;
  }
  return value;
}

// Field accessor for one raw row; returns nullopt for absent fields.
using FieldGetter = std::function<std::optional<std::string>(const char*)>;

class RowValidator {
 public:
  explicit RowValidator(const LoadOptions& options) : options_(options) {}

  void accept(std::size_t row, const FieldGetter& get) {
    try {
      records_.push_back(validate(row, get));
      seen_ids_.insert(records_.back().id);
    } catch (const SchemaError& e) {
      reject(e, e.row(), e.field(), e.reason());
    } catch (const UnknownTicker& e) {
      reject(e, e.row(), "ticker", "ticker '" + e.ticker() + "' is not in the universe");
    }
  }

  void reject_row(std::size_t row, const std::string& field, const std::string& reason) {
    SchemaError e(row, field, reason);
    reject(e, row, field, reason);
  }

  LoadResult finish() && {
    return LoadResult{Corpus(std::move(records_), options_.universe), std::move(rejected_)};
  }

 private:
  template <typename E>
  void reject(const E& e, std::size_t row, const std::string& field, const std::string& reason) {
    if (options_.strict) {
      throw e;
    }
    rejected_.push_back(RowIssue{row, field, reason});
  }

  HeadlineRecord validate(std::size_t row, const FieldGetter& get) const {
    auto required = [&](const char* field) {
      auto value = get(field);
      if (!value) {
        throw SchemaError(row, field, "missing");
      }
      return *value;
    };

    std::string id = std::string(trim(required("id")));
    if (id.empty()) {
      throw SchemaError(row, "id", "empty");
    }
    if (seen_ids_.count(id) != 0) {
      throw SchemaError(row, "id", "duplicate id '" + id + "'");
    }

    std::string symbol = std::string(trim(required("ticker")));
    auto ticker = Ticker::parse(symbol);
    if (!ticker) {
      throw SchemaError(row, "ticker", "'" + symbol + "' is not a six-letter upper-case symbol");
    }
    if (options_.universe.count(*ticker) == 0) {
      throw UnknownTicker(row, symbol);
    }

    std::string ts_text = std::string(trim(required("timestamp")));
    auto timestamp = parse_timestamp(ts_text);
    if (!timestamp) {
      throw SchemaError(row, "timestamp", "'" + ts_text + "' is not ISO-8601 with a UTC offset");
    }

    std::string headline = required("headline");
    if (trim(headline).empty()) {
      throw SchemaError(row, "headline", "blank");
    }

    std::string label_text = required("label");
    auto label = label_from_token(label_text);
    if (!label) {
      throw SchemaError(row, "label", "'" + label_text + "' is not positive|neutral|negative");
    }

    return HeadlineRecord{std::move(id),
                          *ticker,
                          *timestamp,
                          required("source"),
                          optional_text(get("author")),
                          optional_text(get("url")),
                          std::move(headline),
                          optional_text(get("article_text")),
                          *label};
  }

  const LoadOptions& options_;
  std::vector<HeadlineRecord> records_;
  std::vector<RowIssue> rejected_;
  std::unordered_set<std::string> seen_ids_;
};

CorpusFormat detect_format(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") {
    return CorpusFormat::JsonLines;
  }
  return CorpusFormat::Csv;
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool iequal_at(std::string_view text, std::size_t pos, std::string_view word) {
  if (pos + word.size() > text.size()) {
    return false;
  }
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (lower(text[pos + i]) != lower(word[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::optional<SentimentLabel> label_from_code(int code) noexcept {
  switch (code) {
    case -1:
      return SentimentLabel::Negative;
    case 0:
      return SentimentLabel::Neutral;
    case 1:
      return SentimentLabel::Positive;
    default:
      return std::nullopt;
  }
}

std::string_view canonical_token(SentimentLabel label) noexcept {
  switch (label) {
    case SentimentLabel::Negative:
      return "negative";
    case SentimentLabel::Neutral:
      return "neutral";
    case SentimentLabel::Positive:
      return "positive";
  }
  return "neutral";
}

std::optional<SentimentLabel> label_from_token(std::string_view token) noexcept {
  for (auto label : kAllLabels) {
    if (token == canonical_token(label)) {
      return label;
    }
  }
  return std::nullopt;
}

Corpus::Corpus(std::vector<HeadlineRecord> records, Universe universe)
    : records_(std::move(records)), universe_(std::move(universe)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (universe_.count(r.ticker) == 0) {
      throw Error("record '" + r.id + "': ticker " + r.ticker.symbol() + " outside universe");
    }
    if (trim(r.headline).empty()) {
      throw Error("record '" + r.id + "': blank headline");
    }
  }
  std::stable_sort(records_.begin(), records_.end(), [](const auto& a, const auto& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.id < b.id;
  });
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!index_.emplace(records_[i].id, i).second) {
      throw Error("duplicate record id '" + records_[i].id + "'");
    }
  }
}

const HeadlineRecord* Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

LoadResult parse_corpus_csv(std::string_view text, const LoadOptions& options) {
  auto rows = csv::parse(text);
  if (rows.empty()) {
    throw SchemaError(0, "id", "missing header");
  }
  std::unordered_map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < rows[0].fields.size(); ++i) {
    columns.emplace(std::string(trim(rows[0].fields[i])), i);
  }
  for (const char* name : kColumns) {
    if (columns.count(name) == 0) {
      throw SchemaError(0, name, "missing column");
    }
  }

  RowValidator validator(options);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& fields = rows[r].fields;
    if (fields.size() != rows[0].fields.size()) {
      validator.reject_row(r, "", "expected " + std::to_string(rows[0].fields.size()) +
                                      " fields, found " + std::to_string(fields.size()));
      continue;
    }
    validator.accept(r, [&](const char* name) -> std::optional<std::string> {
      return fields[columns.at(name)];
    });
  }
  return std::move(validator).finish();
}

LoadResult parse_corpus_jsonl(std::string_view text, const LoadOptions& options) {
  RowValidator validator(options);
  std::size_t row = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty()) {
      continue;
    }
    ++row;
    json object = json::parse(line, nullptr, false);
    if (object.is_discarded() || !object.is_object()) {
      validator.reject_row(row, "", "not a JSON object");
      continue;
    }
    validator.accept(row, [&](const char* name) -> std::optional<std::string> {
      auto it = object.find(name);
      if (it == object.end() || it->is_null()) {
        return std::nullopt;
      }
      if (!it->is_string()) {
        throw SchemaError(row, name, "expected a string");
      }
      return it->get<std::string>();
    });
  }
  return std::move(validator).finish();
}

LoadResult load_corpus(const std::string& path, const LoadOptions& options) {
  std::string text = csv::read_file(path);
  auto format = options.format == CorpusFormat::Auto ? detect_format(path) : options.format;
  return format == CorpusFormat::JsonLines ? parse_corpus_jsonl(text, options)
                                           : parse_corpus_csv(text, options);
}

void write_corpus_csv(std::ostream& out, const Corpus& corpus) {
  csv::write_row(out, std::vector<std::string>(kColumns.begin(), kColumns.end()));
  for (const auto& r : corpus.records()) {
    csv::write_row(out, {r.id, r.ticker.symbol(), format_timestamp(r.timestamp), r.source,
                         r.author.value_or(""), r.url.value_or(""), r.headline,
                         r.article_text.value_or(""), std::string(canonical_token(r.label))});
  }
}

void write_corpus_jsonl(std::ostream& out, const Corpus& corpus) {
  auto optional_json = [](const std::optional<std::string>& v) -> json {
    return v ? json(*v) : json(nullptr);
  };
  for (const auto& r : corpus.records()) {
    json object = {{"id", r.id},
                   {"ticker", r.ticker.symbol()},
                   {"timestamp", format_timestamp(r.timestamp)},
                   {"source", r.source},
                   {"author", optional_json(r.author)},
                   {"url", optional_json(r.url)},
                   {"headline", r.headline},
                   {"article_text", optional_json(r.article_text)},
                   {"label", canonical_token(r.label)}};
    out << object.dump() << '\n';
  }
}

bool mentions_pair(std::string_view headline, const Ticker& ticker) {
  const std::string_view base = ticker.base();
  const std::string_view quote = ticker.quote();
  for (std::size_t pos = 0; pos + 6 <= headline.size(); ++pos) {
    if (!iequal_at(headline, pos, base)) {
      continue;
    }
    std::size_t after = pos + 3;
    if (iequal_at(headline, after, quote)) {
      return true;
    }
    if (after < headline.size()) {
      char sep = headline[after];
      if ((sep == '/' || sep == '-' || sep == ' ') && iequal_at(headline, after + 1, quote)) {
        return true;
      }
    }
  }
  return false;
}

Corpus filter_without_pair_mention(const Corpus& corpus) {
  std::vector<HeadlineRecord> kept;
  for (const auto& r : corpus.records()) {
    if (!mentions_pair(r.headline, r.ticker)) {
      kept.push_back(r);
    }
  }
  return Corpus(std::move(kept), corpus.universe());
}

TokenStats token_stats(const Corpus& corpus, TextField field, const Tokenizer& tokenizer) {
  std::vector<double> counts;
  for (const auto& r : corpus.records()) {
    if (field == TextField::Headline) {
      counts.push_back(static_cast<double>(tokenizer.count(r.headline)));
    } else if (r.article_text) {
      counts.push_back(static_cast<double>(tokenizer.count(*r.article_text)));
    }
  }
  if (counts.empty()) {
    throw EmptySelection(field == TextField::Headline ? "corpus has no headlines"
                                                      : "corpus has no article text");
  }
  const double n = static_cast<double>(counts.size());
  const double mean = compensated_sum(counts) / n;
  CompensatedSum squares;
  for (double c : counts) {
    squares.add((c - mean) * (c - mean));
  }
  return TokenStats{mean, std::sqrt(squares.value() / n), counts.size()};
}

TickerDayGroups group_by_ticker_day(const Corpus& corpus, std::chrono::minutes day_offset) {
  TickerDayGroups groups;
  for (const auto& r : corpus.records()) {
    groups[TickerDay{r.ticker, calendar_date(r.timestamp, day_offset)}].push_back(r);
  }
  return groups;
}

DayGroups group_by_day(const Corpus& corpus, std::chrono::minutes day_offset) {
  DayGroups groups;
  for (const auto& r : corpus.records()) {
    groups[calendar_date(r.timestamp, day_offset)].push_back(r);
  }
  return groups;
}

}  // namespace fxbench
