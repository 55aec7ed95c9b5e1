#include "fxbench/signals.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <set>
#include <unordered_map>

#include "fxbench/csv.hpp"
#include "fxbench/error.hpp"
#include "fxbench/numeric.hpp"

namespace fxbench {
namespace {

constexpr double kSimplexTolerance = 1e-6;

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::optional<double> to_double(std::string_view text) {
  std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  if (*first == '+') ++first;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

/// Column positions by header name; missing required columns raise
/// SchemaError on row 0.
std::unordered_map<std::string, std::size_t> header_index(const csv::Row& header,
                                                          std::initializer_list<const char*> required) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.fields.size(); ++i) index.emplace(trim(header.fields[i]), i);
  for (const char* name : required) {
    if (!index.count(name)) throw SchemaError(0, name, "missing column");
  }
  return index;
}

double number_field(const csv::Row& row, std::size_t row_no, const std::unordered_map<std::string, std::size_t>& index,
                    const char* name) {
  std::size_t col = index.at(name);
  if (col >= row.fields.size()) throw SchemaError(row_no, name, "missing value");
  auto value = to_double(row.fields[col]);
  if (!value) throw SchemaError(row_no, name, "not a number: '" + row.fields[col] + "'");
  return *value;
}

}  // namespace

void check_distribution(double p_pos, double p_neg, double p_neu) {
  for (double p : {p_pos, p_neg, p_neu}) {
    if (!std::isfinite(p) || p < 0.0) {
      throw InvalidDistribution("probabilities must be finite and non-negative");
    }
  }
  double sum = p_pos + p_neg + p_neu;
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw InvalidDistribution("probabilities sum to " + std::to_string(sum) + ", expected 1");
  }
}

double finbert_score(double p_pos, double p_neg, double p_neu) {
  check_distribution(p_pos, p_neg, p_neu);
  return p_pos - p_neg;
}

SentimentLabel finbert_class(double p_pos, double p_neg, double p_neu) {
  check_distribution(p_pos, p_neg, p_neu);
  const double top = std::max({p_pos, p_neg, p_neu});
  const int at_top = (p_pos == top) + (p_neg == top) + (p_neu == top);
  if (at_top > 1 || p_neu == top) return SentimentLabel::Neutral;
  return p_pos == top ? SentimentLabel::Positive : SentimentLabel::Negative;
}

std::vector<ProbabilityRow> parse_probabilities_csv(std::string_view text) {
  auto rows = csv::parse(text);
  if (rows.empty()) throw SchemaError(0, "id", "missing header");
  auto index = header_index(rows.front(), {"id", "p_positive", "p_negative", "p_neutral"});
  std::vector<ProbabilityRow> out;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    ProbabilityRow p;
    std::size_t id_col = index.at("id");
    p.id = id_col < row.fields.size() ? trim(row.fields[id_col]) : "";
    if (p.id.empty()) throw SchemaError(r, "id", "empty id");
    if (!seen.insert(p.id).second) throw SchemaError(r, "id", "duplicate id " + p.id);
    p.p_positive = number_field(row, r, index, "p_positive");
    p.p_negative = number_field(row, r, index, "p_negative");
    p.p_neutral = number_field(row, r, index, "p_neutral");
    try {
      check_distribution(p.p_positive, p.p_negative, p.p_neutral);
    } catch (const InvalidDistribution& e) {
      throw InvalidDistribution("row " + std::to_string(r) + " (" + p.id + "): " + e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ProbabilityRow> load_probabilities(const std::string& path) {
  return parse_probabilities_csv(csv::read_file(path));
}

std::vector<DailySentiment> aggregate_daily(std::span<const SentimentObservation> observations,
                                            AggregationMode mode) {
  struct Bucket {
    std::vector<double> values;
    int headlines = 0;
  };
  std::map<TickerDay, Bucket> buckets;
  const std::string* model = nullptr;
  for (const auto& obs : observations) {
    if (model && obs.model_id != *model) {
      throw MixedModels("observations mix models '" + *model + "' and '" + obs.model_id + "'");
    }
    model = &obs.model_id;
    if (!std::isfinite(obs.value) || obs.value < -1.0 || obs.value > 1.0) {
      throw Error("observation value " + std::to_string(obs.value) + " outside [-1, 1]");
    }
    if (obs.headline_count < 1) throw Error("observation headline_count must be >= 1");
    auto& bucket = buckets[TickerDay{obs.ticker, obs.date}];
    bucket.values.push_back(obs.value);
    bucket.headlines += obs.headline_count;
  }

  std::vector<DailySentiment> out;
  out.reserve(buckets.size());
  for (auto& [key, bucket] : buckets) {
    std::sort(bucket.values.begin(), bucket.values.end());
    double score = compensated_sum(bucket.values);
    if (mode == AggregationMode::Mean) score /= static_cast<double>(bucket.values.size());
    out.push_back(DailySentiment{*model, key.ticker, key.date, score, bucket.headlines});
  }
  return out;
}

std::vector<SentimentObservation> finbert_observations(const Corpus& corpus, std::span<const ProbabilityRow> rows,
                                                       const std::string& model_id, std::chrono::minutes day_offset) {
  std::vector<SentimentObservation> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    const HeadlineRecord* record = corpus.find(row.id);
    if (!record) throw UnknownRecordId(row.id);
    out.push_back(SentimentObservation{model_id, record->ticker, calendar_date(record->timestamp, day_offset),
                                       record->id, finbert_score(row.p_positive, row.p_negative, row.p_neutral), 1});
  }
  return out;
}

std::string_view to_string(ReturnMode mode) noexcept {
  return mode == ReturnMode::Intraday ? "intraday" : "close_to_close";
}

std::optional<ReturnMode> return_mode_from_string(std::string_view text) noexcept {
  if (text == "close_to_close") return ReturnMode::CloseToClose;
  if (text == "intraday") return ReturnMode::Intraday;
  return std::nullopt;
}

double compute_return(double open, double close) {
  if (!(std::isfinite(open) && open > 0.0) || !(std::isfinite(close) && close > 0.0)) {
    throw NonPositivePrice("prices must be positive, got open " + std::to_string(open) + " close " +
                           std::to_string(close));
  }
  return close / open - 1.0;
}

std::vector<PriceBar> parse_price_csv(std::string_view text) {
  auto rows = csv::parse(text);
  if (rows.empty()) throw SchemaError(0, "date", "missing header");
  auto index = header_index(rows.front(), {"date", "open", "close"});
  std::vector<PriceBar> bars;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    std::size_t date_col = index.at("date");
    auto date = date_col < row.fields.size() ? parse_date(trim(row.fields[date_col])) : std::nullopt;
    if (!date) throw SchemaError(r, "date", "expected YYYY-MM-DD");
    PriceBar bar{*date, number_field(row, r, index, "open"), number_field(row, r, index, "close")};
    if (bar.open <= 0.0 || bar.close <= 0.0) {
      throw NonPositivePrice("row " + std::to_string(r) + ": prices must be positive");
    }
    bars.push_back(bar);
  }
  std::sort(bars.begin(), bars.end(), [](const PriceBar& a, const PriceBar& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < bars.size(); ++i) {
    if (bars[i].date == bars[i - 1].date) {
      throw SchemaError(0, "date", "duplicate date " + format_date(bars[i].date));
    }
  }
  return bars;
}

std::vector<DailyReturn> bars_to_returns(const Ticker& ticker, std::span<const PriceBar> bars, ReturnMode mode) {
  std::vector<DailyReturn> out;
  if (mode == ReturnMode::Intraday) {
    for (const auto& bar : bars) out.push_back(DailyReturn{ticker, bar.date, compute_return(bar.open, bar.close)});
  } else {
    for (std::size_t i = 1; i < bars.size(); ++i) {
      out.push_back(DailyReturn{ticker, bars[i].date, compute_return(bars[i - 1].close, bars[i].close)});
    }
  }
  return out;
}

std::vector<DailyReturn> load_market(const std::string& dir, const Universe& universe, ReturnMode mode) {
  std::vector<DailyReturn> out;
  for (const auto& ticker : universe) {
    const auto path = (std::filesystem::path(dir) / (ticker.symbol() + ".csv")).string();
    std::vector<PriceBar> bars;
    try {
      bars = parse_price_csv(csv::read_file(path));
    } catch (const SchemaError& e) {
      throw SchemaError(e.row(), e.field(), ticker.symbol() + ".csv: " + e.reason());
    }
    auto returns = bars_to_returns(ticker, bars, mode);
    out.insert(out.end(), returns.begin(), returns.end());
  }
  return out;
}

JoinedSeries join_sentiment_returns(std::span<const DailySentiment> daily, std::span<const DailyReturn> returns,
                                    JoinPolicy policy) {
  std::map<TickerDay, double> by_day;
  for (const auto& r : returns) {
    if (!by_day.emplace(TickerDay{r.ticker, r.date}, r.ret).second) {
      throw Error("duplicate return for " + r.ticker.symbol() + " on " + format_date(r.date));
    }
  }

  JoinedSeries series;
  if (!daily.empty()) series.model_id = daily.front().model_id;
  for (const auto& d : daily) {
    auto it = by_day.find(TickerDay{d.ticker, d.date});
    if (it == by_day.end()) {
      series.dropped_days.push_back(TickerDay{d.ticker, d.date});
      continue;
    }
    series.rows.push_back(JoinedRow{d.ticker, d.date, d.score, it->second, d.n_headlines});
  }
  std::sort(series.rows.begin(), series.rows.end(), [](const JoinedRow& a, const JoinedRow& b) {
    return TickerDay{a.ticker, a.date} < TickerDay{b.ticker, b.date};
  });
  std::sort(series.dropped_days.begin(), series.dropped_days.end());

  if (!series.dropped_days.empty()) {
    if (policy == JoinPolicy::Error) {
      throw UnmatchedDays(series.dropped_days.size(),
                          std::to_string(series.dropped_days.size()) + " sentiment day(s) have no market return");
    }
    series.warnings.push_back(std::to_string(series.dropped_days.size()) +
                              " sentiment day(s) without a market return were dropped");
  }
  if (series.rows.empty() && !daily.empty()) {
    series.warnings.push_back("no sentiment day overlaps the market data");
  }
  return series;
}

}  // namespace fxbench
