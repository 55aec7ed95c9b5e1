#include "fxbench/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "fxbench/error.hpp"
#include "fxbench/numeric.hpp"

namespace fxbench {
namespace {

std::size_t label_index(SentimentLabel label) { return static_cast<std::size_t>(integer_code(label) + 1); }

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

struct Tally {
  double credited = 0.0;
  std::size_t considered = 0;
};

void tally_row(Tally& t, const JoinedRow& row, ZeroPolicy policy) {
  const int s = sign(row.sentiment);
  if (s == 0) {
    if (policy == ZeroPolicy::Exclude) return;
    ++t.considered;
    if (policy == ZeroPolicy::CountHalf) t.credited += 0.5;
    return;
  }
  ++t.considered;
  if (s == sign(row.ret)) t.credited += 1.0;
}

std::optional<double> tally_value(const Tally& t) {
  if (t.considered == 0) return std::nullopt;
  return t.credited / static_cast<double>(t.considered);
}

}  // namespace

std::string_view to_string(Averaging averaging) noexcept {
  return averaging == Averaging::Macro ? "macro" : "weighted";
}

void ConfusionMatrix::add(SentimentLabel truth, SentimentLabel predicted) {
  ++counts[label_index(truth)][label_index(predicted)];
}

std::int64_t ConfusionMatrix::scored() const noexcept {
  std::int64_t n = 0;
  for (const auto& row : counts) {
    for (auto c : row) n += c;
  }
  return n;
}

std::int64_t ConfusionMatrix::support(SentimentLabel truth) const noexcept {
  const auto& row = counts[label_index(truth)];
  return row[0] + row[1] + row[2];
}

std::int64_t ConfusionMatrix::predicted(SentimentLabel label) const noexcept {
  const std::size_t col = label_index(label);
  return counts[0][col] + counts[1][col] + counts[2][col];
}

std::int64_t ConfusionMatrix::correct() const noexcept { return counts[0][0] + counts[1][1] + counts[2][2]; }

ClassificationMetrics metrics_from_confusion(const ConfusionMatrix& m, Averaging averaging) {
  const std::int64_t n = m.scored();
  if (n == 0) throw EmptyInput("no scored predictions");

  ClassificationMetrics out;
  out.confusion = m;
  out.averaging = averaging;
  out.accuracy = ratio(m.correct(), n);

  CompensatedSum precision, recall, f1;
  std::int64_t abs_error = 0;
  for (auto label : kAllLabels) {
    const std::size_t i = label_index(label);
    const std::int64_t tp = m.counts[i][i];
    ClassMetrics c;
    c.support = m.support(label);
    c.precision = ratio(tp, m.predicted(label));
    c.recall = ratio(tp, c.support);
    c.f1 = c.precision + c.recall > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    out.per_class[label] = c;

    const double weight = averaging == Averaging::Weighted ? ratio(c.support, n) : 1.0 / 3.0;
    precision.add(weight * c.precision);
    recall.add(weight * c.recall);
    f1.add(weight * c.f1);

    for (auto predicted : kAllLabels) {
      abs_error += m.counts[i][label_index(predicted)] * std::abs(integer_code(label) - integer_code(predicted));
    }
  }
  out.precision = precision.value();
  // The support-weighted mean of per-class recall is sum(tp) / n.
  out.recall = averaging == Averaging::Weighted ? out.accuracy : recall.value();
  out.f1 = f1.value();
  out.s_mae = ratio(abs_error, n);
  return out;
}

ClassificationMetrics classification_metrics(std::span<const Prediction> predictions, const Corpus& truths,
                                             Averaging averaging) {
  ConfusionMatrix m;
  for (const auto& p : predictions) {
    const HeadlineRecord* record = truths.find(p.record_id);
    if (!record) throw UnknownRecordId(p.record_id);
    if (p.label) {
      m.add(record->label, *p.label);
    } else {
      ++m.unscored;
    }
  }
  return metrics_from_confusion(m, averaging);
}

std::map<Ticker, ClassificationMetrics> classification_by_ticker(std::span<const Prediction> predictions,
                                                                 const Corpus& truths, Averaging averaging) {
  std::map<Ticker, ConfusionMatrix> per_ticker;
  for (const auto& p : predictions) {
    const HeadlineRecord* record = truths.find(p.record_id);
    if (!record) throw UnknownRecordId(p.record_id);
    auto& m = per_ticker[record->ticker];
    if (p.label) {
      m.add(record->label, *p.label);
    } else {
      ++m.unscored;
    }
  }
  std::map<Ticker, ClassificationMetrics> out;
  for (const auto& [ticker, m] : per_ticker) {
    if (m.scored() > 0) out.emplace(ticker, metrics_from_confusion(m, averaging));
  }
  return out;
}

ClassificationMetrics filtered_evaluation(std::span<const Prediction> predictions, const Corpus& corpus,
                                          Averaging averaging) {
  const Corpus subset = filter_without_pair_mention(corpus);
  if (subset.empty()) throw EmptyInput("every headline mentions its pair; the filtered subset is empty");
  std::vector<Prediction> kept;
  std::set<std::string> covered;
  for (const auto& p : predictions) {
    if (!corpus.find(p.record_id)) throw UnknownRecordId(p.record_id);
    if (subset.find(p.record_id)) {
      kept.push_back(p);
      covered.insert(p.record_id);
    }
  }
  for (const auto& r : subset.records()) {
    if (!covered.count(r.id)) throw Error("no prediction for record " + r.id);
  }
  return classification_metrics(kept, subset, averaging);
}

double s_mae(std::span<const int> predictions, std::span<const int> truths) {
  if (predictions.size() != truths.size()) {
    throw LengthMismatch("s_mae: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(truths.size()) + " truths");
  }
  if (predictions.empty()) throw EmptyInput("s_mae of an empty sequence");
  std::int64_t total = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int p = predictions[i], t = truths[i];
    if (p < -1 || p > 1 || t < -1 || t > 1) throw Error("s_mae: codes must be -1, 0 or 1");
    total += std::abs(t - p);
  }
  return static_cast<double>(total) / static_cast<double>(predictions.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch("pearson: series lengths differ");
  if (x.size() < 2) throw DegenerateSeries("pearson needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mean_x = compensated_sum(x) / n;
  const double mean_y = compensated_sum(y) / n;
  CompensatedSum sxy, sxx, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    sxy.add(dx * dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
  }
  if (sxx.value() <= 0.0 || syy.value() <= 0.0) throw DegenerateSeries("pearson: a series has zero variance");
  const double r = sxy.value() / std::sqrt(sxx.value() * syy.value());
  return std::clamp(r, -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(const std::vector<NamedSeries>& series) {
  CorrelationMatrix out;
  const std::size_t k = series.size();
  for (const auto& s : series) {
    if (s.values.size() != s.index.size()) throw IndexMismatch(s.name + ": index and values differ in length");
    if (s.index != series.front().index) throw IndexMismatch(s.name + " is not on the common (ticker, date) index");
    out.names.push_back(s.name);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.values.assign(k, std::vector<double>(k, nan));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      double r = nan;
      try {
        r = pearson(series[i].values, series[j].values);
      } catch (const DegenerateSeries&) {
      }
      if (i == j && !std::isnan(r)) r = 1.0;
      out.values[i][j] = out.values[j][i] = r;
    }
  }
  return out;
}

std::string_view to_string(ZeroPolicy policy) noexcept {
  switch (policy) {
    case ZeroPolicy::Exclude: return "exclude";
    case ZeroPolicy::CountWrong: return "count_wrong";
    case ZeroPolicy::CountHalf: return "count_half";
  }
  return "exclude";
}

std::optional<ZeroPolicy> zero_policy_from_string(std::string_view text) noexcept {
  if (text == "exclude") return ZeroPolicy::Exclude;
  if (text == "count_wrong") return ZeroPolicy::CountWrong;
  if (text == "count_half") return ZeroPolicy::CountHalf;
  return std::nullopt;
}

DirectionalAccuracy directional_accuracy(std::span<const JoinedRow> rows, ZeroPolicy policy) {
  if (rows.empty()) throw EmptySeries("directional accuracy of an empty series");
  DirectionalAccuracy out;
  out.policy = policy;
  out.n_days = rows.size();
  Tally overall;
  // Rows usually arrive grouped by ticker, so a short linear list with a
  // cached last bucket beats a map here.
  std::vector<std::pair<const Ticker*, Tally>> buckets;
  std::size_t current = 0;
  for (const auto& row : rows) {
    if (sign(row.sentiment) == 0) ++out.zero_sentiment_days;
    tally_row(overall, row, policy);
    if (buckets.empty() || *buckets[current].first != row.ticker) {
      current = 0;
      while (current < buckets.size() && *buckets[current].first != row.ticker) ++current;
      if (current == buckets.size()) buckets.emplace_back(&row.ticker, Tally{});
    }
    tally_row(buckets[current].second, row, policy);
  }
  out.value = tally_value(overall);
  out.credited = overall.credited;
  out.considered = overall.considered;
  for (const auto& [ticker, t] : buckets) out.per_ticker.emplace(*ticker, tally_value(t));
  return out;
}

double token_cost(double tokens, double price_per_1k) { return tokens / 1000.0 * price_per_1k; }

double project_daily_cost(double mean_tokens, std::int64_t articles, double price_per_1k) {
  return token_cost(mean_tokens * static_cast<double>(articles), price_per_1k);
}

CostReport cost_report(std::span<const ChatExchange> exchanges, std::span<const int> headline_counts,
                       double price_per_1k, std::optional<std::int64_t> articles_per_day) {
  if (exchanges.size() != headline_counts.size()) {
    throw LengthMismatch("cost_report: one headline count per exchange is required");
  }
  CostReport out;
  out.price_per_1k_tokens = price_per_1k;
  out.articles_per_day = articles_per_day;
  out.n_prompts = exchanges.size();
  CompensatedSum time;
  for (std::size_t i = 0; i < exchanges.size(); ++i) {
    const auto& ex = exchanges[i];
    out.total_prompt_tokens += ex.prompt_tokens;
    out.total_completion_tokens += ex.completion_tokens;
    out.tokens_estimated = out.tokens_estimated || ex.tokens_estimated;
    out.n_headlines += headline_counts[i];
    time.add(ex.latency_seconds);
  }
  out.total_tokens = out.total_prompt_tokens + out.total_completion_tokens;
  out.total_time = time.value();
  out.estimated_cost = token_cost(static_cast<double>(out.total_tokens), price_per_1k);
  if (out.n_prompts > 0) {
    const double prompts = static_cast<double>(out.n_prompts);
    out.mean_time_per_prompt = out.total_time / prompts;
    out.mean_tokens_per_prompt = static_cast<double>(out.total_tokens) / prompts;
  }
  if (out.n_headlines > 0) {
    const double headlines = static_cast<double>(out.n_headlines);
    out.mean_time_per_headline = out.total_time / headlines;
    out.mean_tokens_per_headline = static_cast<double>(out.total_tokens) / headlines;
  }
  if (articles_per_day) {
    out.projected_daily_cost = project_daily_cost(out.mean_tokens_per_prompt, *articles_per_day, price_per_1k);
    out.projected_daily_cost_per_headline =
        project_daily_cost(out.mean_tokens_per_headline, *articles_per_day, price_per_1k);
  }
  return out;
}

}  // namespace fxbench
