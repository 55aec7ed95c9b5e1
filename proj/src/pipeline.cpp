#include "fxbench/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "fxbench/dates.hpp"
#include "fxbench/error.hpp"
#include "fxbench/fixture.hpp"
#include "fxbench/live_backend.hpp"

namespace fxbench {
namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::string scope_label(const PromptScope& scope) {
  struct Visitor {
    std::string operator()(const RecordScope& s) const { return s.record_id; }
    std::string operator()(const TickerDayScope& s) const { return s.ticker.symbol() + " " + format_date(s.date); }
    std::string operator()(const AllDayScope& s) const { return format_date(s.date); }
  };
  return std::visit(Visitor{}, scope);
}

std::string failure_key(FailureKind kind) {
  switch (kind) {
    case FailureKind::Auth: return "auth";
    case FailureKind::RateLimited: return "rate_limited";
    case FailureKind::Timeout: return "timeout";
    case FailureKind::Backend: return "backend";
    case FailureKind::FixtureMiss: return "fixture_miss";
  }
  return "backend";
}

std::optional<double> safe_pearson(std::span<const double> x, std::span<const double> y) {
  try {
    return pearson(x, y);
  } catch (const DegenerateSeries&) {
    return std::nullopt;
  }
}

/// Pearson of sentiment against returns over a joined series, pooled and
/// per ticker.
void market_correlations(ModelResult& model) {
  std::vector<double> s, r;
  std::map<Ticker, std::pair<std::vector<double>, std::vector<double>>> by_ticker;
  for (const auto& row : model.joined.rows) {
    s.push_back(row.sentiment);
    r.push_back(row.ret);
    auto& [ts, tr] = by_ticker[row.ticker];
    ts.push_back(row.sentiment);
    tr.push_back(row.ret);
  }
  model.pearson_with_returns = safe_pearson(s, r);
  for (const auto& [ticker, series] : by_ticker) {
    model.pearson_per_ticker[ticker] = safe_pearson(series.first, series.second);
  }
}

void market_metrics(ModelResult& model, std::span<const DailyReturn> returns) {
  model.joined = join_sentiment_returns(model.daily, returns, JoinPolicy::Drop);
  model.joined.model_id = model.id;
  for (const auto& w : model.joined.warnings) model.warnings.push_back(w);
  if (!model.joined.rows.empty()) {
    for (auto policy : {ZeroPolicy::Exclude, ZeroPolicy::CountWrong, ZeroPolicy::CountHalf}) {
      model.directional.emplace(policy, directional_accuracy(model.joined.rows, policy));
    }
  } else {
    model.warnings.push_back("no sentiment day overlaps the market data");
  }
  market_correlations(model);
}

void classification(ModelResult& model, const std::vector<Prediction>& predictions, const Corpus& corpus,
                    Averaging averaging) {
  try {
    model.classification = classification_metrics(predictions, corpus, averaging);
    model.classification_by_ticker = classification_by_ticker(predictions, corpus, averaging);
  } catch (const EmptyInput& e) {
    model.classification_note = e.what();
    return;
  }
  try {
    model.filtered = filtered_evaluation(predictions, corpus, averaging);
  } catch (const EmptyInput& e) {
    model.filtered_note = e.what();
  }
}

SentimentObservation observation(const std::string& model, const Ticker& ticker, Date date, double value,
                                 int headline_count, std::optional<std::string> record_id = std::nullopt) {
  return SentimentObservation{model, ticker, date, std::move(record_id), value, headline_count};
}

ModelResult run_template(const PromptTemplate& tmpl, const RunConfig& config, const Corpus& corpus,
                         const Gateway& gateway, const TickerDayGroups& groups) {
  ModelResult model;
  model.id = tmpl.id;
  model.kind = tmpl.kind;
  model.granularity = tmpl.granularity;

  const auto prompts = plan_requests(corpus, tmpl, config.day_offset());
  const auto params = params_for(tmpl, config.backend.model);
  auto batch = gateway.run_batch(prompts, params, config.parallelism, BatchMode::Lenient);
  model.requests = prompts.size();

  ParseOptions options;
  options.clamp_scores = config.clamp_scores;

  std::vector<SentimentObservation> observations;
  std::vector<Prediction> predictions;
  std::vector<ChatExchange> exchanges;
  std::vector<int> headline_counts;

  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto& prompt = prompts[i];
    const auto& item = batch[i];
    ItemOutcome outcome;
    outcome.scope = scope_label(prompt.scope);
    const auto* record_scope = std::get_if<RecordScope>(&prompt.scope);

    if (!item.ok()) {
      const auto key = failure_key(item.error->kind);
      ++model.backend_failures[key];
      outcome.status = "backend:" + key;
      outcome.detail = item.error->message;
      if (record_scope) predictions.push_back({record_scope->record_id, std::nullopt});
      model.items.push_back(std::move(outcome));
      continue;
    }

    const ChatExchange& ex = *item.exchange;
    exchanges.push_back(ex);
    headline_counts.push_back(static_cast<int>(prompt.headline_count));
    outcome.response = ex.response_text;
    outcome.prompt_tokens = ex.prompt_tokens;
    outcome.completion_tokens = ex.completion_tokens;

    if (const auto* all = std::get_if<AllDayScope>(&prompt.scope)) {
      const std::set<Ticker> expected(all->tickers.begin(), all->tickers.end());
      auto parsed = parse_json_map(ex.response_text, expected, tmpl.kind, options);
      const std::map<Ticker, ParsedSentiment>* entries = &parsed.partial;
      if (parsed.result.ok()) {
        entries = &parsed.result.value().entries;
        outcome.status = "ok";
        for (const auto& w : parsed.result.value().warnings) outcome.detail += (outcome.detail.empty() ? "" : "; ") + w;
      } else {
        const auto& err = parsed.result.error();
        outcome.status = std::string(to_string(err.kind));
        outcome.detail = err.detail;
        ++model.parse_failures[outcome.status];
      }
      for (const auto& [ticker, sentiment] : *entries) {
        auto group = groups.find(TickerDay{ticker, all->date});
        const int count = group == groups.end() ? 0 : static_cast<int>(group->second.size());
        observations.push_back(observation(model.id, ticker, all->date, sentiment.value(), count));
      }
      model.items.push_back(std::move(outcome));
      continue;
    }

    auto parsed = parse_single(ex.response_text, tmpl.kind, options);
    if (!parsed.ok()) {
      outcome.status = std::string(to_string(parsed.error().kind));
      outcome.detail = parsed.error().detail;
      ++model.parse_failures[outcome.status];
      if (record_scope) predictions.push_back({record_scope->record_id, std::nullopt});
      model.items.push_back(std::move(outcome));
      continue;
    }

    const ParsedSentiment& sentiment = parsed.value();
    outcome.status = "ok";
    outcome.value = sentiment.value();
    if (tmpl.kind == OutputKind::ClassToken) {
      auto cls = parse_class(ex.response_text);
      if (cls.ok() && cls.value().lenient) {
        ++model.lenient_matches;
        outcome.detail = "matched on the first word";
      }
    }
    if (record_scope) {
      observations.push_back(observation(model.id, record_scope->ticker, record_scope->date, sentiment.value(), 1,
                                         record_scope->record_id));
      if (sentiment.class_label) predictions.push_back({record_scope->record_id, sentiment.class_label});
    } else {
      const auto& td = std::get<TickerDayScope>(prompt.scope);
      observations.push_back(
          observation(model.id, td.ticker, td.date, sentiment.value(), static_cast<int>(prompt.headline_count)));
    }
    model.items.push_back(std::move(outcome));
  }

  model.daily = aggregate_daily(observations);
  if (is_class_kind(tmpl.kind) && tmpl.granularity == Granularity::SingleHeadline) {
    classification(model, predictions, corpus, config.averaging);
  }
  model.cost = cost_report(exchanges, headline_counts, config.price_per_1k, config.articles_per_day);
  if (config.deterministic) {
    model.cost->total_time = 0.0;
    model.cost->mean_time_per_prompt = 0.0;
    model.cost->mean_time_per_headline = 0.0;
  }
  return model;
}

std::vector<ModelResult> finbert_models(const RunConfig& config, const Corpus& corpus) {
  const auto rows = load_probabilities(config.resolve(*config.finbert_probabilities).string());
  ModelResult cls, score;
  cls.id = kFinbertClassId;
  cls.kind = OutputKind::ClassToken;
  score.id = kFinbertScoreId;
  score.kind = OutputKind::NumericScore;
  for (auto* m : {&cls, &score}) {
    m->from_finbert = true;
    m->requests = rows.size();
  }

  auto score_obs = finbert_observations(corpus, rows, score.id, config.day_offset());
  std::vector<SentimentObservation> class_obs;
  std::vector<Prediction> predictions;
  std::set<std::string> covered;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto label = finbert_class(rows[i].p_positive, rows[i].p_negative, rows[i].p_neutral);
    auto obs = score_obs[i];
    obs.model_id = cls.id;
    obs.value = integer_code(label);
    class_obs.push_back(obs);
    predictions.push_back({rows[i].id, label});
    covered.insert(rows[i].id);
  }
  std::size_t missing = 0;
  for (const auto& r : corpus.records()) {
    if (!covered.count(r.id)) {
      predictions.push_back({r.id, std::nullopt});
      ++missing;
    }
  }
  if (missing > 0) {
    const std::string w = std::to_string(missing) + " corpus records have no FinBERT probabilities";
    cls.warnings.push_back(w);
    score.warnings.push_back(w);
    cls.parse_failures["missing_probabilities"] = missing;
    score.parse_failures["missing_probabilities"] = missing;
  }

  cls.daily = aggregate_daily(class_obs);
  score.daily = aggregate_daily(score_obs);
  classification(cls, predictions, corpus, config.averaging);
  return {std::move(cls), std::move(score)};
}

/// Pooled correlation matrix over the (ticker, date) keys every series has.
CorrelationMatrix common_correlation(const std::vector<const JoinedSeries*>& models, const JoinedSeries& truth,
                                     const std::vector<std::string>& names, std::optional<Ticker> only,
                                     std::size_t* rows_used) {
  std::set<TickerDay> common;
  for (const auto& row : truth.rows) {
    if (!only || row.ticker == *only) common.insert(TickerDay{row.ticker, row.date});
  }
  auto restrict = [&](const JoinedSeries& series) {
    std::set<TickerDay> keys;
    for (const auto& row : series.rows) {
      TickerDay k{row.ticker, row.date};
      if (common.count(k)) keys.insert(k);
    }
    common = std::move(keys);
  };
  for (const auto* m : models) restrict(*m);

  const std::vector<TickerDay> index(common.begin(), common.end());
  if (rows_used) *rows_used = index.size();
  auto pick = [&](const JoinedSeries& series, bool returns, const std::string& name) {
    NamedSeries out{name, index, {}};
    std::map<TickerDay, const JoinedRow*> lookup;
    for (const auto& row : series.rows) lookup[TickerDay{row.ticker, row.date}] = &row;
    for (const auto& key : index) {
      const JoinedRow* row = lookup.at(key);
      out.values.push_back(returns ? row->ret : row->sentiment);
    }
    return out;
  };

  std::vector<NamedSeries> series;
  for (std::size_t i = 0; i < models.size(); ++i) series.push_back(pick(*models[i], false, names[i]));
  series.push_back(pick(truth, false, std::string(kTruthSeries)));
  series.push_back(pick(truth, true, std::string(kReturnsSeries)));
  return correlation_matrix(series);
}

}  // namespace

bool is_finbert_id(std::string_view id) noexcept { return id == kFinbertClassId || id == kFinbertScoreId; }

bool finbert_selected(const RunConfig& config, std::string_view id) {
  if (!config.finbert_probabilities) return false;
  return config.prompts.empty() || std::find(config.prompts.begin(), config.prompts.end(), id) != config.prompts.end();
}

std::vector<PromptTemplate> selected_templates(const RunConfig& config) {
  std::vector<PromptTemplate> registry = builtin_registry();
  if (config.template_overrides) {
    registry = apply_template_overrides(std::move(registry), read_text(config.resolve(*config.template_overrides)));
  }
  if (config.prompts.empty()) return registry;
  std::vector<PromptTemplate> out;
  for (const auto& tmpl : registry) {
    if (std::find(config.prompts.begin(), config.prompts.end(), tmpl.id) != config.prompts.end()) out.push_back(tmpl);
  }
  for (const auto& id : config.prompts) {
    if (!find_template(registry, id) && !is_finbert_id(id)) {
      throw ConfigError("prompts: unknown prompt id '" + id + "'");
    }
  }
  return out;
}

LoadResult load_run_corpus(const RunConfig& config) {
  LoadOptions options;
  options.universe = config.universe_set();
  return load_corpus(config.resolve(config.corpus).string(), options);
}

std::vector<ChatRequest> planned_requests(const RunConfig& config, const Corpus& corpus) {
  std::vector<ChatRequest> out;
  for (const auto& tmpl : selected_templates(config)) {
    const auto params = params_for(tmpl, config.backend.model);
    for (auto& prompt : plan_requests(corpus, tmpl, config.day_offset())) {
      out.push_back(ChatRequest{std::move(prompt.text), params});
    }
  }
  return out;
}

std::unique_ptr<ChatBackend> make_backend(const RunConfig& config) {
  if (config.backend.kind == BackendKind::Live) return std::make_unique<LiveBackend>(config.live_config());
  return std::make_unique<ReplayBackend>(Fixture::load(config.resolve(config.backend.fixture).string()));
}

RunResult run_pipeline(const RunConfig& config, ChatBackend& backend, const Sleeper& sleeper) {
  RunResult result;
  const auto now = [&] {
    return config.deterministic ? Timestamp{}
                                : std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
  };
  result.started = now();
  const LoadResult loaded = load_run_corpus(config);
  const Corpus& corpus = loaded.corpus;
  if (corpus.empty()) throw EmptyInput("the corpus holds no valid records");

  result.corpus.records = corpus.size();
  result.corpus.rejected_rows = loaded.rejected.size();
  result.corpus.without_pair_mention = filter_without_pair_mention(corpus).size();
  std::set<Date> days;
  for (const auto& r : corpus.records()) {
    ++result.corpus.per_ticker[r.ticker];
    days.insert(calendar_date(r.timestamp, config.day_offset()));
  }
  result.corpus.days.assign(days.begin(), days.end());
  for (const auto& issue : loaded.rejected) {
    result.warnings.push_back("corpus row " + std::to_string(issue.row) + " rejected (" + issue.field +
                              "): " + issue.reason);
  }

  const auto returns = load_market(config.resolve(config.market_data).string(), config.universe_set(),
                                   config.return_mode);
  result.return_days = returns.size();

  std::vector<SentimentObservation> truth;
  for (const auto& r : corpus.records()) {
    truth.push_back(observation(std::string(kTruthSeries), r.ticker, calendar_date(r.timestamp, config.day_offset()),
                                integer_code(r.label), 1, r.id));
  }
  result.truth_daily = aggregate_daily(truth);
  result.truth_joined = join_sentiment_returns(result.truth_daily, returns, JoinPolicy::Drop);
  for (const auto& w : result.truth_joined.warnings) result.warnings.push_back(w);
  if (!result.truth_joined.dropped_days.empty()) {
    result.warnings.push_back(std::to_string(result.truth_joined.dropped_days.size()) +
                              " (ticker, day) groups have headlines but no market return");
  }

  if (config.finbert_probabilities) {
    for (auto& m : finbert_models(config, corpus)) {
      if (finbert_selected(config, m.id)) result.models.push_back(std::move(m));
    }
  }

  const Gateway gateway(backend, config.retry_policy(), sleeper);
  const TickerDayGroups groups = group_by_ticker_day(corpus, config.day_offset());
  for (const auto& tmpl : selected_templates(config)) {
    result.models.push_back(run_template(tmpl, config, corpus, gateway, groups));
  }

  for (auto& model : result.models) market_metrics(model, returns);

  std::vector<const JoinedSeries*> joined;
  std::vector<std::string> names;
  for (const auto& m : result.models) {
    joined.push_back(&m.joined);
    names.push_back(m.id);
  }
  result.correlation = common_correlation(joined, result.truth_joined, names, std::nullopt, &result.correlation_rows);
  for (const auto& ticker : config.universe_set()) {
    result.correlation_per_ticker[ticker] = common_correlation(joined, result.truth_joined, names, ticker, nullptr);
  }
  result.finished = now();
  return result;
}

}  // namespace fxbench
