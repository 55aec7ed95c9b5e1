#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fxbench/csv.hpp"
#include "fxbench/error.hpp"
#include "fxbench/hash.hpp"
#include "fxbench/pipeline.hpp"

namespace fxbench {
namespace {

using nlohmann::json;

json number_or_null(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json metrics_json(const ClassificationMetrics& m) {
  json per_class = json::object();
  for (const auto& [label, c] : m.per_class) {
    per_class[std::string(canonical_token(label))] = {
        {"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}};
  }
  json confusion = json::array();
  for (const auto& row : m.confusion.counts) confusion.push_back(row);
  return {{"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"s_mae", m.s_mae},
          {"scored", m.confusion.scored()},
          {"unscored", m.confusion.unscored},
          {"averaging", to_string(m.averaging)},
          {"per_class", per_class},
          {"confusion", confusion}};
}

json da_json(const DirectionalAccuracy& da) {
  json per_ticker = json::object();
  for (const auto& [ticker, v] : da.per_ticker) per_ticker[ticker.symbol()] = number_or_null(v);
  return {{"value", number_or_null(da.value)},
          {"credited", da.credited},
          {"considered", da.considered},
          {"n_days", da.n_days},
          {"zero_sentiment_days", da.zero_sentiment_days},
          {"per_ticker", per_ticker}};
}

json cost_json(const CostReport& c) {
  return {{"n_prompts", c.n_prompts},
          {"n_headlines", c.n_headlines},
          {"total_prompt_tokens", c.total_prompt_tokens},
          {"total_completion_tokens", c.total_completion_tokens},
          {"total_tokens", c.total_tokens},
          {"tokens_estimated", c.tokens_estimated},
          {"total_time", c.total_time},
          {"mean_time_per_prompt", c.mean_time_per_prompt},
          {"mean_time_per_headline", c.mean_time_per_headline},
          {"mean_tokens_per_prompt", c.mean_tokens_per_prompt},
          {"mean_tokens_per_headline", c.mean_tokens_per_headline},
          {"price_per_1k_tokens", c.price_per_1k_tokens},
          {"estimated_cost", c.estimated_cost},
          {"articles_per_day", c.articles_per_day ? json(*c.articles_per_day) : json()},
          {"projected_daily_cost", number_or_null(c.projected_daily_cost)},
          {"projected_daily_cost_per_headline", number_or_null(c.projected_daily_cost_per_headline)}};
}

json matrix_json(const CorrelationMatrix& m) {
  json values = json::array();
  for (const auto& row : m.values) {
    json r = json::array();
    for (double v : row) r.push_back(number_or_null(v));
    values.push_back(r);
  }
  return {{"names", m.names}, {"values", values}};
}

json model_json(const ModelResult& m, ZeroPolicy policy) {
  json daily = json::array();
  for (const auto& d : m.daily) {
    daily.push_back({{"ticker", d.ticker.symbol()}, {"date", format_date(d.date)}, {"score", d.score},
                     {"n_headlines", d.n_headlines}});
  }
  json by_ticker = json::object();
  for (const auto& [ticker, metrics] : m.classification_by_ticker) by_ticker[ticker.symbol()] = metrics_json(metrics);

  json dropped = json::array();
  for (const auto& k : m.joined.dropped_days) dropped.push_back(k.ticker.symbol() + " " + format_date(k.date));
  json da = json::object();
  for (const auto& [p, value] : m.directional) da[std::string(to_string(p))] = da_json(value);
  json pearson_per_ticker = json::object();
  for (const auto& [ticker, v] : m.pearson_per_ticker) pearson_per_ticker[ticker.symbol()] = number_or_null(v);

  return {{"id", m.id},
          {"source", m.from_finbert ? "finbert" : "llm"},
          {"kind", to_string(m.kind)},
          {"granularity", to_string(m.granularity)},
          {"numeric", m.numeric()},
          {"requests", m.requests},
          {"backend_failures", m.backend_failures},
          {"parse_failures", m.parse_failures},
          {"lenient_matches", m.lenient_matches},
          {"warnings", m.warnings},
          {"classification", m.classification ? metrics_json(*m.classification) : json()},
          {"classification_note", m.classification_note ? json(*m.classification_note) : json()},
          {"classification_by_ticker", by_ticker},
          {"filtered", m.filtered ? metrics_json(*m.filtered) : json()},
          {"filtered_note", m.filtered_note ? json(*m.filtered_note) : json()},
          {"daily", daily},
          {"market",
           {{"n_days", m.joined.rows.size()},
            {"dropped_days", dropped},
            {"pearson", number_or_null(m.pearson_with_returns)},
            {"pearson_per_ticker", pearson_per_ticker},
            {"zero_policy", to_string(policy)},
            {"directional_accuracy", da}}},
          {"cost", m.cost ? cost_json(*m.cost) : json()}};
}

// ---- number formatting ------------------------------------------------------

std::string fixed(const json& v, int digits) {
  if (v.is_null()) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v.get<double>());
  return buf;
}

std::string integer(const json& v) { return v.is_null() ? "-" : std::to_string(v.get<std::int64_t>()); }

const std::vector<std::pair<std::string, std::string>> kClassColumns = {
    {"accuracy", "Accuracy"}, {"precision", "Precision"}, {"recall", "Recall"}, {"f1", "F1"}, {"s_mae", "S-MAE"}};

Table classification_table(const json& report, const std::string& name, const std::string& title,
                           const std::string& field) {
  Table t{name, title, {"Model"}, {}, {}};
  for (const auto& [key, label] : kClassColumns) t.header.push_back(label);
  t.header.push_back("Scored");
  t.header.push_back("Unscored");
  for (const auto& m : report["models"]) {
    const auto& metrics = m[field];
    if (metrics.is_null()) {
      const auto& note = m[field == "filtered" ? "filtered_note" : "classification_note"];
      if (!note.is_null()) t.notes.push_back(m["id"].get<std::string>() + ": " + note.get<std::string>());
      continue;
    }
    std::vector<std::string> row = {m["id"]};
    for (const auto& [key, label] : kClassColumns) row.push_back(fixed(metrics[key], 3));
    row.push_back(integer(metrics["scored"]));
    row.push_back(integer(metrics["unscored"]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table best_per_pair(const json& report) {
  Table t{"best_per_pair", "Best model per forex pair", {"FX Pair"}, {}, {}};
  for (const auto& [key, label] : kClassColumns) t.header.push_back(label);
  std::set<std::string> tickers;
  for (const auto& m : report["models"]) {
    for (const auto& [ticker, metrics] : m["classification_by_ticker"].items()) tickers.insert(ticker);
  }
  for (const auto& ticker : tickers) {
    std::vector<std::string> row = {ticker};
    for (const auto& [key, label] : kClassColumns) {
      const bool lower_is_better = key == "s_mae";
      std::optional<double> best;
      std::vector<std::string> winners;
      for (const auto& m : report["models"]) {
        const auto& by = m["classification_by_ticker"];
        if (!by.contains(ticker)) continue;
        const double v = by[ticker][key].get<double>();
        if (!best || (lower_is_better ? v < *best : v > *best)) {
          best = v;
          winners = {m["id"].get<std::string>()};
        } else if (v == *best) {
          winners.push_back(m["id"].get<std::string>());
        }
      }
      std::string cell;
      for (const auto& w : winners) cell += (cell.empty() ? "" : "/") + w;
      row.push_back(cell.empty() ? "-" : cell);
    }
    t.rows.push_back(std::move(row));
  }
  t.notes.push_back("ties list every model sharing the best value");
  return t;
}

Table da_table(const json& report, const std::string& name, const std::string& title, bool numeric) {
  const std::string policy = report["settings"]["zero_policy"];
  Table t{name, title, {"Model", "DA", "Days", "Zero days", "DA exclude", "DA count_wrong", "DA count_half"}, {}, {}};
  for (const auto& m : report["models"]) {
    if (m["numeric"].get<bool>() != numeric) continue;
    const auto& da = m["market"]["directional_accuracy"];
    if (da.empty()) {
      t.rows.push_back({m["id"], "-", "0", "0", "-", "-", "-"});
      continue;
    }
    t.rows.push_back({m["id"], fixed(da[policy]["value"], 3), integer(da[policy]["n_days"]),
                      integer(da[policy]["zero_sentiment_days"]), fixed(da["exclude"]["value"], 3),
                      fixed(da["count_wrong"]["value"], 3), fixed(da["count_half"]["value"], 3)});
  }
  t.notes.push_back("DA column uses the " + policy + " policy for zero-sentiment days");
  return t;
}

Table da_per_ticker(const json& report) {
  const std::string policy = report["settings"]["zero_policy"];
  Table t{"da_per_ticker", "Directional accuracy per ticker, numerical models", {"Model"}, {}, {}};
  std::vector<std::string> tickers;
  for (const auto& [ticker, count] : report["corpus"]["per_ticker"].items()) tickers.push_back(ticker);
  for (const auto& ticker : tickers) t.header.push_back(ticker);
  for (const auto& m : report["models"]) {
    if (!m["numeric"].get<bool>()) continue;
    std::vector<std::string> row = {m["id"]};
    const auto& da = m["market"]["directional_accuracy"];
    for (const auto& ticker : tickers) {
      const bool present = da.contains(policy) && da[policy]["per_ticker"].contains(ticker);
      row.push_back(present ? fixed(da[policy]["per_ticker"][ticker], 3) : "-");
    }
    t.rows.push_back(std::move(row));
  }
  t.notes.push_back("zero-sentiment days follow the " + policy + " policy");
  return t;
}

Table cost_table(const json& report) {
  Table t{"cost",
          "Average time and tokens per prompt",
          {"Prompt", "Pr. time", "Pr. tokens", "Hdln. time", "Hdln. tokens", "Cost (USD)", "Daily cost (USD)"},
          {},
          {}};
  bool estimated = false;
  for (const auto& m : report["models"]) {
    const auto& c = m["cost"];
    if (c.is_null()) continue;
    estimated = estimated || c["tokens_estimated"].get<bool>();
    t.rows.push_back({m["id"], fixed(c["mean_time_per_prompt"], 2), fixed(c["mean_tokens_per_prompt"], 1),
                      fixed(c["mean_time_per_headline"], 2), fixed(c["mean_tokens_per_headline"], 2),
                      fixed(c["estimated_cost"], 4), fixed(c["projected_daily_cost"], 2)});
  }
  const auto& s = report["settings"];
  t.notes.push_back("price " + fixed(s["price_per_1k"], 4) + " USD per 1K tokens; daily cost assumes " +
                    integer(s["articles_per_day"]) + " articles at the mean tokens per prompt");
  if (estimated) t.notes.push_back("some token counts are whitespace estimates; the backend reported no usage");
  if (s["deterministic"].get<bool>()) t.notes.push_back("deterministic run: times are reported as zero");
  return t;
}

Table correlation_table(const json& report) {
  const auto& c = report["correlation"];
  Table t{"correlation", "Correlation of predicted sentiment, true sentiment and returns", {"Series"}, {}, {}};
  for (const auto& n : c["names"]) t.header.push_back(n);
  for (std::size_t i = 0; i < c["names"].size(); ++i) {
    std::vector<std::string> row = {c["names"][i]};
    for (const auto& v : c["values"][i]) row.push_back(fixed(v, 3));
    t.rows.push_back(std::move(row));
  }
  t.notes.push_back("pooled over " + integer(c["rows"]) + " (ticker, day) rows that every series covers");
  return t;
}

Table parse_table(const json& report) {
  const std::vector<std::pair<std::string, std::string>> kinds = {{"unparseable", "Unparseable"},
                                                                  {"out_of_range", "Out of range"},
                                                                  {"no_json_found", "No JSON"},
                                                                  {"malformed_json", "Malformed JSON"},
                                                                  {"missing_ticker", "Missing ticker"}};
  Table t{"parse_failures", "Parse and backend failures", {"Model", "Requests", "Backend failures"}, {}, {}};
  for (const auto& [key, label] : kinds) t.header.push_back(label);
  t.header.push_back("Lenient matches");
  for (const auto& m : report["models"]) {
    std::int64_t backend = 0;
    for (const auto& [kind, n] : m["backend_failures"].items()) backend += n.get<std::int64_t>();
    std::vector<std::string> row = {m["id"], integer(m["requests"]), std::to_string(backend)};
    const auto& pf = m["parse_failures"];
    for (const auto& [key, label] : kinds) row.push_back(pf.contains(key) ? integer(pf[key]) : "0");
    row.push_back(integer(m["lenient_matches"]));
    t.rows.push_back(std::move(row));
    if (pf.contains("missing_probabilities")) {
      t.notes.push_back(m["id"].get<std::string>() + ": " + integer(pf["missing_probabilities"]) +
                        " records without probabilities");
    }
  }
  return t;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::string file_hash(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

std::string responses_csv(const RunResult& result) {
  std::ostringstream out;
  csv::write_row(out, {"model", "index", "scope", "status", "value", "prompt_tokens", "completion_tokens", "response",
                       "detail"});
  for (const auto& m : result.models) {
    for (std::size_t i = 0; i < m.items.size(); ++i) {
      const auto& item = m.items[i];
      char value[32] = "";
      if (item.value) std::snprintf(value, sizeof value, "%.17g", *item.value);
      csv::write_row(out, {m.id, std::to_string(i), item.scope, item.status, value, std::to_string(item.prompt_tokens),
                           std::to_string(item.completion_tokens), item.response, item.detail});
    }
  }
  return out.str();
}

json templates_json(const RunConfig& config) {
  json out = json::array();
  for (const auto& t : selected_templates(config)) {
    out.push_back({{"id", t.id},
                   {"body", t.body},
                   {"kind", to_string(t.kind)},
                   {"granularity", to_string(t.granularity)},
                   {"max_tokens", t.max_tokens},
                   {"temperature", t.temperature}});
  }
  return out;
}

}  // namespace

nlohmann::json report_json(const RunResult& result, const RunConfig& config) {
  json per_ticker = json::object();
  for (const auto& [ticker, n] : result.corpus.per_ticker) per_ticker[ticker.symbol()] = n;
  json days = json::array();
  for (const auto& d : result.corpus.days) days.push_back(format_date(d));

  json models = json::array();
  for (const auto& m : result.models) models.push_back(model_json(m, config.zero_policy));

  json truth_daily = json::array();
  for (const auto& d : result.truth_daily) {
    truth_daily.push_back({{"ticker", d.ticker.symbol()}, {"date", format_date(d.date)}, {"score", d.score},
                           {"n_headlines", d.n_headlines}});
  }

  json correlation = matrix_json(result.correlation);
  correlation["rows"] = result.correlation_rows;
  json corr_per_ticker = json::object();
  for (const auto& [ticker, m] : result.correlation_per_ticker) corr_per_ticker[ticker.symbol()] = matrix_json(m);
  correlation["per_ticker"] = corr_per_ticker;

  return {{"tool", {{"name", kToolName}, {"version", kToolVersion}}},
          {"settings",
           {{"model", config.backend.model},
            {"backend", to_string(config.backend.kind)},
            {"zero_policy", to_string(config.zero_policy)},
            {"return_mode", to_string(config.return_mode)},
            {"averaging", to_string(config.averaging)},
            {"price_per_1k", config.price_per_1k},
            {"articles_per_day", config.articles_per_day},
            {"day_offset_minutes", config.day_offset_minutes},
            {"clamp_scores", config.clamp_scores},
            {"deterministic", config.deterministic}}},
          {"corpus",
           {{"records", result.corpus.records},
            {"rejected_rows", result.corpus.rejected_rows},
            {"without_pair_mention", result.corpus.without_pair_mention},
            {"per_ticker", per_ticker},
            {"days", days}}},
          {"market", {{"return_days", result.return_days}, {"joined_truth_days", result.truth_joined.rows.size()}}},
          {"truth_daily", truth_daily},
          {"models", models},
          {"correlation", correlation},
          {"warnings", result.warnings}};
}

std::vector<Table> render_tables(const nlohmann::json& report) {
  std::vector<Table> out;
  out.push_back(classification_table(report, "classification", "Sentiment classification", "classification"));
  out.push_back(best_per_pair(report));
  auto filtered = classification_table(report, "classification_no_mention",
                                       "Sentiment classification, headlines without a pair mention", "filtered");
  filtered.notes.insert(filtered.notes.begin(),
                        integer(report["corpus"]["without_pair_mention"]) + " of " +
                            integer(report["corpus"]["records"]) + " headlines do not name their pair");
  out.push_back(std::move(filtered));
  out.push_back(da_table(report, "da_class", "Directional accuracy, non-numerical models", false));
  out.push_back(da_table(report, "da_numeric", "Directional accuracy, numerical models", true));
  out.push_back(da_per_ticker(report));
  out.push_back(cost_table(report));
  out.push_back(correlation_table(report));
  out.push_back(parse_table(report));
  return out;
}

std::string format_table_text(const Table& table) {
  std::vector<std::size_t> width(table.header.size(), 0);
  auto measure = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) width[i] = std::max(width[i], row[i].size());
  };
  measure(table.header);
  for (const auto& row : table.rows) measure(row);

  std::ostringstream out;
  out << table.title << '\n';
  auto line = [&](const std::vector<std::string>& row) {
    std::string text;
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string cell = i < row.size() ? row[i] : "";
      const std::string pad(width[i] - cell.size(), ' ');
      if (i > 0) text += "  ";
      text += i == 0 ? cell + pad : pad + cell;
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out << text << '\n';
  };
  line(table.header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') << '\n';
  for (const auto& row : table.rows) line(row);
  if (table.rows.empty()) out << "(no rows)\n";
  for (const auto& note : table.notes) out << "  note: " << note << '\n';
  return out.str();
}

std::string format_tables_text(const std::vector<Table>& tables) {
  std::string out;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (i > 0) out += '\n';
    out += format_table_text(tables[i]);
  }
  return out;
}

std::string format_table_csv(const Table& table) {
  std::ostringstream out;
  csv::write_row(out, table.header);
  for (const auto& row : table.rows) csv::write_row(out, row);
  return out.str();
}

void write_run(const std::filesystem::path& dir, const RunResult& result, const RunConfig& config) {
  std::filesystem::create_directories(dir / "tables");

  const json report = report_json(result, config);
  const auto tables = render_tables(report);
  std::vector<std::string> written;
  auto emit = [&](const std::string& relative, const std::string& text) {
    write_text(dir / relative, text);
    written.push_back(relative);
  };
  emit("report.json", report.dump(2) + "\n");
  emit("responses.csv", responses_csv(result));
  emit("tables.txt", format_tables_text(tables));
  for (const auto& t : tables) emit("tables/" + t.name + ".csv", format_table_csv(t));

  json inputs = {{"corpus", file_hash(config.resolve(config.corpus))}, {"templates", sha256_hex(templates_json(config).dump())}};
  json market = json::object();
  for (const auto& ticker : config.universe_set()) {
    market[ticker.symbol()] = file_hash(config.resolve(config.market_data) / (ticker.symbol() + ".csv"));
  }
  inputs["market_data"] = market;
  if (config.backend.kind == BackendKind::Replay) inputs["fixture"] = file_hash(config.resolve(config.backend.fixture));
  if (config.finbert_probabilities) {
    inputs["finbert_probabilities"] = file_hash(config.resolve(*config.finbert_probabilities));
  }
  json outputs = json::object();
  for (const auto& relative : written) outputs[relative] = file_hash(dir / relative);

  const json manifest = {{"tool", {{"name", kToolName}, {"version", kToolVersion}}},
                         {"config", config_snapshot(config)},
                         {"inputs", inputs},
                         {"templates", templates_json(config)},
                         {"outputs", outputs},
                         {"started_at", format_timestamp(result.started)},
                         {"finished_at", format_timestamp(result.finished)}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string report_json_text(const std::filesystem::path& run_dir) {
  if (!std::filesystem::is_directory(run_dir)) throw FileNotFound(run_dir.string());
  return read_text(run_dir / "report.json");
}

std::string report_text(const std::filesystem::path& run_dir) {
  const std::string text = report_json_text(run_dir);
  json report;
  try {
    report = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error((run_dir / "report.json").string() + " is not valid JSON: " + e.what());
  }
  return format_tables_text(render_tables(report));
}

}  // namespace fxbench
