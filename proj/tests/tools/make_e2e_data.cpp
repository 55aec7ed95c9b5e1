// Regenerates the synthetic model outputs of the end-to-end fixture:
// finbert_probs.csv and fixture.json next to the given config. Replies are
// derived from the annotated labels with hash-seeded noise, so rerunning the
// tool reproduces the checked-in files byte for byte.
//
//   fxbench_make_e2e tests/data/e2e/config.json

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "fxbench/config.hpp"
#include "fxbench/csv.hpp"
#include "fxbench/fixture.hpp"
#include "fxbench/hash.hpp"
#include "fxbench/pipeline.hpp"
#include "fxbench/prompt.hpp"
#include "fxbench/tokenizer.hpp"

using namespace fxbench;

namespace {

double unit(const std::string& key) {
  const std::string h = sha256_hex(key);
  return static_cast<double>(std::stoul(h.substr(0, 8), nullptr, 16)) / 4294967296.0;
}

// Share of single-headline replies that match the annotation.
double skill(const std::string& id) {
  static const std::map<std::string, double> kSkill = {{"P1", 0.72}, {"P2", 0.80}, {"P3", 0.70}, {"P4", 0.84},
                                                        {"P1N", 0.75}, {"P2N", 0.72}, {"P3N", 0.70}, {"P4N", 0.80}};
  auto it = kSkill.find(id);
  return it == kSkill.end() ? 0.75 : it->second;
}

int noisy_code(int truth, const std::string& key, double p_correct) {
  if (unit(key + "#hit") < p_correct) return truth;
  if (truth == 0) return unit(key + "#dir") < 0.5 ? -1 : 1;
  return unit(key + "#far") < 0.2 ? -truth : 0;
}

std::string class_reply(int code, const std::string& key) {
  const std::string token = std::string(canonical_token(*label_from_code(code)));
  const double style = unit(key + "#style");
  if (style < 0.55) return token;
  std::string cap = token;
  cap[0] = static_cast<char>(cap[0] - 'a' + 'A');
  if (style < 0.8) return cap + ".";
  if (style < 0.92) return " " + token + "\n";
  return cap + " - the headline implies this direction for the pair.";
}

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

double noisy_score(int truth, const std::string& key, double p_correct) {
  const int code = noisy_code(truth, key, p_correct);
  const double magnitude = 0.35 + 0.55 * unit(key + "#mag");
  double v = code * magnitude + (unit(key + "#jit") - 0.5) * 0.2;
  return std::round(std::clamp(v, -1.0, 1.0) * 100.0) / 100.0;
}

std::string numeric_reply(double v, const std::string& key) {
  const double style = unit(key + "#style");
  if (style < 0.6) return format_score(v);
  if (style < 0.85) return "[" + format_score(v) + "]";
  return "Sentiment score: " + format_score(v);
}

long estimate(const std::string& text) {
  WhitespaceTokenizer tokenizer;
  return static_cast<long>(std::lround(static_cast<double>(tokenizer.count(text)) * 4.0 / 3.0));
}

struct TruthIndex {
  std::map<std::string, int> by_record;
  std::map<TickerDay, std::vector<int>> by_group;
};

TruthIndex index_truths(const Corpus& corpus) {
  TruthIndex out;
  for (const auto& r : corpus.records()) {
    out.by_record[r.id] = integer_code(r.label);
    out.by_group[TickerDay{r.ticker, calendar_date(r.timestamp)}].push_back(integer_code(r.label));
  }
  return out;
}

int sign_of_sum(const std::vector<int>& codes) {
  int s = 0;
  for (int c : codes) s += c;
  return (s > 0) - (s < 0);
}

double group_score(const std::vector<int>& codes, const std::string& key) {
  double s = 0;
  for (int c : codes) s += c;
  double v = std::tanh(s * 0.8) * 0.85 + (unit(key + "#jit") - 0.5) * 0.3;
  return std::round(std::clamp(v, -1.0, 1.0) * 100.0) / 100.0;
}

std::string reply_for(const PromptTemplate& tmpl, const RenderedPrompt& prompt, const TruthIndex& truths) {
  const std::string key = tmpl.id + ":" + std::visit([](const auto& s) {
    using S = std::decay_t<decltype(s)>;
    if constexpr (std::is_same_v<S, RecordScope>) return s.record_id;
    else if constexpr (std::is_same_v<S, TickerDayScope>) return s.ticker.symbol() + format_date(s.date);
    else return format_date(s.date);
  }, prompt.scope);

  if (const auto* r = std::get_if<RecordScope>(&prompt.scope)) {
    const int truth = truths.by_record.at(r->record_id);
    // A handful of replies the parser has to reject.
    if (key == "P3:e14") return "I'm unable to assess this headline without more context.";
    if (key == "P2N:e08") return "1.5";
    if (key == "P4N:e21") return "The sentiment is bearish but I cannot put a number on it.";
    if (tmpl.kind == OutputKind::ClassToken) return class_reply(noisy_code(truth, key, skill(tmpl.id)), key);
    return numeric_reply(noisy_score(truth, key, skill(tmpl.id)), key);
  }
  if (const auto* g = std::get_if<TickerDayScope>(&prompt.scope)) {
    const auto& codes = truths.by_group.at(TickerDay{g->ticker, g->date});
    if (tmpl.kind == OutputKind::ClassToken) {
      const int code = unit(key + "#hit") < 0.8 ? sign_of_sum(codes) : 0;
      return class_reply(code, key);
    }
    return numeric_reply(group_score(codes, key), key);
  }

  const auto& all = std::get<AllDayScope>(prompt.scope);
  std::string body = "{";
  bool first = true;
  for (const auto& ticker : all.tickers) {
    // One day where the class map forgets a pair.
    if (tmpl.id == "P6" && format_date(all.date) == "2023-05-08" && ticker.symbol() == "EURCHF") continue;
    const auto& codes = truths.by_group.at(TickerDay{ticker, all.date});
    const std::string sub = key + ticker.symbol();
    std::string value = tmpl.kind == OutputKind::JsonClassMap
                            ? "\"" + std::string(canonical_token(*label_from_code(sign_of_sum(codes)))) + "\""
                            : format_score(group_score(codes, sub));
    body += std::string(first ? "" : ", ") + "\"" + ticker.symbol() + "\": " + value;
    first = false;
  }
  body += "}";
  if (tmpl.id == "P6N" && format_date(all.date) == "2023-05-09") {
    return "Here is the sentiment per pair:\n```json\n" + body + "\n```";
  }
  return body;
}

std::string finbert_csv(const Corpus& corpus) {
  std::ostringstream out;
  csv::write_row(out, {"id", "p_positive", "p_negative", "p_neutral"});
  for (const auto& r : corpus.records()) {
    const std::string key = "FinBERT:" + r.id;
    const int code = noisy_code(integer_code(r.label), key, 0.6);
    // Work in ten-thousandths so the three columns sum to exactly 1.
    const int top = 4500 + static_cast<int>(unit(key + "#top") * 4000);
    const int second = static_cast<int>((10000 - top) * (0.3 + 0.6 * unit(key + "#second")));
    const int third = 10000 - top - second;
    int pos = 0, neg = 0, neu = 0;
    if (code == 1) {
      pos = top, neu = second, neg = third;
    } else if (code == -1) {
      neg = top, neu = second, pos = third;
    } else {
      neu = top, pos = second, neg = third;
    }
    auto fmt = [](int v) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%d.%04d", v / 10000, v % 10000);
      return std::string(buf);
    };
    csv::write_row(out, {r.id, fmt(pos), fmt(neg), fmt(neu)});
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: fxbench_make_e2e <config.json>\n";
    return 2;
  }
  const RunConfig config = load_run_config(argv[1]);
  const Corpus corpus = load_run_corpus(config).corpus;
  const TruthIndex truths = index_truths(corpus);

  {
    std::ofstream out(config.resolve(*config.finbert_probabilities), std::ios::binary | std::ios::trunc);
    out << finbert_csv(corpus);
  }

  Fixture fixture;
  for (const auto& tmpl : selected_templates(config)) {
    const auto params = params_for(tmpl, config.backend.model);
    for (const auto& prompt : plan_requests(corpus, tmpl, config.day_offset())) {
      const ChatRequest request{prompt.text, params};
      FixtureEntry entry;
      entry.response_text = reply_for(tmpl, prompt, truths);
      entry.prompt_tokens = estimate(prompt.text) + 7;
      entry.completion_tokens = estimate(entry.response_text) + 1;
      // Exercise the retry path on replay: one rate limit, one timeout.
      if (tmpl.id == "P1" && std::get<RecordScope>(prompt.scope).record_id == "e05") entry.fail_first = {"rate_limited"};
      if (tmpl.id == "P5N" && prompt.headline_count >= 3) {
        if (unit(tmpl.id + prompt.text) < 0.5) entry.fail_first = {"timeout"};
      }
      fixture.put(prompt_hash(request), std::move(entry));
    }
  }
  fixture.save(config.resolve(config.backend.fixture).string());
  std::cout << "wrote " << fixture.size() << " fixture entries\n";
  return 0;
}
