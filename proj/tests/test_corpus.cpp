#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fxbench/corpus.hpp"
#include "fxbench/error.hpp"
#include "fxbench/tokenizer.hpp"
#include "support/builders.hpp"

using namespace fxbench;
using fxbench::testing::corpus_of;
using fxbench::testing::record;

namespace {

const char* kHeader = "id,ticker,timestamp,source,author,url,headline,article_text,label\n";

std::string write_temp(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << content;
  return path.string();
}

}  // namespace

TEST_CASE("label integer codes are a bijection") {
  CHECK(integer_code(SentimentLabel::Negative) == -1);
  CHECK(integer_code(SentimentLabel::Neutral) == 0);
  CHECK(integer_code(SentimentLabel::Positive) == 1);
  for (auto label : kAllLabels) {
    CHECK(label_from_code(integer_code(label)) == label);
    CHECK(label_from_token(canonical_token(label)) == label);
  }
  CHECK_FALSE(label_from_code(2).has_value());
  CHECK_FALSE(label_from_token("Positive").has_value());
}

TEST_CASE("load_corpus reads a well-formed CSV in timestamp order") {
  std::string text = std::string(kHeader) +
                     "a,EURUSD,2023-05-02T10:00:00Z,ForexLive,,,EURUSD rallies,,positive\n"
                     "b,USDJPY,2023-05-01T09:30:00+02:00,FXStreet,Jane,https://x.io/b,\"Yen, again\",body,negative\n"
                     "c,GBPUSD,2023-05-01T23:59:00-01:00,FXStreet,,,\"He said \"\"no\"\"\",,neutral\n";
  auto path = write_temp("fxbench_corpus_ok.csv", text);
  auto result = load_corpus(path);
  REQUIRE(result.rejected.empty());
  const auto& records = result.corpus.records();
  REQUIRE(records.size() == 3);
  CHECK(records[0].id == "b");
  CHECK(format_timestamp(records[0].timestamp) == "2023-05-01T07:30:00Z");
  CHECK(records[0].headline == "Yen, again");
  CHECK(records[0].author == "Jane");
  CHECK(records[0].article_text == "body");
  CHECK(records[1].id == "c");
  CHECK(records[2].id == "a");
  CHECK(records[1].headline == "He said \"no\"");
  CHECK(format_timestamp(records[1].timestamp) == "2023-05-02T00:59:00Z");
  CHECK_FALSE(records[2].author.has_value());
  CHECK(result.corpus.find("c") == &records[1]);
  CHECK(result.corpus.find("zzz") == nullptr);
}

TEST_CASE("ticker outside the universe") {
  std::string text = std::string(kHeader) +
                     "a,EURUSD,2023-05-02T10:00:00Z,s,,,ok,,positive\n"
                     "b,XAUUSD,2023-05-02T10:00:00Z,s,,,gold,,positive\n";
  SUBCASE("strict mode raises UnknownTicker naming the row") {
    LoadOptions options;
    options.strict = true;
    try {
      parse_corpus_csv(text, options);
      FAIL("expected UnknownTicker");
    } catch (const UnknownTicker& e) {
      CHECK(e.row() == 2);
      CHECK(e.ticker() == "XAUUSD");
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }
  SUBCASE("lenient mode skips and reports") {
    auto result = parse_corpus_csv(text);
    CHECK(result.corpus.size() == 1);
    REQUIRE(result.rejected.size() == 1);
    CHECK(result.rejected[0].row == 2);
    CHECK(result.rejected[0].field == "ticker");
  }
}

TEST_CASE("row validation diagnostics") {
  std::string text = std::string(kHeader) +
                     "a,EURUSD,2023-05-02T10:00:00,s,,,no offset,,positive\n"
                     "b,eurusd,2023-05-02T10:00:00Z,s,,,lower,,positive\n"
                     "c,EURUSD,2023-05-02T10:00:00Z,s,,,   ,,positive\n"
                     "d,EURUSD,2023-05-02T10:00:00Z,s,,,ok,,Positive\n"
                     "e,EURUSD,2023-05-02T10:00:00Z,s,,,ok,,neutral\n"
                     "e,EURUSD,2023-05-02T11:00:00Z,s,,,dup,,neutral\n"
                     "f,EURUSD,2023-05-02T10:00:00Z,s,,,short row\n";
  auto result = parse_corpus_csv(text);
  CHECK(result.corpus.size() == 1);
  REQUIRE(result.rejected.size() == 6);
  CHECK(result.rejected[0].field == "timestamp");
  CHECK(result.rejected[1].field == "ticker");
  CHECK(result.rejected[2].field == "headline");
  CHECK(result.rejected[3].field == "label");
  CHECK(result.rejected[4].field == "id");
  CHECK(result.rejected[4].row == 6);
  CHECK(result.rejected[5].row == 7);

  LoadOptions strict;
  strict.strict = true;
  CHECK_THROWS_AS(parse_corpus_csv(text, strict), SchemaError);
}

TEST_CASE("missing file and missing column") {
  CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.csv"), FileNotFound);
  try {
    parse_corpus_csv("id,ticker,timestamp,source,author,url,headline,article_text\n");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.field() == "label");
    CHECK(e.row() == 0);
  }
}

TEST_CASE("JSON-lines corpus") {
  std::string text =
      R"({"id":"x","ticker":"AUDUSD","timestamp":"2023-05-01T01:00:00Z","source":"s","author":null,"url":null,"headline":"RBA hikes","article_text":null,"label":"positive"})"
      "\n\n"
      R"({"id":"y","ticker":"AUDUSD","timestamp":"2023-05-01T00:00:00Z","source":"s","headline":"h","label":"negative"})"
      "\n"
      "not json\n"
      R"({"id":"z","ticker":"AUDUSD","timestamp":"2023-05-01T00:00:00Z","source":"s","headline":7,"label":"negative"})"
      "\n";
  auto result = parse_corpus_jsonl(text);
  REQUIRE(result.corpus.size() == 2);
  CHECK(result.corpus.records()[0].id == "y");
  REQUIRE(result.rejected.size() == 2);
  CHECK(result.rejected[0].row == 3);
  CHECK(result.rejected[1].field == "headline");
}

TEST_CASE("load -> serialize -> load round-trips") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto corpus = fxbench::testing::random_corpus(rng, 30);
    std::vector<HeadlineRecord> records = corpus.records();
    records[0].author = "A, \"quoted\" author";
    records[1].article_text = "multi\nline\r\nbody";
    records[2].url = "https://example.com/?a=1,b=2";
    Corpus rich(records, corpus.universe());

    std::ostringstream csv_out;
    write_corpus_csv(csv_out, rich);
    auto from_csv = parse_corpus_csv(csv_out.str());
    CHECK(from_csv.rejected.empty());
    CHECK(from_csv.corpus == rich);

    std::ostringstream jsonl_out;
    write_corpus_jsonl(jsonl_out, rich);
    auto from_jsonl = parse_corpus_jsonl(jsonl_out.str());
    CHECK(from_jsonl.rejected.empty());
    CHECK(from_jsonl.corpus == rich);
  }
}

TEST_CASE("filter_without_pair_mention examples") {
  auto corpus = corpus_of({
      record("1", "EURUSD", "2023-05-01T10:00:00Z", "EURUSD rallies past 1.10"),
      record("2", "USDJPY", "2023-05-01T11:00:00Z",
             "BoJ’s Ueda: Appropriate to continue monetary easing to achieve 2% inflation "
             "target with wage growth"),
      record("3", "EURUSD", "2023-05-01T12:00:00Z", "eur/usd eyes resistance"),
      record("4", "GBPUSD", "2023-05-01T13:00:00Z",
             "No reasons to dislike Cable in the very near term"),
      record("5", "GBPUSD", "2023-05-01T14:00:00Z", "EURUSD and GBP_USD diverge"),
  });
  auto filtered = filter_without_pair_mention(corpus);
  std::vector<std::string> ids;
  for (const auto& r : filtered.records()) ids.push_back(r.id);
  CHECK(ids == std::vector<std::string>{"2", "4", "5"});
}

TEST_CASE("pair mention matches every separator and case variant") {
  // Brute force: every case mask of the six letters under every separator,
  // embedded mid-sentence, must count as a mention.
  std::mt19937_64 rng(5);
  for (const auto& symbol : {"EURUSD", "USDJPY", "AUDUSD", "EURCHF", "GBPUSD"}) {
    Ticker ticker(symbol);
    for (std::string sep : {"", "/", "-", " "}) {
      for (int mask = 0; mask < 64; ++mask) {
        std::string variant;
        for (int i = 0; i < 6; ++i) {
          if (i == 3) variant += sep;
          char c = symbol[i];
          variant.push_back((mask >> i) & 1 ? static_cast<char>(std::tolower(c)) : c);
        }
        CHECK(mentions_pair(variant + " eyes resistance", ticker));
        CHECK(mentions_pair("Traders say " + variant, ticker));
        CHECK(mentions_pair("why " + variant + "?", ticker));
      }
    }
    // Near misses.
    std::string base(Ticker(symbol).base()), quote(Ticker(symbol).quote());
    CHECK_FALSE(mentions_pair(base + "_" + quote, ticker));
    CHECK_FALSE(mentions_pair(base + "  " + quote, ticker));
    CHECK_FALSE(mentions_pair(base + " and " + quote, ticker));
    CHECK_FALSE(mentions_pair(quote + base, ticker));
  }
}

TEST_CASE("filter is idempotent") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    auto corpus = fxbench::testing::random_corpus(rng, 40);
    auto once = filter_without_pair_mention(corpus);
    CHECK(filter_without_pair_mention(once) == once);
    CHECK(once.size() <= corpus.size());
  }
}

TEST_CASE("token_stats") {
  WhitespaceTokenizer ws;
  SUBCASE("two headlines of 4 and 6 tokens") {
    auto corpus = corpus_of({record("1", "EURUSD", "2023-05-01T10:00:00Z", "a b c d"),
                             record("2", "EURUSD", "2023-05-01T11:00:00Z", "a  b\tc d e\nf")});
    auto stats = token_stats(corpus, TextField::Headline, ws);
    CHECK(stats.count == 2);
    CHECK(*stats.mean == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(*stats.std_dev == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("single headline has zero spread") {
    auto corpus = corpus_of({record("1", "EURUSD", "2023-05-01T10:00:00Z", "one two three")});
    auto stats = token_stats(corpus, TextField::Headline, ws);
    CHECK(*stats.std_dev == 0.0);
  }
  SUBCASE("no article text") {
    auto corpus = corpus_of({record("1", "EURUSD", "2023-05-01T10:00:00Z", "x")});
    CHECK_THROWS_AS(token_stats(corpus, TextField::Article, ws), EmptySelection);
  }
  SUBCASE("agrees with a brute-force two-pass computation") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
      auto corpus = fxbench::testing::random_corpus(rng, 1 + trial * 7);
      std::vector<long double> counts;
      for (const auto& r : corpus.records()) counts.push_back(ws.count(r.headline));
      long double sum = 0;
      for (auto c : counts) sum += c;
      long double mean = sum / counts.size();
      long double var = 0;
      for (auto c : counts) var += (c - mean) * (c - mean);
      long double sd = std::sqrt(var / counts.size());
      auto stats = token_stats(corpus, TextField::Headline, ws);
      CHECK(std::abs(*stats.mean - static_cast<double>(mean)) <= 1e-9 * static_cast<double>(mean));
      CHECK(std::abs(*stats.std_dev - static_cast<double>(sd)) <=
            1e-9 * std::max(1.0, static_cast<double>(sd)));
    }
  }
}

TEST_CASE("BPE tokenizer applies merges by rank") {
  // Merges: l o -> lo ; lo w -> low ; Ġ l -> " l" ; e r -> er
  auto path = write_temp("fxbench_merges.txt",
                         "#version: test\nl o\nlo w\n\xC4\xA0 l\ne r\n");
  auto tok = BpeTokenizer::from_merges_file(path);
  CHECK(tok.encode_word("lower") == std::vector<std::string>{"low", "er"});
  // " lower": ' ' 'l' pair (rank 2) loses to 'l' 'o' (rank 0), then lo+w.
  CHECK(tok.encode_word(" lower") == std::vector<std::string>{" ", "low", "er"});
  CHECK(tok.encode_word(" l") == std::vector<std::string>{" l"});
  // "lower lower!" -> [low, er] [" ", low, er] [!]  = 6
  CHECK(tok.count("lower lower!") == 6);
  CHECK(tok.count("") == 0);
  CHECK(make_tokenizer("whitespace")->count(" a  b ") == 2);
  CHECK(make_tokenizer("bpe", path)->name() == "bpe");
  CHECK_THROWS_AS(make_tokenizer("bpe"), Error);
  CHECK_THROWS_AS(make_tokenizer("sentencepiece"), Error);
}

TEST_CASE("group_by_ticker_day") {
  SUBCASE("same UTC day collapses") {
    auto groups = group_by_ticker_day(corpus_of({
        record("1", "EURUSD", "2023-05-01T00:01:00Z", "a"),
        record("2", "EURUSD", "2023-05-01T12:00:00Z", "b"),
        record("3", "EURUSD", "2023-05-01T23:59:00Z", "c"),
    }));
    REQUIRE(groups.size() == 1);
    CHECK(groups.begin()->second.size() == 3);
    CHECK(format_date(groups.begin()->first.date) == "2023-05-01");
  }
  SUBCASE("date boundary splits") {
    auto groups = group_by_ticker_day(corpus_of({
        record("1", "EURUSD", "2023-05-01T23:59:00Z", "a"),
        record("2", "EURUSD", "2023-05-02T00:01:00Z", "b"),
    }));
    CHECK(groups.size() == 2);
  }
  SUBCASE("mixed tickers same day") {
    auto corpus = corpus_of({
        record("1", "EURUSD", "2023-05-01T01:00:00Z", "a"),
        record("2", "USDJPY", "2023-05-01T02:00:00Z", "b"),
        record("3", "EURUSD", "2023-05-01T03:00:00Z", "c"),
    });
    auto groups = group_by_ticker_day(corpus);
    CHECK(groups.size() == 2);
    CHECK(groups.at(TickerDay{Ticker("EURUSD"), *parse_date("2023-05-01")}).size() == 2);
    CHECK(group_by_day(corpus).size() == 1);
  }
  SUBCASE("configurable day offset") {
    auto corpus = corpus_of({record("1", "EURUSD", "2023-05-01T23:30:00Z", "a")});
    auto shifted = group_by_day(corpus, std::chrono::minutes{60});
    CHECK(format_date(shifted.begin()->first) == "2023-05-02");
  }
}

TEST_CASE("group_by_day examples") {
  CHECK(group_by_day(corpus_of({record("1", "EURUSD", "2023-05-01T00:01:00Z", "a"),
                                record("2", "EURUSD", "2023-05-01T23:59:00Z", "b")}))
            .size() == 1);
  CHECK(group_by_day(corpus_of({record("1", "EURUSD", "2023-05-01T23:59:00Z", "a"),
                                record("2", "EURUSD", "2023-05-02T00:01:00Z", "b")}))
            .size() == 2);
  auto mixed = group_by_day(corpus_of({record("1", "EURUSD", "2023-05-01T01:00:00Z", "a"),
                                       record("2", "USDJPY", "2023-05-01T02:00:00Z", "b")}));
  REQUIRE(mixed.size() == 1);
  CHECK(mixed.begin()->second.size() == 2);
}

TEST_CASE("grouping partitions the corpus") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    auto corpus = fxbench::testing::random_corpus(rng, 60, 5);
    std::multiset<std::string> seen;
    std::size_t total = 0;
    for (const auto& [key, records] : group_by_ticker_day(corpus)) {
      for (const auto& r : records) {
        CHECK(r.ticker == key.ticker);
        CHECK(calendar_date(r.timestamp) == key.date);
        seen.insert(r.id);
      }
      total += records.size();
    }
    CHECK(total == corpus.size());
    CHECK(std::set<std::string>(seen.begin(), seen.end()).size() == corpus.size());
    std::size_t day_total = 0;
    for (const auto& [day, records] : group_by_day(corpus)) day_total += records.size();
    CHECK(day_total == corpus.size());
  }
}

TEST_CASE("published dataset size (optional)") {
  const char* path = std::getenv("FXBENCH_DATASET");
  if (path == nullptr) {
    MESSAGE("FXBENCH_DATASET not set; skipping");
    return;
  }
  auto result = load_corpus(path);
  CHECK(result.corpus.size() == 2291);
}
