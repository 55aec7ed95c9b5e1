#include <doctest.h>

#include "fxbench/error.hpp"
#include "fxbench/parsing.hpp"
#include "support/parser_fuzz.hpp"

using namespace fxbench;

namespace {

SentimentLabel class_of(std::string_view text) {
  auto r = parse_class(text);
  REQUIRE(r.ok());
  return r.value().label;
}

std::set<Ticker> tickers(std::initializer_list<const char*> symbols) {
  std::set<Ticker> out;
  for (auto s : symbols) out.insert(Ticker(s));
  return out;
}

}  // namespace

TEST_CASE("class tokens") {
  CHECK(class_of("positive") == SentimentLabel::Positive);
  CHECK(class_of("Neutral.") == SentimentLabel::Neutral);
  CHECK(class_of("  NEGATIVE!\n") == SentimentLabel::Negative);
  CHECK(class_of("\"positive\"") == SentimentLabel::Positive);
  CHECK_FALSE(parse_class("positive").value().lenient);

  auto lenient = parse_class("Positive, because the Fed paused");
  REQUIRE(lenient.ok());
  CHECK(lenient.value().label == SentimentLabel::Positive);
  CHECK(lenient.value().lenient);

  for (auto bad : {"I would buy here", "", "pos", "positively", "sentiment: positive", "...", "neutral-ish"}) {
    CAPTURE(bad);
    auto r = parse_class(bad);
    REQUIRE_FALSE(r.ok());
    CHECK(r.error().kind == ParseErrorKind::Unparseable);
  }
}

TEST_CASE("every label round-trips through its canonical token") {
  for (auto label : kAllLabels) CHECK(class_of(canonical_token(label)) == label);
}

TEST_CASE("numeric scores") {
  auto value_of = [](std::string_view text) {
    auto r = parse_numeric(text);
    REQUIRE(r.ok());
    return r.value();
  };
  CHECK(value_of("[0]") == 0.0);
  CHECK(value_of("Sentiment: [-0.4]") == -0.4);
  CHECK(value_of("0.7") == 0.7);
  CHECK(value_of("score .5") == 0.5);
  CHECK(value_of("+1") == 1.0);
  CHECK(value_of("P1 says -0.3") == -0.3);
  CHECK(value_of("0.9 overall, final [ -0.2 ]") == -0.2);
  CHECK_FALSE(std::signbit(value_of("[-0]")));

  auto out = parse_numeric("[1.5]");
  REQUIRE_FALSE(out.ok());
  CHECK(out.error().kind == ParseErrorKind::OutOfRange);
  CHECK(out.error().value == 1.5);
  CHECK(parse_numeric("-2").error().kind == ParseErrorKind::OutOfRange);

  ParseOptions clamp;
  clamp.clamp_scores = true;
  CHECK(parse_numeric("[1.5]", clamp).value() == 1.0);
  CHECK(parse_numeric("[-3]", clamp).value() == -1.0);

  for (auto bad : {"", "no number", "v2", "[x]", "-", "."}) {
    CAPTURE(bad);
    auto r = parse_numeric(bad);
    REQUIRE_FALSE(r.ok());
    CHECK(r.error().kind == ParseErrorKind::Unparseable);
  }
}

TEST_CASE("bracketed scores on a 0.01 grid round-trip") {
  for (int cents = -100; cents <= 100; ++cents) {
    double s = cents / 100.0;
    auto text = "[" + testing::format_score(s, 2) + "]";
    auto r = parse_numeric(text);
    REQUIRE(r.ok());
    CHECK(std::abs(r.value() - s) <= 1e-12);
  }
}

TEST_CASE("JSON maps") {
  auto r = parse_json_map("{'USDJPY': 'positive', 'EURUSD': 'neutral'}", tickers({"USDJPY", "EURUSD"}),
                          OutputKind::JsonClassMap);
  REQUIRE(r.result.ok());
  const auto& entries = r.result.value().entries;
  CHECK(entries.at(Ticker("USDJPY")).class_label == SentimentLabel::Positive);
  CHECK(entries.at(Ticker("EURUSD")).class_label == SentimentLabel::Neutral);
  CHECK_FALSE(entries.at(Ticker("EURUSD")).score);

  auto s = parse_json_map("Here you go: {\"GBPUSD\": -0.2}", tickers({"GBPUSD"}), OutputKind::JsonScoreMap);
  REQUIRE(s.result.ok());
  CHECK(s.result.value().entries.at(Ticker("GBPUSD")).score == -0.2);

  auto none = parse_json_map("no json here", tickers({"GBPUSD"}), OutputKind::JsonScoreMap);
  REQUIRE_FALSE(none.result.ok());
  CHECK(none.result.error().kind == ParseErrorKind::NoJsonFound);
}

TEST_CASE("JSON map diagnostics") {
  const auto expected = tickers({"EURUSD", "GBPUSD"});

  SUBCASE("missing ticker keeps the parsed part") {
    auto r = parse_json_map("{\"EURUSD\": \"negative\"}", expected, OutputKind::JsonClassMap);
    REQUIRE_FALSE(r.result.ok());
    CHECK(r.result.error().kind == ParseErrorKind::MissingTicker);
    CHECK(r.result.error().missing == tickers({"GBPUSD"}));
    CHECK(r.partial.size() == 1);
    CHECK(r.partial.at(Ticker("EURUSD")).class_label == SentimentLabel::Negative);
  }
  SUBCASE("extras are warnings, not entries") {
    auto r = parse_json_map("{'eur/usd': 'positive', 'GBP-USD': 'neutral', 'USDJPY': 'negative', 'note': 'x'}",
                            expected, OutputKind::JsonClassMap);
    REQUIRE(r.result.ok());
    CHECK(r.result.value().entries.size() == 2);
    CHECK(r.result.value().extra_tickers == std::vector<Ticker>{Ticker("USDJPY")});
    CHECK(r.result.value().warnings.size() == 2);
  }
  SUBCASE("malformed") {
    for (auto text : {"{'EURUSD': 'positive'", "{'EURUSD' 'positive'}", "{'EURUSD': {'a': 1}}",
                      "{'EURUSD': 'positive' 'GBPUSD': 'neutral'}", "{: 1}"}) {
      CAPTURE(text);
      auto r = parse_json_map(text, expected, OutputKind::JsonClassMap);
      REQUIRE_FALSE(r.result.ok());
      CHECK(r.result.error().kind == ParseErrorKind::MalformedJson);
    }
  }
  SUBCASE("a bad value fails the map") {
    auto r = parse_json_map("{\"EURUSD\": 0.3, \"GBPUSD\": 4}", expected, OutputKind::JsonScoreMap);
    REQUIRE_FALSE(r.result.ok());
    CHECK(r.result.error().kind == ParseErrorKind::OutOfRange);
    CHECK(r.partial.size() == 1);

    auto c = parse_json_map("{\"EURUSD\": \"up\", \"GBPUSD\": \"neutral\"}", expected, OutputKind::JsonClassMap);
    REQUIRE_FALSE(c.result.ok());
    CHECK(c.result.error().kind == ParseErrorKind::Unparseable);
    CHECK(c.result.error().detail.rfind("EURUSD", 0) == 0);
  }
  SUBCASE("escapes and trailing commas") {
    auto r = parse_json_map("{\"EURUSD\": \"pos\\u0069tive\", \"GBPUSD\": \"neutral\",}", expected,
                            OutputKind::JsonClassMap);
    REQUIRE(r.result.ok());
    CHECK(r.result.value().entries.at(Ticker("EURUSD")).class_label == SentimentLabel::Positive);
  }
  SUBCASE("apostrophes outside quoted positions do not open strings") {
    auto r = parse_json_map("It's mixed: {'EURUSD': 'neutral', 'GBPUSD': 'positive'} that's all", expected,
                            OutputKind::JsonClassMap);
    REQUIRE(r.result.ok());
  }
}

TEST_CASE("block finder respects quotes") {
  auto b = find_json_block("x {\"a}\": 1} y");
  REQUIRE(b);
  CHECK(b->first == 2);
  CHECK(b->second == 9);
  CHECK_FALSE(find_json_block("none"));
  CHECK(find_json_block("{ open")->second == 0);
}

TEST_CASE("single-value dispatch") {
  CHECK(parse_single("positive", OutputKind::ClassToken).value().class_label == SentimentLabel::Positive);
  CHECK(parse_single("[0.25]", OutputKind::NumericScore).value().score == 0.25);
  CHECK(parse_single("[0.25]", OutputKind::NumericScore).value().value() == 0.25);
  CHECK(parse_single("negative", OutputKind::ClassToken).value().value() == -1.0);
  CHECK_THROWS_AS(parse_single("{}", OutputKind::JsonClassMap), Error);
}

TEST_CASE("parser totality over random and mutated inputs") {
  testing::FuzzStats stats;
  testing::fuzz_totality(20000, 0xF00D, stats);
  for (const auto& f : stats.first_failures) MESSAGE(f);
  CHECK(stats.inputs == 20000);
  CHECK(stats.exceptions == 0);
  CHECK(stats.undefined == 0);
  CHECK(stats.values > 1000);
  MESSAGE("values: " << stats.values);
}

TEST_CASE("planted values are recovered from chatty replies") {
  testing::FuzzStats stats;
  testing::fuzz_planted(6000, 0xBEEF, stats);
  for (const auto& f : stats.first_failures) MESSAGE(f);
  CHECK(stats.exceptions == 0);
  CHECK(stats.recovered == stats.planted);
}
