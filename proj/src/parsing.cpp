#include "fxbench/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "fxbench/error.hpp"

namespace fxbench {
namespace {

constexpr std::string_view kTrimPunctuation = ".,!:;\"'";

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string_view trim_token(std::string_view s) {
  auto strip = [](char c) { return is_space(c) || kTrimPunctuation.find(c) != std::string_view::npos; };
  while (!s.empty() && strip(s.front())) s.remove_prefix(1);
  while (!s.empty() && strip(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string preview(std::string_view text) {
  constexpr std::size_t kMax = 80;
  std::string out(text.substr(0, kMax));
  if (text.size() > kMax) out += "...";
  return out;
}

ParseError make_error(ParseErrorKind kind, std::string detail) {
  ParseError e;
  e.kind = kind;
  e.detail = std::move(detail);
  return e;
}

struct NumberSpan {
  double value;
  std::size_t end;
};

// Decimal number starting exactly at `pos`: optional sign, digits with an
// optional fraction, or a bare fraction such as ".5". No exponents.
std::optional<NumberSpan> number_at(std::string_view text, std::size_t pos) {
  std::size_t i = pos;
  bool negative = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
    negative = text[i] == '-';
    ++i;
  }
  const std::size_t int_start = i;
  while (i < text.size() && is_digit(text[i])) ++i;
  std::string_view int_part = text.substr(int_start, i - int_start);
  std::string_view frac_part;
  if (i + 1 < text.size() && text[i] == '.' && is_digit(text[i + 1])) {
    const std::size_t frac_start = ++i;
    while (i < text.size() && is_digit(text[i])) ++i;
    frac_part = text.substr(frac_start, i - frac_start);
  }
  if (int_part.empty() && frac_part.empty()) return std::nullopt;

  std::string normal = int_part.empty() ? std::string("0") : std::string(int_part);
  if (!frac_part.empty()) normal.append(".").append(frac_part);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(normal.data(), normal.data() + normal.size(), value);
  if (ec != std::errc() || ptr != normal.data() + normal.size()) return std::nullopt;
  if (negative) value = -value;
  return NumberSpan{value + 0.0, i};
}

// A number may start at `pos` only when it is not glued to a preceding word
// or number, so "P1" or "v2.5" do not yield values.
bool can_start_number(std::string_view text, std::size_t pos) {
  if (pos == 0) return true;
  char prev = text[pos - 1];
  return !is_alnum(prev) && prev != '.' && prev != '_';
}

std::optional<double> bracketed_number(std::string_view text) {
  for (std::size_t open = text.find('['); open != std::string_view::npos; open = text.find('[', open + 1)) {
    std::size_t i = open + 1;
    while (i < text.size() && is_space(text[i])) ++i;
    auto number = number_at(text, i);
    if (!number) continue;
    i = number->end;
    while (i < text.size() && is_space(text[i])) ++i;
    if (i < text.size() && text[i] == ']') return number->value;
  }
  return std::nullopt;
}

std::optional<double> first_number(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    bool candidate = is_digit(c) || ((c == '-' || c == '+' || c == '.') && i + 1 < text.size());
    if (!candidate || !can_start_number(text, i)) continue;
    if (auto number = number_at(text, i)) return number->value;
  }
  return std::nullopt;
}

// ---- pseudo-JSON object reader -------------------------------------------

struct RawValue {
  std::string text;
  bool quoted = false;
};

class ObjectReader {
 public:
  explicit ObjectReader(std::string_view block) : s_(block) {}

  // Returns the key/value pairs in document order or a MalformedJson detail.
  std::variant<std::vector<std::pair<std::string, RawValue>>, std::string> read() {
    std::vector<std::pair<std::string, RawValue>> out;
    skip_ws();
    if (!eat('{')) return std::string("expected '{'");
    skip_ws();
    if (eat('}')) return out;
    while (true) {
      skip_ws();
      if (peek() == '}') {  // trailing comma
        ++i_;
        break;
      }
      std::string key;
      if (auto err = read_key(key)) return *err;
      skip_ws();
      if (!eat(':')) return "expected ':' after key '" + key + "'";
      skip_ws();
      RawValue value;
      if (auto err = read_value(value)) return *err;
      out.emplace_back(std::move(key), std::move(value));
      skip_ws();
      if (eat(',')) continue;
      if (eat('}')) break;
      return "expected ',' or '}' at offset " + std::to_string(i_);
    }
    skip_ws();
    if (i_ != s_.size()) return std::string("trailing characters after object");
    return out;
  }

 private:
  char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }
  bool eat(char c) {
    if (peek() != c || i_ >= s_.size()) return false;
    ++i_;
    return true;
  }
  void skip_ws() {
    while (i_ < s_.size() && is_space(s_[i_])) ++i_;
  }

  std::optional<std::string> read_key(std::string& key) {
    if (peek() == '"' || peek() == '\'') return read_quoted(key);
    std::size_t start = i_;
    while (i_ < s_.size() && s_[i_] != ':' && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != '{') ++i_;
    std::string_view bare = s_.substr(start, i_ - start);
    while (!bare.empty() && is_space(bare.back())) bare.remove_suffix(1);
    if (bare.empty()) return "empty key at offset " + std::to_string(start);
    key.assign(bare);
    return std::nullopt;
  }

  std::optional<std::string> read_value(RawValue& value) {
    char c = peek();
    if (c == '"' || c == '\'') {
      value.quoted = true;
      return read_quoted(value.text);
    }
    if (c == '{' || c == '[') return std::string("nested values are not supported");
    std::size_t start = i_;
    while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != '}') ++i_;
    std::string_view bare = s_.substr(start, i_ - start);
    while (!bare.empty() && is_space(bare.back())) bare.remove_suffix(1);
    if (bare.empty()) return "empty value at offset " + std::to_string(start);
    value.text.assign(bare);
    return std::nullopt;
  }

  std::optional<std::string> read_quoted(std::string& out) {
    const char quote = s_[i_++];
    while (i_ < s_.size()) {
      char c = s_[i_++];
      if (c == quote) return std::nullopt;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (i_ >= s_.size()) break;
      char esc = s_[i_++];
      switch (esc) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case 'u': {
          if (i_ + 4 > s_.size()) return std::string("truncated \\u escape");
          unsigned code = 0;
          auto [ptr, ec] = std::from_chars(s_.data() + i_, s_.data() + i_ + 4, code, 16);
          if (ec != std::errc() || ptr != s_.data() + i_ + 4) return std::string("bad \\u escape");
          i_ += 4;
          append_utf8(out, code);
          break;
        }
        default: out.push_back(esc);
      }
    }
    return std::string("unterminated string");
  }

  static void append_utf8(std::string& out, unsigned code) {
    if (code < 0x80) {
      out.push_back(static_cast<char>(code));
    } else if (code < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (code >> 6)));
      out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xE0 | (code >> 12)));
      out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

std::optional<Ticker> ticker_from_key(std::string_view key) {
  std::string symbol;
  for (char c : key) {
    if (c == '/' || c == '-' || c == '_' || is_space(c)) continue;
    symbol.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return Ticker::parse(symbol);
}

ParseResult<ParsedSentiment> parse_map_value(const RawValue& raw, OutputKind kind, const ParseOptions& options) {
  if (is_class_kind(kind)) {
    auto parsed = parse_class(raw.text);
    if (!parsed.ok()) return parsed.error();
    return ParsedSentiment{parsed.value().label, std::nullopt};
  }
  auto parsed = parse_numeric(raw.text, options);
  if (!parsed.ok()) return parsed.error();
  return ParsedSentiment{std::nullopt, parsed.value()};
}

std::string join_tickers(const std::set<Ticker>& tickers) {
  std::string out;
  for (const auto& t : tickers) {
    if (!out.empty()) out += ", ";
    out += t.symbol();
  }
  return out;
}

}  // namespace

std::string_view to_string(ParseErrorKind kind) noexcept {
  switch (kind) {
    case ParseErrorKind::Unparseable: return "unparseable";
    case ParseErrorKind::OutOfRange: return "out_of_range";
    case ParseErrorKind::NoJsonFound: return "no_json_found";
    case ParseErrorKind::MalformedJson: return "malformed_json";
    case ParseErrorKind::MissingTicker: return "missing_ticker";
  }
  return "unparseable";
}

double ParsedSentiment::value() const {
  if (class_label) return integer_code(*class_label);
  if (score) return *score;
  throw Error("empty ParsedSentiment");
}

ParseResult<ClassParse> parse_class(std::string_view text) {
  const std::string whole = lower(trim_token(text));
  if (auto label = label_from_token(whole)) return ClassParse{*label, false};

  std::string_view rest = text;
  while (!rest.empty() && (is_space(rest.front()) || kTrimPunctuation.find(rest.front()) != std::string_view::npos)) {
    rest.remove_prefix(1);
  }
  std::size_t end = 0;
  while (end < rest.size() && !is_space(rest[end])) ++end;
  const std::string first = lower(trim_token(rest.substr(0, end)));
  if (end < rest.size()) {
    if (auto label = label_from_token(first)) return ClassParse{*label, true};
  }
  return make_error(ParseErrorKind::Unparseable, "no sentiment token in '" + preview(text) + "'");
}

ParseResult<double> parse_numeric(std::string_view text, const ParseOptions& options) {
  std::optional<double> value = bracketed_number(text);
  if (!value) value = first_number(text);
  if (!value) return make_error(ParseErrorKind::Unparseable, "no number in '" + preview(text) + "'");
  if (*value < -1.0 || *value > 1.0) {
    if (options.clamp_scores) return std::clamp(*value, -1.0, 1.0);
    ParseError e = make_error(ParseErrorKind::OutOfRange, "score " + std::to_string(*value) + " outside [-1, 1]");
    e.value = *value;
    return e;
  }
  return *value;
}

std::optional<std::pair<std::size_t, std::size_t>> find_json_block(std::string_view text) {
  const std::size_t open = text.find('{');
  if (open == std::string_view::npos) return std::nullopt;
  int depth = 0;
  char quote = '\0';
  char last_significant = '\0';
  for (std::size_t i = open; i < text.size(); ++i) {
    char c = text[i];
    if (quote != '\0') {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = '\0';
        last_significant = c;
      }
      continue;
    }
    if (c == '"' || (c == '\'' && std::string_view("{[,:").find(last_significant) != std::string_view::npos)) {
      quote = c;
      continue;
    }
    if (c == '{') ++depth;
    if (c == '}' && --depth == 0) return std::pair{open, i - open + 1};
    if (!is_space(c)) last_significant = c;
  }
  return std::pair{open, std::size_t{0}};
}

JsonMapOutcome parse_json_map(std::string_view text, const std::set<Ticker>& expected, OutputKind kind,
                              const ParseOptions& options) {
  if (kind != OutputKind::JsonClassMap && kind != OutputKind::JsonScoreMap) {
    throw Error("parse_json_map needs a JSON output kind");
  }
  auto block = find_json_block(text);
  if (!block) {
    return {make_error(ParseErrorKind::NoJsonFound, "no '{' in '" + preview(text) + "'"), {}};
  }
  if (block->second == 0) {
    return {make_error(ParseErrorKind::MalformedJson, "unbalanced braces"), {}};
  }
  auto read = ObjectReader(text.substr(block->first, block->second)).read();
  if (read.index() == 1) {
    return {make_error(ParseErrorKind::MalformedJson, std::get<1>(read)), {}};
  }

  JsonMapParse parsed;
  std::optional<ParseError> value_error;
  std::set<Ticker> seen;
  for (const auto& [key, raw] : std::get<0>(read)) {
    auto ticker = ticker_from_key(key);
    if (!ticker) {
      parsed.warnings.push_back("ignored non-ticker key '" + key + "'");
      continue;
    }
    if (!seen.insert(*ticker).second) {
      parsed.warnings.push_back("duplicate key for " + ticker->symbol() + ", first value kept");
      continue;
    }
    auto value = parse_map_value(raw, kind, options);
    if (!expected.count(*ticker)) {
      parsed.extra_tickers.push_back(*ticker);
      parsed.warnings.push_back("unexpected ticker " + ticker->symbol());
      continue;
    }
    if (!value.ok()) {
      if (!value_error) {
        value_error = value.error();
        value_error->detail = ticker->symbol() + ": " + value_error->detail;
      }
      continue;
    }
    parsed.entries.emplace(*ticker, value.value());
  }

  std::set<Ticker> missing;
  for (const auto& t : expected) {
    if (!seen.count(t)) missing.insert(t);
  }
  if (value_error) {
    value_error->missing = missing;
    return {*value_error, parsed.entries};
  }
  if (!missing.empty()) {
    ParseError e = make_error(ParseErrorKind::MissingTicker, "missing " + join_tickers(missing));
    e.missing = std::move(missing);
    return {e, parsed.entries};
  }
  auto entries = parsed.entries;
  return {std::move(parsed), std::move(entries)};
}

ParseResult<ParsedSentiment> parse_single(std::string_view text, OutputKind kind, const ParseOptions& options) {
  switch (kind) {
    case OutputKind::ClassToken: {
      auto parsed = parse_class(text);
      if (!parsed.ok()) return parsed.error();
      return ParsedSentiment{parsed.value().label, std::nullopt};
    }
    case OutputKind::NumericScore: {
      auto parsed = parse_numeric(text, options);
      if (!parsed.ok()) return parsed.error();
      return ParsedSentiment{std::nullopt, parsed.value()};
    }
    default:
      throw Error("parse_single does not handle JSON map kinds");
  }
}

}  // namespace fxbench
