#include "fxbench/tokenizer.hpp"

#include <cctype>
#include <limits>

#include "fxbench/csv.hpp"
#include "fxbench/error.hpp"

namespace fxbench {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

enum class CharClass { Space, Letter, Digit, Other };

CharClass classify(char c) {
  auto u = static_cast<unsigned char>(c);
  if (std::isspace(u)) return CharClass::Space;
  if (std::isalpha(u) || u >= 0x80) return CharClass::Letter;
  if (std::isdigit(u)) return CharClass::Digit;
  return CharClass::Other;
}

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;
}

std::string pair_key(std::string_view left, std::string_view right) {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key.append(left);
  key.push_back('\0');
  key.append(right);
  return key;
}

std::string decode_space_marker(std::string token) {
  static const std::string kMarker = "\xC4\xA0";  // U+0120
  std::size_t pos = 0;
  while ((pos = token.find(kMarker, pos)) != std::string::npos) {
    token.replace(pos, kMarker.size(), " ");
    pos += 1;
  }
  return token;
}

// Words: an optional single leading space plus a run of one character class.
std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t start = i;
    if (text[i] == ' ' && i + 1 < text.size() && !is_space(text[i + 1])) {
      ++i;
    }
    CharClass cls = classify(text[i]);
    while (i < text.size() && classify(text[i]) == cls) {
      if (cls == CharClass::Space && i > start && text[i] == ' ' && i + 1 < text.size() &&
          !is_space(text[i + 1])) {
        break;  // leave the last space for the next word
      }
      i += cls == CharClass::Letter ? utf8_length(static_cast<unsigned char>(text[i])) : 1;
    }
    if (i > text.size()) i = text.size();
    words.push_back(text.substr(start, i - start));
  }
  return words;
}

}  // namespace

std::size_t WhitespaceTokenizer::count(std::string_view text) const {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : text) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++n;
    }
  }
  return n;
}

BpeTokenizer::BpeTokenizer(std::vector<std::pair<std::string, std::string>> merges) {
  for (std::size_t i = 0; i < merges.size(); ++i) {
    ranks_.emplace(pair_key(merges[i].first, merges[i].second), i);
  }
}

BpeTokenizer BpeTokenizer::from_merges_file(const std::string& path) {
  std::string text = csv::read_file(path);
  std::vector<std::pair<std::string, std::string>> merges;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto space = line.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 == line.size() ||
        line.find(' ', space + 1) != std::string::npos) {
      throw Error(path + ":" + std::to_string(line_no) + ": expected 'left right'");
    }
    merges.emplace_back(decode_space_marker(line.substr(0, space)),
                        decode_space_marker(line.substr(space + 1)));
  }
  return BpeTokenizer(std::move(merges));
}

std::vector<std::string> BpeTokenizer::encode_word(std::string_view word) const {
  std::vector<std::string> symbols;
  for (std::size_t i = 0; i < word.size();) {
    std::size_t len = std::min(utf8_length(static_cast<unsigned char>(word[i])), word.size() - i);
    symbols.emplace_back(word.substr(i, len));
    i += len;
  }
  while (symbols.size() > 1) {
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = ranks_.find(pair_key(symbols[i], symbols[i + 1]));
      if (it != ranks_.end() && it->second < best_rank) {
        best_rank = it->second;
      }
    }
    if (best_rank == std::numeric_limits<std::size_t>::max()) {
      break;
    }
    std::vector<std::string> merged;
    merged.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (i + 1 < symbols.size()) {
        auto it = ranks_.find(pair_key(symbols[i], symbols[i + 1]));
        if (it != ranks_.end() && it->second == best_rank) {
          merged.push_back(symbols[i] + symbols[i + 1]);
          ++i;
          continue;
        }
      }
      merged.push_back(std::move(symbols[i]));
    }
    symbols = std::move(merged);
  }
  return symbols;
}

std::size_t BpeTokenizer::count(std::string_view text) const {
  std::size_t n = 0;
  for (auto word : split_words(text)) {
    n += encode_word(word).size();
  }
  return n;
}

std::unique_ptr<Tokenizer> make_tokenizer(std::string_view name, const std::string& vocab_path) {
  if (name == "whitespace") {
    return std::make_unique<WhitespaceTokenizer>();
  }
  if (name == "bpe") {
    if (vocab_path.empty()) {
      throw Error("bpe tokenizer requires a merges file");
    }
    return std::make_unique<BpeTokenizer>(BpeTokenizer::from_merges_file(vocab_path));
  }
  throw Error("unknown tokenizer '" + std::string(name) + "'");
}

}  // namespace fxbench
