#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace fxbench {

/// Counts tokens in a piece of text. Implementations are immutable and safe
/// to share between threads.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::size_t count(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::size_t count(std::string_view text) const override;
  std::string name() const override { return "whitespace"; }
};

/// Byte-pair-encoding token counter driven by an ordered merge list.
///
/// Text is pre-split into words (a word keeps its leading space), each word
/// starts as one symbol per UTF-8 character and adjacent pairs are merged in
/// merge-rank order until no ranked pair remains. The merges file holds one
/// "left right" pair per line, highest priority first; lines starting with
/// '#' are ignored and "Ġ" stands for a space.
class BpeTokenizer final : public Tokenizer {
 public:
  explicit BpeTokenizer(std::vector<std::pair<std::string, std::string>> merges);
  static BpeTokenizer from_merges_file(const std::string& path);

  std::size_t count(std::string_view text) const override;
  std::string name() const override { return "bpe"; }

  /// Symbols of one pre-split word after merging.
  std::vector<std::string> encode_word(std::string_view word) const;

 private:
  std::unordered_map<std::string, std::size_t> ranks_;
};

/// "whitespace" or "bpe" (the latter requires `vocab_path`).
std::unique_ptr<Tokenizer> make_tokenizer(std::string_view name, const std::string& vocab_path = {});

}  // namespace fxbench
