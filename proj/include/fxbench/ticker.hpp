#pragma once

#include <compare>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace fxbench {

/// Six-letter upper-case forex pair symbol, e.g. EURUSD.
class Ticker {
 public:
  /// Throws fxbench::Error when `symbol` is not six upper-case ASCII letters.
  explicit Ticker(std::string_view symbol);

  static std::optional<Ticker> parse(std::string_view symbol);

  const std::string& symbol() const noexcept { return symbol_; }
  std::string_view base() const noexcept { return std::string_view(symbol_).substr(0, 3); }
  std::string_view quote() const noexcept { return std::string_view(symbol_).substr(3, 3); }

  auto operator<=>(const Ticker&) const = default;

 private:
  struct Unchecked {};
  Ticker(Unchecked, std::string symbol) : symbol_(std::move(symbol)) {}

  std::string symbol_;
};

using Universe = std::set<Ticker>;

/// AUDUSD, EURCHF, EURUSD, GBPUSD, USDJPY.
Universe default_universe();

}  // namespace fxbench
