#include "fxbench/ticker.hpp"

#include <algorithm>

#include "fxbench/error.hpp"

namespace fxbench {
namespace {

bool valid_symbol(std::string_view symbol) {
  return symbol.size() == 6 &&
         std::all_of(symbol.begin(), symbol.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

}  // namespace

Ticker::Ticker(std::string_view symbol) {
  if (!valid_symbol(symbol)) {
    throw Error("invalid ticker symbol '" + std::string(symbol) + "'");
  }
  symbol_ = std::string(symbol);
}

std::optional<Ticker> Ticker::parse(std::string_view symbol) {
  if (!valid_symbol(symbol)) {
    return std::nullopt;
  }
  return Ticker(Unchecked{}, std::string(symbol));
}

Universe default_universe() {
  return {Ticker("AUDUSD"), Ticker("EURCHF"), Ticker("EURUSD"), Ticker("GBPUSD"), Ticker("USDJPY")};
}

}  // namespace fxbench
