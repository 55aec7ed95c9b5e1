#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace fxbench {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
using Date = std::chrono::sys_days;

/// Parses `YYYY-MM-DD[T ]HH:MM[:SS[.fff]]` followed by `Z` or a `±HH:MM` /
/// `±HHMM` offset. Timestamps without an offset are rejected.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// UTC rendering, `YYYY-MM-DDTHH:MM:SSZ` with `.mmm` only when non-zero.
std::string format_timestamp(Timestamp ts);

std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);

/// Calendar date of `ts` after shifting by `offset` (zero = UTC day).
Date calendar_date(Timestamp ts, std::chrono::minutes offset = std::chrono::minutes{0});

}  // namespace fxbench
