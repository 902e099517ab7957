#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace tsinterp {

using TimePoint = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS]" or "YYYY-MM-DD HH:MM[:SS]".
/// Returns false on anything else, including impossible calendar dates.
bool parse_time(std::string_view text, TimePoint& out);

/// ISO-8601 date, with a "THH:MM:SS" suffix when `with_time` is set.
std::string format_time(TimePoint t, bool with_time);

bool is_midnight(TimePoint t);

}  // namespace tsinterp
