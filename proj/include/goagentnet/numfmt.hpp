#pragma once

#include <string>

namespace goagentnet {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

}  // namespace goagentnet
