#include <array>
#include <cmath>
#include <charconv>

#include "goagentnet/agent_types.hpp"
#include "goagentnet/numfmt.hpp"

namespace goagentnet {

std::string_view to_string(AgentType type) noexcept {
    switch (type) {
        case AgentType::perceptual: return "perceptual";
        case AgentType::communication: return "communication";
        case AgentType::computation: return "computation";
        case AgentType::actuator: return "actuator";
        case AgentType::orchestration: return "orchestration";
    }
    return "unknown";
}

std::optional<AgentType> parse_agent_type(std::string_view text) noexcept {
    for (auto t : {AgentType::perceptual, AgentType::communication, AgentType::computation,
                   AgentType::actuator, AgentType::orchestration}) {
        if (to_string(t) == text) return t;
    }
    return std::nullopt;
}

std::string format_number(double value) {
    std::array<char, 64> buf{};
    // Whole numbers print without an exponent so CSV bandwidth columns read 10000000.
    const bool whole = std::isfinite(value) && std::abs(value) < 1e15 && value == std::trunc(value);
    auto [end, ec] = whole ? std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed)
                           : std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) return "nan";
    return std::string(buf.data(), end);
}

}  // namespace goagentnet
