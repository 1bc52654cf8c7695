#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace goagentnet {

/// Node identifier in the knowledge graph.
struct AgentId {
    std::uint32_t value{};

    friend auto operator<=>(const AgentId&, const AgentId&) = default;
};

inline std::string to_string(AgentId id) { return std::to_string(id.value); }

enum class AgentType { perceptual, communication, computation, actuator, orchestration };

std::string_view to_string(AgentType type) noexcept;
std::optional<AgentType> parse_agent_type(std::string_view text) noexcept;

}  // namespace goagentnet
