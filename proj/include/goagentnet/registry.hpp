#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "goagentnet/agent_types.hpp"

namespace goagentnet::registry {

/// Data-type descriptor. kind "*" on an input accepts anything; on an output it passes the input through.
struct DataType {
    std::string kind;
    std::string modality;
    std::string unit;

    bool operator==(const DataType&) const = default;
};

/// latency_s = latency_base_s + latency_per_bit_s * input_bits; energy likewise.
struct CostModel {
    double latency_base_s = 0.0;
    double latency_per_bit_s = 0.0;
    double energy_base_j = 0.0;
    double energy_per_bit_j = 0.0;

    double latency(double input_bits) const { return latency_base_s + latency_per_bit_s * input_bits; }
    double energy(double input_bits) const { return energy_base_j + energy_per_bit_j * input_bits; }

    bool operator==(const CostModel&) const = default;
};

struct Capability {
    std::string name;
    /// Functional category matched by task templates (sense, extract, transmit, reason, actuate, ...).
    std::string kind;
    DataType input_schema;
    DataType output_schema;
    CostModel cost_model;

    bool operator==(const Capability&) const = default;
};

/// Numeric operating band. `lo_open` makes the lower end exclusive: (lo, hi].
struct NumericRange {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_open = false;

    bool contains(double x) const { return (lo_open ? x > lo : x >= lo) && x <= hi; }
    bool operator==(const NumericRange&) const = default;
};

using ParamSpace = std::variant<NumericRange, std::vector<std::string>>;

struct AgentProfile {
    AgentId id;
    AgentType agent_type = AgentType::computation;
    std::vector<Capability> tools;
    std::map<std::string, ParamSpace> function_space;
    std::map<std::string, double> resources;

    const Capability* tool(std::string_view name) const;
    bool operator==(const AgentProfile&) const = default;
};

/// Throws InvalidProfile when a tool lacks schemas or has negative cost coefficients.
void check_profile(const AgentProfile& profile);

enum class EdgeKind { interaction_link, capability_dependency, shared_knowledge };
std::string_view to_string(EdgeKind kind) noexcept;
std::optional<EdgeKind> parse_edge_kind(std::string_view text) noexcept;

struct Edge {
    AgentId from;
    AgentId to;
    EdgeKind kind = EdgeKind::interaction_link;
    std::map<std::string, std::string> attrs;

    bool operator==(const Edge&) const = default;
};

struct KnowledgeGraph {
    std::map<AgentId, AgentProfile> nodes;
    /// Sorted by (from, to, kind).
    std::vector<Edge> edges;
    /// Sequence number of the last event applied.
    std::uint64_t version = 0;

    const AgentProfile* node(AgentId id) const;
    /// Successors over edges of `kind`, ascending.
    std::vector<AgentId> successors(AgentId id, EdgeKind kind = EdgeKind::interaction_link) const;
    bool has_edge(AgentId from, AgentId to, EdgeKind kind) const;

    bool operator==(const KnowledgeGraph&) const = default;
};

/// Field-level change to an existing profile.
struct ProfileDelta {
    std::map<std::string, double> resources;
    std::map<std::string, ParamSpace> function_space;
    std::vector<Capability> add_tools;
    std::vector<std::string> remove_tools;

    bool operator==(const ProfileDelta&) const = default;
};

enum class EventKind { joined, left, updated, edge_added, edge_removed };
std::string_view to_string(EventKind kind) noexcept;

struct GraphEvent {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::joined;
    AgentId subject;
    /// joined: profile; left: none; updated: delta; edge_*: edge.
    std::variant<std::monostate, AgentProfile, ProfileDelta, Edge> payload;
    double timestamp = 0.0;

    bool operator==(const GraphEvent&) const = default;
};

struct QueryFilter {
    std::optional<AgentType> agent_type;
    std::optional<std::string> capability_name;
    std::optional<std::string> output_kind;
};

/// Applies one event without sequence checks; throws on structural violations.
void apply_event(KnowledgeGraph& graph, const GraphEvent& event);

/// Events must continue `base.version` contiguously, otherwise GapInEvents.
KnowledgeGraph fold_events(KnowledgeGraph base, const std::vector<GraphEvent>& events);

std::vector<AgentId> query(const KnowledgeGraph& graph, const QueryFilter& filter);

/// DOT text: nodes labeled "id:type", edges labeled by kind.
std::string to_dot(const KnowledgeGraph& graph);

/// Single-writer, multi-reader registry. Rejected operations emit no event.
class Registry {
public:
    Registry() = default;
    explicit Registry(KnowledgeGraph base);

    GraphEvent register_agent(AgentProfile profile);
    GraphEvent deregister(AgentId id);
    GraphEvent update_state(AgentId id, ProfileDelta delta);
    GraphEvent add_edge(AgentId from, AgentId to, EdgeKind kind, std::map<std::string, std::string> attrs = {});
    GraphEvent remove_edge(AgentId from, AgentId to, EdgeKind kind);

    std::vector<AgentId> query(const QueryFilter& filter) const;
    KnowledgeGraph snapshot() const;
    std::uint64_t version() const;
    /// Events with seq > after, ascending.
    std::vector<GraphEvent> events_since(std::uint64_t after) const;

    /// Simulation clock stamped onto emitted events.
    void set_time(double t);

private:
    GraphEvent commit(GraphEvent event);

    mutable std::shared_mutex mutex_;
    KnowledgeGraph graph_;
    std::vector<GraphEvent> log_;
    double now_ = 0.0;
};

nlohmann::json to_json(const DataType& t);
nlohmann::json to_json(const Capability& c);
nlohmann::json to_json(const AgentProfile& p);
nlohmann::json to_json(const ProfileDelta& d);
nlohmann::json to_json(const Edge& e);
nlohmann::json to_json(const GraphEvent& e);
DataType data_type_from_json(const nlohmann::json& j);
Capability capability_from_json(const nlohmann::json& j);
AgentProfile profile_from_json(const nlohmann::json& j);
ProfileDelta delta_from_json(const nlohmann::json& j);
Edge edge_from_json(const nlohmann::json& j);
GraphEvent event_from_json(const nlohmann::json& j);

}  // namespace goagentnet::registry
