#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "goagentnet/netmodel.hpp"
#include "goagentnet/registry.hpp"

namespace goagentnet::knowledge {

/// Methods the agentic protocol accepts on the wire.
inline constexpr std::string_view kMessageMethods[] = {
    "agent/register", "agent/deregister", "agent/invoke", "agent/event",
    "graph/query",    "graph/subscribe",  "ping",
};

bool is_known_method(std::string_view method) noexcept;

struct RepresentationSpec {
    std::string name;
    double size_bits = 0.0;
    double extract_latency_s = 0.0;
    double extract_energy_j = 0.0;
    double sufficiency = 0.0;
    std::string producer_capability;

    bool operator==(const RepresentationSpec&) const = default;
};

struct MappingRule {
    std::string task_type;
    std::string raw_modality;
    std::string representation;
    std::string consumes;
    std::string produced_for;

    bool operator==(const MappingRule&) const = default;
};

struct Asset {
    std::string id;
    std::string kind;
    std::string blob_ref;

    bool operator==(const Asset&) const = default;
};

/// Application knowledge (catalog, rules, assets) plus the network state history.
/// Reads may run concurrently; writes are serialized.
class KnowledgeBase {
public:
    KnowledgeBase() = default;
    KnowledgeBase(const KnowledgeBase& other);
    KnowledgeBase& operator=(const KnowledgeBase& other);

    void add_representation(const std::string& task_type, RepresentationSpec spec);
    /// Throws ReferentialIntegrity when the rule names an unknown representation.
    void add_rule(MappingRule rule);

    /// Sorted by size ascending; UnknownTask when the task has no catalog.
    std::vector<RepresentationSpec> get_representations(std::string_view task_type) const;
    std::optional<RepresentationSpec> find_representation(std::string_view task_type, std::string_view name) const;
    std::vector<MappingRule> rules(std::string_view task_type) const;
    std::vector<std::string> tasks() const;

    void record_state(const netmodel::NetworkState& state);
    netmodel::NetworkState latest_state(std::string_view channel_id) const;
    std::vector<netmodel::NetworkState> state_log() const;

    void register_asset(Asset asset);
    Asset fetch_asset(std::string_view id) const;

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::vector<RepresentationSpec>, std::less<>> catalog_;
    std::vector<MappingRule> rules_;
    std::map<std::string, Asset, std::less<>> assets_;
    std::vector<netmodel::NetworkState> log_;
};

/// Output and cost of running `tool` on data of `in_kind` / `in_bits`.
/// Producers of a catalog representation are charged the catalog's extraction cost; other
/// tools use their affine cost model. Kinds outside the catalog are 0 bits.
struct ToolEffect {
    std::string out_kind;
    double out_bits = 0.0;
    double latency_s = 0.0;
    double energy_j = 0.0;
    bool produced_catalog = false;
};

/// nullopt when the tool does not accept `in_kind` (ignored for sources, which read sensors).
std::optional<ToolEffect> apply_tool(const std::vector<RepresentationSpec>& catalog,
                                     const registry::Capability& tool, std::string_view in_kind, double in_bits,
                                     bool is_source);

const RepresentationSpec* find_in(const std::vector<RepresentationSpec>& catalog, std::string_view name);

nlohmann::json to_json(const RepresentationSpec& r);
RepresentationSpec representation_from_json(const nlohmann::json& j);
MappingRule rule_from_json(const nlohmann::json& j);

}  // namespace goagentnet::knowledge
