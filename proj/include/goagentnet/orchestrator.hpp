#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "goagentnet/intent.hpp"
#include "goagentnet/knowledge.hpp"
#include "goagentnet/netmodel.hpp"
#include "goagentnet/registry.hpp"
#include "goagentnet/success.hpp"
#include "goagentnet/task_template.hpp"

namespace goagentnet::orchestrator {

/// U = S - energy*(E_c + E_x)/energy_ref_j - transfer*T - history*H.
struct UtilityWeights {
    double energy = 0.1;
    double transfer = 0.0;
    double history = 0.0;
    double energy_ref_j = 1.0;
};

struct Subtask {
    SubtaskTemplate spec;
    std::vector<intent::Kpi> kpis;
    std::vector<intent::Constraint> constraints;
};

struct SubtaskDag {
    std::string task_type;
    std::vector<Subtask> subtasks;
    std::vector<std::pair<std::size_t, std::size_t>> precedence;
};

/// Splits the goal over the task template. Budget-style KPIs (minimize with a target) are
/// scaled by each subtask's kpi_share; maximize KPIs are inherited whole; constraints go to the
/// subtasks whose `constrained_by` lists their quantity.
SubtaskDag decompose(const intent::Goal& goal, const TaskTemplateSet& templates);

/// Agents of the subtask's type offering a tool of its capability kind, whose operating bands
/// admit the subtask's constraints. Ascending.
std::vector<AgentId> match_agents(const Subtask& subtask, const registry::KnowledgeGraph& graph);

struct Prediction {
    double t_e2e_s = 0.0;
    double comm_energy_j = 0.0;
    double compute_energy_j = 0.0;
    double transfer = 0.0;
    double history = 0.0;
    double success = 0.0;
    double utility = 0.0;

    double total_energy_j() const { return comm_energy_j + compute_energy_j; }
    bool operator==(const Prediction&) const = default;
};

struct ExecutionPlan {
    std::vector<AgentId> path;
    /// Capability used at each path node.
    std::vector<std::string> tools;
    std::string representation;
    Prediction predicted;
    bool feasible = false;

    bool operator==(const ExecutionPlan&) const = default;
};

/// Everything planning reads besides the goal. The channel's bandwidth is the current
/// network state; the goal's bandwidth_hz upper bound caps it.
struct PlanningContext {
    const TaskTemplateSet& templates;
    const registry::KnowledgeGraph& graph;
    const knowledge::KnowledgeBase& knowledge;
    netmodel::Channel channel;
    UtilityWeights weights;
    scenario::SuccessParams success;
};

double utility(double success, double comm_energy_j, double compute_energy_j, double transfer, double history,
               const UtilityWeights& weights);

/// Strict plan preference: higher U, then lower total energy, then lexicographic node
/// sequence, then representation name, then tool names.
bool better(const ExecutionPlan& a, const ExecutionPlan& b);

double effective_bandwidth(const intent::Goal& goal, const netmodel::Channel& channel);

/// Re-derives every predicted field of a given path/tool choice. `require_edges` false lets a
/// fixed legacy pipeline run outside the graph's interaction links. Returns feasible=false
/// when any hard constraint fails.
ExecutionPlan evaluate_path(const intent::Goal& goal, const PlanningContext& ctx, const std::vector<AgentId>& path,
                            const std::vector<std::string>& tools, bool require_edges = true);

/// Utility-optimal plan via label-correcting search over the expanded graph
/// (agent, data kind, transmitted representation, subtask progress). Throws NoFeasiblePlan.
ExecutionPlan plan(const intent::Goal& goal, const PlanningContext& ctx);

inline constexpr std::size_t kBruteforceMaxNodes = 14;

/// Reference planner: enumerates every simple source-to-sink path and tool choice.
/// Throws GraphTooLarge above kBruteforceMaxNodes, NoFeasiblePlan when nothing qualifies.
ExecutionPlan plan_bruteforce(const intent::Goal& goal, const PlanningContext& ctx);

using PlanEvent = std::variant<registry::GraphEvent, netmodel::NetworkState>;

/// Keeps `current` when it is still feasible and no candidate beats it; otherwise plans afresh.
ExecutionPlan replan_on_event(const ExecutionPlan& current, const PlanEvent& event, const intent::Goal& goal,
                              const PlanningContext& ctx);

nlohmann::json to_json(const ExecutionPlan& plan);

}  // namespace goagentnet::orchestrator
