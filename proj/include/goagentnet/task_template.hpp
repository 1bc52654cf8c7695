#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "goagentnet/agent_types.hpp"

namespace goagentnet {

/// One step of an HTN-lite task template.
struct SubtaskTemplate {
    std::string name;
    AgentType agent_type = AgentType::computation;
    /// Matched against Capability::kind of candidate agents.
    std::string capability_kind;
    double kpi_share = 0.0;
    /// Optional steps may be skipped by a plan (e.g. raw pass-through skips extraction).
    bool required = true;
    /// Goal constraint quantities that bind this step (e.g. bandwidth_hz for transmission).
    std::vector<std::string> constrained_by;

    bool operator==(const SubtaskTemplate&) const = default;
};

struct TaskTemplate {
    std::string task_type;
    std::vector<SubtaskTemplate> subtasks;
    /// (before, after) pairs of subtask indices; the subtask list itself must be a topological order.
    std::vector<std::pair<std::size_t, std::size_t>> precedence;
    /// KPI names this task can report.
    std::vector<std::string> kpis;

    bool operator==(const TaskTemplate&) const = default;
};

using TaskTemplateSet = std::map<std::string, TaskTemplate, std::less<>>;

/// Throws Error(SchemaViolation) when shares do not sum to 1, precedence is cyclic,
/// or the subtask order is not a topological order of the precedence.
void check_template(const TaskTemplate& tmpl);

/// Linear chain template: precedence i -> i+1.
TaskTemplate make_chain_template(std::string task_type, std::vector<SubtaskTemplate> subtasks,
                                 std::vector<std::string> kpis);

}  // namespace goagentnet
