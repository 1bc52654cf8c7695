#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "goagentnet/intent.hpp"
#include "goagentnet/knowledge.hpp"
#include "goagentnet/netmodel.hpp"
#include "goagentnet/orchestrator.hpp"
#include "goagentnet/registry.hpp"
#include "goagentnet/scm.hpp"
#include "goagentnet/success.hpp"
#include "goagentnet/task_template.hpp"

namespace goagentnet::scenario {

/// Interventional bound reported alongside every run.
struct BoundSpec {
    std::string label;
    std::string goal_var;
    double threshold = 0.0;
    std::string target_var;
    std::pair<double, double> range{0.0, 1.0};
    scm::Assignment baseline;
};

/// Fixed legacy pipeline: prefix, then the first link agent whose bandwidth band admits the
/// channel, then suffix. No semantic extraction.
struct BaselineSpec {
    std::vector<AgentId> prefix;
    std::vector<AgentId> links;
    std::vector<AgentId> suffix;
    std::string representation;
};

struct Scenario {
    std::string name;
    registry::KnowledgeGraph graph;
    knowledge::KnowledgeBase knowledge;
    TaskTemplateSet templates;
    netmodel::Channel channel;
    SuccessParams success;
    orchestrator::UtilityWeights weights;
    std::optional<scm::Scm> scm;
    std::vector<BoundSpec> bounds;
    BaselineSpec baseline;
};

/// Throws SchemaViolation for malformed or empty documents and ReferentialIntegrity for
/// references to undefined agents, representations, capabilities or variables.
Scenario load_scenario(const nlohmann::json& doc);
/// Reads and parses the file first; unreadable files and bad JSON are SchemaViolation.
Scenario load_scenario_file(const std::filesystem::path& path);

/// Every problem found in a config document; empty when it loads cleanly.
std::vector<std::string> validate_scenario(const nlohmann::json& doc);

struct Measured {
    double t_e2e_s = 0.0;
    double comm_energy_j = 0.0;
    double compute_energy_j = 0.0;
    double success = 0.0;
    double utility = 0.0;

    bool operator==(const Measured&) const = default;
};

struct DerivedBound {
    std::string label;
    std::string target_var;
    std::optional<double> value;
    /// Why no value could be derived.
    std::string note;
};

struct RunReport {
    std::string intent_id;
    std::string intent_text;
    std::string arch;
    double bandwidth_hz = 0.0;
    orchestrator::ExecutionPlan plan;
    Measured measured;
    std::vector<DerivedBound> derived_bounds;
    std::vector<std::string> events;
};

struct ComparisonReport {
    std::string intent_id;
    double bandwidth_hz = 0.0;
    double energy_reduction_pct = 0.0;
    double success_delta = 0.0;
};

/// Accepts pattern text, or a structured intent document when the text starts with '{'.
intent::Goal parse_goal(std::string_view intent_text, const TaskTemplateSet& templates);

/// parse -> plan -> invoke every hop over the protocol bus -> transmit over the network model
/// -> success model.
RunReport run_goagentnet(const Scenario& scenario, std::string_view intent_text, std::uint64_t seed = 0);

RunReport run_baseline(const Scenario& scenario, std::string_view intent_text, std::uint64_t seed = 0);

/// Throws BaselineZeroEnergy when the baseline spent no communication energy.
ComparisonReport compare(const RunReport& goagent, const RunReport& baseline);

nlohmann::json to_json(const RunReport& report);
nlohmann::json to_json(const ComparisonReport& report);

/// Column order: bandwidth_hz, arch, representation, t_e2e, E_c, E_x, S, U.
std::string csv_header();
std::string csv_row(const RunReport& report);

}  // namespace goagentnet::scenario
