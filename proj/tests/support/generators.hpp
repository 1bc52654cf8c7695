#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "goagentnet/orchestrator.hpp"
#include "goagentnet/protocol.hpp"
#include "goagentnet/registry.hpp"
#include "goagentnet/scenario.hpp"
#include "goagentnet/scm.hpp"

namespace testsupport {

namespace ga = goagentnet;

std::filesystem::path data_dir();
std::filesystem::path canonical_config_path();
const ga::scenario::Scenario& canonical();

/// "Achieve the highest task success rate for robotic FDR under a <mhz>MHz bandwidth constraint."
std::string fdr_intent(const std::string& mhz);

/// Self-contained planning problem; context() borrows from the members.
struct PlanningCase {
    ga::TaskTemplateSet templates;
    ga::registry::KnowledgeGraph graph;
    ga::knowledge::KnowledgeBase knowledge;
    ga::netmodel::Channel channel;
    ga::orchestrator::UtilityWeights weights;
    ga::scenario::SuccessParams success;
    ga::intent::Goal goal;

    ga::orchestrator::PlanningContext context() const {
        return {templates, graph, knowledge, channel, weights, success};
    }
};

/// Random graph of 4..max_nodes agents with a random catalog, template, channel and weights.
/// Even seeds quantize costs so that utility ties are common.
PlanningCase random_planning_case(std::uint64_t seed, std::size_t max_nodes = 12);

ga::registry::AgentProfile random_profile(std::mt19937_64& rng, ga::AgentId id);
ga::registry::ProfileDelta random_delta(std::mt19937_64& rng, const ga::registry::AgentProfile* base);

nlohmann::json random_json(std::mt19937_64& rng, int depth = 0);
ga::protocol::Message random_message(std::mt19937_64& rng);

/// Monotone SCM with an exogenous target and a goal that is non-decreasing in it.
struct ScmCase {
    ga::scm::Scm scm;
    std::string goal;
    std::string target;
    std::pair<double, double> range;
    ga::scm::Assignment baseline;
    double threshold = 0.0;
};

/// Retries internally until the model is monotone and the threshold lies strictly inside the
/// goal's range over the search interval.
ScmCase random_scm_case(std::mt19937_64& rng);

std::vector<std::uint8_t> read_hex(const std::filesystem::path& path);

}  // namespace testsupport
