#include "goagentnet/orchestrator.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <queue>
#include <tuple>

#include <boost/dynamic_bitset.hpp>

#include "goagentnet/error.hpp"

namespace goagentnet::orchestrator {

namespace {

using registry::AgentProfile;
using registry::Capability;
using registry::KnowledgeGraph;

constexpr std::string_view kTransmitKind = "transmit";
constexpr std::string_view kBandwidthParam = "bandwidth_hz";

/// Data carried along a partial path plus accumulated costs.
struct Walk {
    bool started = false;
    std::string kind;
    double size_bits = 0.0;
    std::string transmitted;
    std::string last_catalog;
    std::uint32_t done = 0;
    std::uint32_t settled = 0;
    double t = 0.0;
    double e_c = 0.0;
    double e_x = 0.0;
    double transfer = 0.0;
    double history = 0.0;
};

double resource_or_zero(const AgentProfile& p, const std::string& key) {
    auto it = p.resources.find(key);
    return it == p.resources.end() ? 0.0 : it->second;
}

/// Feasibility and cost of extending a walk by one (agent, tool) hop. Shared by every planner
/// so that all of them score candidates identically.
class StepModel {
public:
    StepModel(const intent::Goal& goal, const PlanningContext& ctx)
        : ctx_(ctx), channel_(ctx.channel), catalog_(ctx.knowledge.get_representations(goal.task_type)) {
        auto it = ctx.templates.find(goal.task_type);
        if (it == ctx.templates.end()) throw Error(Errc::UnknownTask, goal.task_type);
        tmpl_ = &it->second;
        if (tmpl_->subtasks.size() > 32) throw Error(Errc::SchemaViolation, "template has more than 32 subtasks");
        channel_.bandwidth_hz = effective_bandwidth(goal, ctx.channel);

        const auto n = tmpl_->subtasks.size();
        ancestors_.assign(n, 0);
        descendants_.assign(n, 0);
        for (auto [before, after] : tmpl_->precedence) ancestors_[after] |= 1u << before;
        // Listing order is topological, so one forward pass closes ancestors.
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (ancestors_[i] & (1u << j)) ancestors_[i] |= ancestors_[j];
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (ancestors_[i] & (1u << j)) descendants_[j] |= 1u << i;
            }
            if (tmpl_->subtasks[i].required) required_ |= 1u << i;
        }
    }

    const knowledge::RepresentationSpec* spec(std::string_view kind) const { return knowledge::find_in(catalog_, kind); }

    std::optional<Walk> step(const Walk& w, const AgentProfile& node, const Capability& tool) const {
        if (!w.started && node.agent_type != AgentType::perceptual) return std::nullopt;
        if (auto it = node.function_space.find(std::string(kBandwidthParam)); it != node.function_space.end()) {
            const auto* band = std::get_if<registry::NumericRange>(&it->second);
            if (band && !band->contains(channel_.bandwidth_hz)) return std::nullopt;
        }
        auto fx = knowledge::apply_tool(catalog_, tool, w.kind, w.size_bits, !w.started);
        if (!fx) return std::nullopt;

        Walk next = w;
        next.started = true;
        next.kind = fx->out_kind;
        next.size_bits = fx->out_bits;

        if (auto idx = subtask_index(tool.kind)) {
            const std::uint32_t bit = 1u << *idx;
            if (w.settled & descendants_[*idx]) return std::nullopt;
            const std::uint32_t skipped = ancestors_[*idx] & ~w.settled;
            if (skipped & required_) return std::nullopt;
            next.settled |= skipped | bit;
            next.done |= bit;
        }

        next.t += fx->latency_s;
        next.e_x += fx->energy_j;

        if (tool.kind == kTransmitKind) {
            if (!fx->produced_catalog) return std::nullopt;  // only catalog representations go over the air
            auto tx = netmodel::single_attempt(channel_, next.size_bits);
            next.t += tx.latency_s;
            next.e_c += tx.energy_j;
            if (next.transmitted.empty()) next.transmitted = next.kind;
        }
        if (fx->produced_catalog) next.last_catalog = next.kind;
        next.transfer += resource_or_zero(node, "transfer_overhead");
        next.history += resource_or_zero(node, "history_penalty");
        return next;
    }

    /// Scores a walk that just entered a sink; nullopt when required subtasks are missing.
    std::optional<std::pair<std::string, Prediction>> finish(const Walk& w) const {
        if ((w.done & required_) != required_) return std::nullopt;
        const std::string& rep = w.transmitted.empty() ? w.last_catalog : w.transmitted;
        const auto* s = spec(rep);
        if (!s) return std::nullopt;
        Prediction p;
        p.t_e2e_s = w.t;
        p.comm_energy_j = w.e_c;
        p.compute_energy_j = w.e_x;
        p.transfer = w.transfer;
        p.history = w.history;
        p.success = scenario::success_probability(s->sufficiency, w.t, ctx_.success.deadline_s,
                                                  ctx_.success.decay_per_s);
        p.utility = utility(p.success, p.comm_energy_j, p.compute_energy_j, p.transfer, p.history, ctx_.weights);
        return std::pair{rep, p};
    }

    static bool is_sink(const AgentProfile& node) { return node.agent_type == AgentType::actuator; }

    /// Tie-break key of the expanded-graph state a walk ends in.
    static auto state_key(AgentId node, const Walk& w) {
        return std::tuple{node, w.kind, w.transmitted, w.last_catalog, w.done, w.settled};
    }

private:
    std::optional<std::size_t> subtask_index(std::string_view kind) const {
        for (std::size_t i = 0; i < tmpl_->subtasks.size(); ++i) {
            if (tmpl_->subtasks[i].capability_kind == kind) return i;
        }
        return std::nullopt;
    }

    const PlanningContext& ctx_;
    netmodel::Channel channel_;
    std::vector<knowledge::RepresentationSpec> catalog_;
    const TaskTemplate* tmpl_ = nullptr;
    std::vector<std::uint32_t> ancestors_;
    std::vector<std::uint32_t> descendants_;
    std::uint32_t required_ = 0;
};

ExecutionPlan make_plan(std::vector<AgentId> path, std::vector<std::string> tools,
                        std::pair<std::string, Prediction> scored) {
    return ExecutionPlan{std::move(path), std::move(tools), std::move(scored.first), scored.second, true};
}

void keep_best(std::optional<ExecutionPlan>& best, ExecutionPlan candidate) {
    if (!best || better(candidate, *best)) best = std::move(candidate);
}

struct Label {
    Walk walk;
    std::vector<AgentId> path;
    std::vector<std::string> tools;
    boost::dynamic_bitset<> visited;
    bool alive = true;
};

/// a can replace b for every continuation: no worse on any additive cost, a subset of the
/// visited agents, and no later in the lexicographic tie-break.
bool dominates(const Label& a, const Label& b) {
    const auto& x = a.walk;
    const auto& y = b.walk;
    if (!(x.t <= y.t && x.e_c <= y.e_c && x.e_x <= y.e_x && x.transfer <= y.transfer && x.history <= y.history)) {
        return false;
    }
    if (!a.visited.is_subset_of(b.visited)) return false;
    return std::tie(a.path, a.tools) <= std::tie(b.path, b.tools);
}

}  // namespace

SubtaskDag decompose(const intent::Goal& goal, const TaskTemplateSet& templates) {
    auto it = templates.find(goal.task_type);
    if (it == templates.end()) throw Error(Errc::UnknownTask, goal.task_type);
    const auto& tmpl = it->second;
    SubtaskDag dag{tmpl.task_type, {}, tmpl.precedence};
    for (const auto& st : tmpl.subtasks) {
        Subtask sub{st, {}, {}};
        for (auto kpi : goal.kpis) {
            if (kpi.direction == intent::Direction::minimize && kpi.target) kpi.target->value *= st.kpi_share;
            sub.kpis.push_back(std::move(kpi));
        }
        for (const auto& c : goal.constraints) {
            if (std::find(st.constrained_by.begin(), st.constrained_by.end(), c.quantity) != st.constrained_by.end()) {
                sub.constraints.push_back(c);
            }
        }
        dag.subtasks.push_back(std::move(sub));
    }
    return dag;
}

std::vector<AgentId> match_agents(const Subtask& subtask, const KnowledgeGraph& graph) {
    std::vector<AgentId> out;
    for (const auto& [id, profile] : graph.nodes) {
        if (profile.agent_type != subtask.spec.agent_type) continue;
        if (std::none_of(profile.tools.begin(), profile.tools.end(),
                         [&](const Capability& c) { return c.kind == subtask.spec.capability_kind; })) {
            continue;
        }
        bool admitted = true;
        for (const auto& c : subtask.constraints) {
            auto fs = profile.function_space.find(c.quantity);
            if (fs == profile.function_space.end()) continue;
            const auto* band = std::get_if<registry::NumericRange>(&fs->second);
            if (band && c.relation != intent::Relation::ge && !band->contains(c.value.value)) admitted = false;
        }
        if (admitted) out.push_back(id);
    }
    return out;
}

double utility(double success, double comm_energy_j, double compute_energy_j, double transfer, double history,
               const UtilityWeights& weights) {
    return success - weights.energy * (comm_energy_j + compute_energy_j) / weights.energy_ref_j -
           weights.transfer * transfer - weights.history * history;
}

bool better(const ExecutionPlan& a, const ExecutionPlan& b) {
    if (a.predicted.utility != b.predicted.utility) return a.predicted.utility > b.predicted.utility;
    const double ea = a.predicted.total_energy_j();
    const double eb = b.predicted.total_energy_j();
    if (ea != eb) return ea < eb;
    return std::tie(a.path, a.representation, a.tools) < std::tie(b.path, b.representation, b.tools);
}

double effective_bandwidth(const intent::Goal& goal, const netmodel::Channel& channel) {
    double b = channel.bandwidth_hz;
    if (auto cap = goal.upper_bound(kBandwidthParam); cap && *cap > 0.0) b = std::min(b, *cap);
    return b;
}

ExecutionPlan evaluate_path(const intent::Goal& goal, const PlanningContext& ctx, const std::vector<AgentId>& path,
                            const std::vector<std::string>& tools, bool require_edges) {
    ExecutionPlan out{path, tools, {}, {}, false};
    if (path.empty() || path.size() != tools.size()) return out;
    StepModel model(goal, ctx);
    Walk w;
    for (std::size_t i = 0; i < path.size(); ++i) {
        const auto* node = ctx.graph.node(path[i]);
        if (!node) return out;
        if (std::count(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(i), path[i]) > 0) return out;
        if (i > 0 && require_edges && !ctx.graph.has_edge(path[i - 1], path[i], registry::EdgeKind::interaction_link)) {
            return out;
        }
        const bool last = i + 1 == path.size();
        if (StepModel::is_sink(*node) != last) return out;
        const auto* tool = node->tool(tools[i]);
        if (!tool) return out;
        auto next = model.step(w, *node, *tool);
        if (!next) return out;
        w = std::move(*next);
    }
    auto scored = model.finish(w);
    if (!scored) return out;
    return make_plan(path, tools, std::move(*scored));
}

ExecutionPlan plan(const intent::Goal& goal, const PlanningContext& ctx) {
    StepModel model(goal, ctx);
    const auto& graph = ctx.graph;

    std::map<AgentId, std::size_t> index;
    for (const auto& [id, _] : graph.nodes) index.emplace(id, index.size());

    std::vector<Label> labels;
    using StateKey = decltype(StepModel::state_key(AgentId{}, Walk{}));
    std::map<StateKey, std::vector<std::size_t>> buckets;

    auto order = [&](std::size_t a, std::size_t b) {
        const auto& x = labels[a];
        const auto& y = labels[b];
        // min-heap on (t, energy, path)
        return std::tie(x.walk.t, x.walk.e_c, x.walk.e_x, x.path, x.tools) >
               std::tie(y.walk.t, y.walk.e_c, y.walk.e_x, y.path, y.tools);
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(order)> open(order);
    std::optional<ExecutionPlan> best;

    auto offer = [&](Label label) {
        const AgentId at = label.path.back();
        const auto& node = graph.nodes.at(at);
        if (StepModel::is_sink(node)) {
            if (auto scored = model.finish(label.walk)) {
                keep_best(best, make_plan(std::move(label.path), std::move(label.tools), std::move(*scored)));
            }
            return;
        }
        auto& bucket = buckets[StepModel::state_key(at, label.walk)];
        for (auto id : bucket) {
            if (labels[id].alive && dominates(labels[id], label)) return;
        }
        for (auto id : bucket) {
            if (labels[id].alive && dominates(label, labels[id])) labels[id].alive = false;
        }
        std::erase_if(bucket, [&](std::size_t id) { return !labels[id].alive; });
        labels.push_back(std::move(label));
        bucket.push_back(labels.size() - 1);
        open.push(labels.size() - 1);
    };

    for (const auto& [id, node] : graph.nodes) {
        if (node.agent_type != AgentType::perceptual) continue;
        for (const auto& tool : node.tools) {
            auto w = model.step(Walk{}, node, tool);
            if (!w) continue;
            Label label{std::move(*w), {id}, {tool.name}, boost::dynamic_bitset<>(index.size()), true};
            label.visited.set(index.at(id));
            offer(std::move(label));
        }
    }

    while (!open.empty()) {
        const std::size_t cur = open.top();
        open.pop();
        if (!labels[cur].alive) continue;
        const AgentId at = labels[cur].path.back();
        for (AgentId next : graph.successors(at)) {
            const auto pos = index.at(next);
            if (labels[cur].visited.test(pos)) continue;
            const auto& node = graph.nodes.at(next);
            for (const auto& tool : node.tools) {
                auto w = model.step(labels[cur].walk, node, tool);
                if (!w) continue;
                Label label{std::move(*w), labels[cur].path, labels[cur].tools, labels[cur].visited, true};
                label.path.push_back(next);
                label.tools.push_back(tool.name);
                label.visited.set(pos);
                offer(std::move(label));
            }
        }
    }

    if (!best) throw Error(Errc::NoFeasiblePlan, "no path satisfies the hard constraints for " + goal.task_type);
    return *best;
}

ExecutionPlan plan_bruteforce(const intent::Goal& goal, const PlanningContext& ctx) {
    const auto& graph = ctx.graph;
    if (graph.nodes.size() > kBruteforceMaxNodes) {
        throw Error(Errc::GraphTooLarge, std::to_string(graph.nodes.size()) + " nodes");
    }
    StepModel model(goal, ctx);
    std::optional<ExecutionPlan> best;
    std::vector<AgentId> path;
    std::vector<std::string> tools;

    auto dfs = [&](auto&& self, const Walk& w) -> void {
        const AgentId at = path.back();
        if (StepModel::is_sink(graph.nodes.at(at))) {
            if (auto scored = model.finish(w)) keep_best(best, make_plan(path, tools, std::move(*scored)));
            return;
        }
        for (AgentId next : graph.successors(at)) {
            if (std::find(path.begin(), path.end(), next) != path.end()) continue;
            const auto& node = graph.nodes.at(next);
            for (const auto& tool : node.tools) {
                auto nw = model.step(w, node, tool);
                if (!nw) continue;
                path.push_back(next);
                tools.push_back(tool.name);
                self(self, *nw);
                path.pop_back();
                tools.pop_back();
            }
        }
    };

    for (const auto& [id, node] : graph.nodes) {
        for (const auto& tool : node.tools) {
            auto w = model.step(Walk{}, node, tool);
            if (!w) continue;
            path = {id};
            tools = {tool.name};
            dfs(dfs, *w);
        }
    }
    if (!best) throw Error(Errc::NoFeasiblePlan, "no path satisfies the hard constraints for " + goal.task_type);
    return *best;
}

ExecutionPlan replan_on_event(const ExecutionPlan& current, const PlanEvent& /*event*/, const intent::Goal& goal,
                              const PlanningContext& ctx) {
    auto fresh = plan(goal, ctx);
    auto reevaluated = evaluate_path(goal, ctx, current.path, current.tools);
    if (reevaluated.feasible && !better(fresh, reevaluated)) return current;
    return fresh;
}

nlohmann::json to_json(const ExecutionPlan& plan) {
    nlohmann::json path = nlohmann::json::array();
    for (auto id : plan.path) path.push_back(id.value);
    return {{"path", std::move(path)},
            {"tools", plan.tools},
            {"representation", plan.representation},
            {"feasible", plan.feasible},
            {"predicted",
             {{"t_e2e_s", plan.predicted.t_e2e_s},
              {"comm_energy_j", plan.predicted.comm_energy_j},
              {"compute_energy_j", plan.predicted.compute_energy_j},
              {"transfer", plan.predicted.transfer},
              {"history", plan.predicted.history},
              {"success", plan.predicted.success},
              {"utility", plan.predicted.utility}}}};
}

}  // namespace goagentnet::orchestrator
