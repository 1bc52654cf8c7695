#include "goagentnet/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "goagentnet/error.hpp"
#include "goagentnet/numfmt.hpp"
#include "goagentnet/protocol.hpp"

namespace goagentnet::scenario {

namespace {

using nlohmann::json;
using orchestrator::ExecutionPlan;

constexpr std::string_view kTransmitKind = "transmit";

std::vector<AgentId> ids_from_json(const json& j) {
    std::vector<AgentId> out;
    for (const auto& v : j) out.push_back(AgentId{v.get<std::uint32_t>()});
    return out;
}

TaskTemplate template_from_json(const json& j) {
    TaskTemplate t;
    t.task_type = j.at("task_type").get<std::string>();
    t.kpis = j.value("kpis", std::vector<std::string>{});
    for (const auto& s : j.at("subtasks")) {
        SubtaskTemplate st;
        st.name = s.at("name").get<std::string>();
        auto type = parse_agent_type(s.at("agent_type").get<std::string>());
        if (!type) throw Error(Errc::SchemaViolation, "subtask " + st.name + ": unknown agent type");
        st.agent_type = *type;
        st.capability_kind = s.at("capability_kind").get<std::string>();
        st.kpi_share = s.at("kpi_share").get<double>();
        st.required = s.value("required", true);
        st.constrained_by = s.value("constrained_by", std::vector<std::string>{});
        t.subtasks.push_back(std::move(st));
    }
    if (j.contains("precedence")) {
        for (const auto& p : j["precedence"]) t.precedence.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
    } else {
        for (std::size_t i = 1; i < t.subtasks.size(); ++i) t.precedence.emplace_back(i - 1, i);
    }
    check_template(t);
    return t;
}

orchestrator::UtilityWeights weights_from_json(const json& j) {
    orchestrator::UtilityWeights w;
    w.energy = j.value("energy", w.energy);
    w.transfer = j.value("transfer", w.transfer);
    w.history = j.value("history", w.history);
    w.energy_ref_j = j.value("energy_ref_j", w.energy_ref_j);
    if (w.energy < 0 || w.transfer < 0 || w.history < 0) throw Error(Errc::SchemaViolation, "negative utility weight");
    if (!(w.energy_ref_j > 0)) throw Error(Errc::SchemaViolation, "energy_ref_j must be > 0");
    return w;
}

/// Translates JSON access failures into SchemaViolation with the section name.
template <typename F>
auto section(std::string_view name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw Error(Errc::SchemaViolation, std::string(name) + ": " + e.what());
    }
}

void check_references(const Scenario& sc) {
    const auto& nodes = sc.graph.nodes;
    std::set<std::string> tool_names;
    for (const auto& [_, p] : nodes) {
        for (const auto& t : p.tools) tool_names.insert(t.name);
    }
    for (const auto& task : sc.knowledge.tasks()) {
        for (const auto& r : sc.knowledge.get_representations(task)) {
            if (!r.producer_capability.empty() && !tool_names.count(r.producer_capability)) {
                throw Error(Errc::ReferentialIntegrity,
                            "representation " + r.name + " names unknown producer " + r.producer_capability);
            }
        }
    }
    auto need = [&](AgentId id, std::string_view what) {
        if (!nodes.count(id)) throw Error(Errc::ReferentialIntegrity, std::string(what) + " names unknown agent " + to_string(id));
    };
    for (auto id : sc.baseline.prefix) need(id, "baseline");
    for (auto id : sc.baseline.links) need(id, "baseline");
    for (auto id : sc.baseline.suffix) need(id, "baseline");
    for (const auto& b : sc.bounds) {
        if (!sc.scm) throw Error(Errc::ReferentialIntegrity, "bound " + b.label + " without an scm section");
        for (const auto& var : {b.goal_var, b.target_var}) {
            if (!sc.scm->has_variable(var)) throw Error(Errc::ReferentialIntegrity, "bound " + b.label + " names unknown variable " + var);
        }
    }
}

std::string intent_id(std::string_view text) {
    // FNV-1a: stable across platforms, unlike std::hash.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string("intent-") + buf;
}

std::vector<DerivedBound> derive_bounds(const Scenario& sc) {
    std::vector<DerivedBound> out;
    for (const auto& b : sc.bounds) {
        DerivedBound d{b.label, b.target_var, std::nullopt, {}};
        try {
            d.value = scm::derive_bound(*sc.scm, b.goal_var, b.threshold, b.target_var, b.range, b.baseline);
        } catch (const Error& e) {
            d.note = e.what();
        }
        out.push_back(std::move(d));
    }
    return out;
}

/// Per-run simulation state: a fresh registry and bus populated from the scenario.
struct World {
    registry::Registry registry;
    protocol::Bus bus{registry};
    knowledge::KnowledgeBase knowledge;
    netmodel::NetworkModel network;
    registry::KnowledgeGraph snapshot;
    std::vector<std::string> events;

    World(const Scenario& sc, const intent::Goal& goal, std::uint64_t seed) : knowledge(sc.knowledge), network(seed) {
        const auto catalog = knowledge.get_representations(goal.task_type);
        for (const auto& [id, profile] : sc.graph.nodes) {
            auto e = bus.register_agent(profile);
            bus.attach(id, protocol::simulated_agent(catalog));
            events.push_back("seq " + std::to_string(e.seq) + " joined " + to_string(id));
        }
        for (const auto& edge : sc.graph.edges) {
            auto e = registry.add_edge(edge.from, edge.to, edge.kind, edge.attrs);
            events.push_back("seq " + std::to_string(e.seq) + " edge_added " + to_string(edge.from) + "->" +
                             to_string(edge.to) + " " + std::string(to_string(edge.kind)));
        }
        bus.flush();
        snapshot = registry.snapshot();
        network.set_feedback_sink([this](const netmodel::NetworkState& s) { knowledge.record_state(s); });
        network.add_channel(sc.channel);
        const double b = orchestrator::effective_bandwidth(goal, sc.channel);
        if (b != sc.channel.bandwidth_hz) network.set_bandwidth(sc.channel.id, b);
    }

    orchestrator::PlanningContext context(const Scenario& sc) const {
        return {sc.templates, snapshot, knowledge, sc.channel, sc.weights, sc.success};
    }

    /// Drives the plan hop by hop. Costs accumulate in the same order as the planner's
    /// prediction, so an undisturbed run measures exactly what was predicted.
    Measured execute(const Scenario& sc, const intent::Goal& goal, const ExecutionPlan& plan) {
        const auto catalog = knowledge.get_representations(goal.task_type);
        std::string kind;
        double bits = 0.0;
        std::string ref;
        Measured m;
        for (std::size_t i = 0; i < plan.path.size(); ++i) {
            const AgentId at = plan.path[i];
            const auto* tool = snapshot.node(at)->tool(plan.tools[i]);
            protocol::InvokeParams params{at, plan.tools[i], registry::DataType{kind, "", ""}, bits, ref};
            const auto res = bus.invoke(at, plan.tools[i], params);
            events.push_back("invoke " + to_string(at) + " " + plan.tools[i] + " -> " + res.representation + " " +
                             format_number(res.size_bits) + " bits");
            m.t_e2e_s += res.latency_s;
            m.compute_energy_j += res.energy_j;
            if (tool->kind == kTransmitKind) {
                network.set_time(m.t_e2e_s);
                const auto tx = network.transmit(sc.channel.id, res.size_bits);
                m.t_e2e_s += tx.latency_s;
                m.comm_energy_j += tx.energy_j;
                events.push_back("transmit " + sc.channel.id + " " + format_number(res.size_bits) + " bits " +
                                 std::to_string(tx.attempts) + " attempt(s)");
            }
            bus.set_time(m.t_e2e_s);
            kind = res.representation;
            bits = res.size_bits;
            ref = res.payload_ref;
        }
        const auto* spec = knowledge::find_in(catalog, plan.representation);
        if (!spec) throw Error(Errc::UnknownTask, "no catalog entry for " + plan.representation);
        m.success = success_probability(spec->sufficiency, m.t_e2e_s, sc.success.deadline_s, sc.success.decay_per_s);
        m.utility = orchestrator::utility(m.success, m.comm_energy_j, m.compute_energy_j, plan.predicted.transfer,
                                          plan.predicted.history, sc.weights);
        return m;
    }
};

RunReport finish_report(const Scenario& sc, std::string_view text, std::string arch, const intent::Goal& goal,
                        ExecutionPlan plan, World& world) {
    RunReport r;
    r.intent_id = intent_id(text);
    r.intent_text = std::string(text);
    r.arch = std::move(arch);
    r.bandwidth_hz = orchestrator::effective_bandwidth(goal, sc.channel);
    r.measured = world.execute(sc, goal, plan);
    r.plan = std::move(plan);
    r.derived_bounds = derive_bounds(sc);
    r.events = std::move(world.events);
    for (const auto& m : world.bus.trace()) r.events.push_back("rpc " + m);
    spdlog::debug("{} {}: {} S={} E_c={}", r.arch, r.intent_id, r.plan.representation, r.measured.success,
                  r.measured.comm_energy_j);
    return r;
}

json number_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

Scenario load_scenario(const json& doc) {
    if (!doc.is_object()) throw Error(Errc::SchemaViolation, "config must be a JSON object");
    Scenario sc;
    sc.name = doc.value("name", "scenario");

    section("agents", [&] {
        const auto& agents = doc.at("agents");
        if (!agents.is_array() || agents.empty()) throw Error(Errc::SchemaViolation, "agents: graph is empty");
        registry::Registry reg;
        for (const auto& a : agents) reg.register_agent(registry::profile_from_json(a));
        for (const auto& e : doc.value("edges", json::array())) {
            auto edge = registry::edge_from_json(e);
            try {
                reg.add_edge(edge.from, edge.to, edge.kind, edge.attrs);
            } catch (const Error& err) {
                if (err.code() == Errc::UnknownAgent) throw Error(Errc::ReferentialIntegrity, std::string("edge: ") + err.what());
                throw;
            }
        }
        sc.graph = reg.snapshot();
    });

    section("catalog", [&] {
        for (const auto& [task, reps] : doc.at("catalog").items()) {
            for (const auto& r : reps) {
                auto spec = knowledge::representation_from_json(r);
                sc.success.sufficiency[spec.name] = spec.sufficiency;
                sc.knowledge.add_representation(task, std::move(spec));
            }
        }
        for (const auto& r : doc.value("rules", json::array())) sc.knowledge.add_rule(knowledge::rule_from_json(r));
    });

    section("channel", [&] { sc.channel = netmodel::channel_from_json(doc.at("channel")); });

    section("success", [&] {
        const auto s = doc.value("success", json::object());
        sc.success.deadline_s = s.value("deadline_s", sc.success.deadline_s);
        sc.success.decay_per_s = s.value("decay_per_s", sc.success.decay_per_s);
        if (!(sc.success.deadline_s > 0) || !(sc.success.decay_per_s >= 0)) {
            throw Error(Errc::SchemaViolation, "success: need deadline_s > 0 and decay_per_s >= 0");
        }
        for (const auto& [name, s_r] : sc.success.sufficiency) {
            if (!(s_r >= 0 && s_r <= 1)) throw Error(Errc::SchemaViolation, "sufficiency of " + name + " outside [0,1]");
        }
    });

    section("weights", [&] { sc.weights = weights_from_json(doc.value("weights", json::object())); });

    section("templates", [&] {
        for (const auto& t : doc.at("templates")) {
            auto tmpl = template_from_json(t);
            auto name = tmpl.task_type;
            if (!sc.templates.emplace(name, std::move(tmpl)).second) {
                throw Error(Errc::SchemaViolation, "duplicate template " + name);
            }
        }
    });

    section("scm", [&] {
        if (!doc.contains("scm")) return;
        const auto& s = doc["scm"];
        sc.scm = scm::build_scm(scm::equations_from_json(s.at("equations")));
        for (const auto& b : s.value("bounds", json::array())) {
            BoundSpec spec;
            spec.label = b.at("label").get<std::string>();
            spec.goal_var = b.at("goal").get<std::string>();
            spec.threshold = b.at("threshold").get<double>();
            spec.target_var = b.at("target").get<std::string>();
            spec.range = {b.at("range").at(0).get<double>(), b.at("range").at(1).get<double>()};
            const auto baseline_doc = b.value("baseline", json::object());
            for (const auto& [k, v] : baseline_doc.items()) spec.baseline[k] = v.get<double>();
            sc.bounds.push_back(std::move(spec));
        }
    });

    section("baseline", [&] {
        if (!doc.contains("baseline")) return;
        const auto& b = doc["baseline"];
        sc.baseline.prefix = ids_from_json(b.at("prefix"));
        sc.baseline.links = ids_from_json(b.at("links"));
        sc.baseline.suffix = ids_from_json(b.at("suffix"));
        sc.baseline.representation = b.at("representation").get<std::string>();
    });

    check_references(sc);
    return sc;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::SchemaViolation, "cannot read " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(Errc::SchemaViolation, path.string() + ": " + e.what());
    }
    return load_scenario(doc);
}

std::vector<std::string> validate_scenario(const json& doc) {
    std::vector<std::string> findings;
    // Dangling edges are listed individually; everything else stops at the first error.
    if (doc.is_object() && doc.contains("agents") && doc["agents"].is_array()) {
        std::set<std::uint32_t> ids;
        for (const auto& a : doc["agents"]) {
            if (a.is_object() && a.contains("id") && a["id"].is_number_unsigned()) ids.insert(a["id"].get<std::uint32_t>());
        }
        for (const auto& e : doc.value("edges", json::array())) {
            for (const char* end : {"from", "to"}) {
                if (e.is_object() && e.contains(end) && e[end].is_number_unsigned() && !ids.count(e[end].get<std::uint32_t>())) {
                    findings.push_back("ReferentialIntegrity: edge " + e.dump() + " " + end + " names an unknown agent");
                }
            }
        }
    }
    if (!findings.empty()) return findings;
    try {
        load_scenario(doc);
    } catch (const std::exception& e) {
        findings.emplace_back(e.what());
    }
    return findings;
}

intent::Goal parse_goal(std::string_view intent_text, const TaskTemplateSet& templates) {
    std::size_t first = intent_text.find_first_not_of(" \t\r\n");
    const bool structured = first != std::string_view::npos && intent_text[first] == '{';
    auto goal = intent::parse_intent(intent::IntentSpec{
        structured ? intent::SourceKind::structured : intent::SourceKind::pattern_text, std::string(intent_text)});
    const auto report = intent::validate_goal(goal, templates);
    for (const auto& f : report.findings) {
        if (f.kind == intent::FindingKind::UnknownTask) throw Error(Errc::UnknownTask, f.detail);
    }
    if (!report.clean()) {
        const auto& f = report.findings.front();
        throw Error(Errc::SchemaViolation, std::string(intent::to_string(f.kind)) + ": " + f.detail);
    }
    return goal;
}

RunReport run_goagentnet(const Scenario& scenario, std::string_view intent_text, std::uint64_t seed) {
    const auto goal = parse_goal(intent_text, scenario.templates);
    World world(scenario, goal, seed);
    auto plan = orchestrator::plan(goal, world.context(scenario));
    return finish_report(scenario, intent_text, "goagentnet", goal, std::move(plan), world);
}

RunReport run_baseline(const Scenario& scenario, std::string_view intent_text, std::uint64_t seed) {
    const auto goal = parse_goal(intent_text, scenario.templates);
    World world(scenario, goal, seed);
    const auto& base = scenario.baseline;
    if (base.prefix.empty() || base.links.empty()) throw Error(Errc::NoFeasiblePlan, "scenario defines no baseline");

    const double bandwidth = orchestrator::effective_bandwidth(goal, scenario.channel);
    std::vector<AgentId> path = base.prefix;
    std::optional<AgentId> link;
    for (auto id : base.links) {
        const auto& fs = world.snapshot.nodes.at(id).function_space;
        auto it = fs.find("bandwidth_hz");
        const auto* band = it == fs.end() ? nullptr : std::get_if<registry::NumericRange>(&it->second);
        if (!band || band->contains(bandwidth)) {
            link = id;
            break;
        }
    }
    if (!link) throw Error(Errc::NoFeasiblePlan, "no baseline link rated for " + format_number(bandwidth) + " Hz");
    path.push_back(*link);
    path.insert(path.end(), base.suffix.begin(), base.suffix.end());

    // First tool at each hop that accepts the data and does not produce another representation.
    const auto catalog = world.knowledge.get_representations(goal.task_type);
    std::vector<std::string> tools;
    std::string kind;
    double bits = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
        const auto& node = world.snapshot.nodes.at(path[i]);
        bool chosen = false;
        for (const auto& tool : node.tools) {
            auto fx = knowledge::apply_tool(catalog, tool, kind, bits, i == 0);
            if (!fx) continue;
            if (knowledge::find_in(catalog, fx->out_kind) && fx->out_kind != base.representation) continue;
            tools.push_back(tool.name);
            kind = fx->out_kind;
            bits = fx->out_bits;
            chosen = true;
            break;
        }
        if (!chosen) throw Error(Errc::NoFeasiblePlan, "baseline agent " + to_string(path[i]) + " has no usable tool");
    }

    auto plan = orchestrator::evaluate_path(goal, world.context(scenario), path, tools, false);
    if (!plan.feasible) throw Error(Errc::NoFeasiblePlan, "baseline pipeline is infeasible");
    return finish_report(scenario, intent_text, "baseline", goal, std::move(plan), world);
}

ComparisonReport compare(const RunReport& goagent, const RunReport& baseline) {
    if (!(baseline.measured.comm_energy_j > 0.0)) {
        throw Error(Errc::BaselineZeroEnergy, "baseline " + baseline.intent_id + " spent no communication energy");
    }
    return ComparisonReport{goagent.intent_id, goagent.bandwidth_hz,
                            100.0 * (1.0 - goagent.measured.comm_energy_j / baseline.measured.comm_energy_j),
                            goagent.measured.success - baseline.measured.success};
}

json to_json(const RunReport& r) {
    json bounds = json::array();
    for (const auto& b : r.derived_bounds) {
        json j{{"label", b.label}, {"target", b.target_var}, {"value", number_or_null(b.value)}};
        if (!b.note.empty()) j["note"] = b.note;
        bounds.push_back(std::move(j));
    }
    return {{"intent_id", r.intent_id},
            {"intent", r.intent_text},
            {"arch", r.arch},
            {"bandwidth_hz", r.bandwidth_hz},
            {"plan", orchestrator::to_json(r.plan)},
            {"measured",
             {{"t_e2e_s", r.measured.t_e2e_s},
              {"comm_energy_j", r.measured.comm_energy_j},
              {"compute_energy_j", r.measured.compute_energy_j},
              {"success", r.measured.success},
              {"utility", r.measured.utility}}},
            {"derived_bounds", std::move(bounds)},
            {"events", r.events}};
}

json to_json(const ComparisonReport& r) {
    return {{"intent_id", r.intent_id},
            {"bandwidth_hz", r.bandwidth_hz},
            {"energy_reduction_pct", r.energy_reduction_pct},
            {"success_delta", r.success_delta}};
}

std::string csv_header() { return "bandwidth_hz,arch,representation,t_e2e,E_c,E_x,S,U"; }

std::string csv_row(const RunReport& r) {
    std::ostringstream out;
    out << format_number(r.bandwidth_hz) << ',' << r.arch << ',' << r.plan.representation << ','
        << format_number(r.measured.t_e2e_s) << ',' << format_number(r.measured.comm_energy_j) << ','
        << format_number(r.measured.compute_energy_j) << ',' << format_number(r.measured.success) << ','
        << format_number(r.measured.utility);
    return out.str();
}

}  // namespace goagentnet::scenario
