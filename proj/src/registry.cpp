#include "goagentnet/registry.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include "goagentnet/error.hpp"
#include "goagentnet/numfmt.hpp"

namespace goagentnet::registry {

namespace {

bool edge_less(const Edge& a, const Edge& b) {
    return std::tie(a.from, a.to, a.kind) < std::tie(b.from, b.to, b.kind);
}

auto find_edge(std::vector<Edge>& edges, AgentId from, AgentId to, EdgeKind kind) {
    return std::find_if(edges.begin(), edges.end(),
                        [&](const Edge& e) { return e.from == from && e.to == to && e.kind == kind; });
}

void check_delta(const AgentProfile& profile, const ProfileDelta& delta) {
    for (const auto& [key, _] : delta.resources) {
        if (!profile.resources.contains(key)) throw Error(Errc::UnknownField, "resources." + key);
    }
    for (const auto& [key, _] : delta.function_space) {
        if (!profile.function_space.contains(key)) throw Error(Errc::UnknownField, "function_space." + key);
    }
    for (const auto& name : delta.remove_tools) {
        if (!profile.tool(name)) throw Error(Errc::UnknownField, "tools." + name);
    }
    for (const auto& cap : delta.add_tools) {
        bool removed = std::find(delta.remove_tools.begin(), delta.remove_tools.end(), cap.name) !=
                       delta.remove_tools.end();
        if (profile.tool(cap.name) && !removed) {
            throw Error(Errc::InvalidProfile, "tool already present: " + cap.name);
        }
    }
}

void apply_delta(AgentProfile& profile, const ProfileDelta& delta) {
    for (const auto& [key, v] : delta.resources) profile.resources[key] = v;
    for (const auto& [key, v] : delta.function_space) profile.function_space[key] = v;
    for (const auto& name : delta.remove_tools) {
        std::erase_if(profile.tools, [&](const Capability& c) { return c.name == name; });
    }
    for (const auto& cap : delta.add_tools) profile.tools.push_back(cap);
}

nlohmann::json to_json(const ParamSpace& space) {
    if (const auto* r = std::get_if<NumericRange>(&space)) {
        nlohmann::json j{{"min", r->lo}, {"max", r->hi}};
        if (r->lo_open) j["min_exclusive"] = true;
        return j;
    }
    return std::get<std::vector<std::string>>(space);
}

ParamSpace param_space_from_json(const nlohmann::json& j) {
    if (j.is_array()) return j.get<std::vector<std::string>>();
    return NumericRange{j.at("min").get<double>(), j.at("max").get<double>(), j.value("min_exclusive", false)};
}

AgentId id_from_json(const nlohmann::json& j) { return AgentId{j.get<std::uint32_t>()}; }

}  // namespace

const Capability* AgentProfile::tool(std::string_view name) const {
    for (const auto& c : tools) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

void check_profile(const AgentProfile& profile) {
    std::set<std::string, std::less<>> names;
    for (const auto& c : profile.tools) {
        if (c.name.empty()) throw Error(Errc::InvalidProfile, "agent " + to_string(profile.id) + ": unnamed tool");
        if (c.input_schema.kind.empty() || c.output_schema.kind.empty()) {
            throw Error(Errc::InvalidProfile, "tool " + c.name + " lacks input/output schema");
        }
        const auto& m = c.cost_model;
        if (m.latency_base_s < 0 || m.latency_per_bit_s < 0 || m.energy_base_j < 0 || m.energy_per_bit_j < 0) {
            throw Error(Errc::InvalidProfile, "tool " + c.name + " has negative cost coefficients");
        }
        if (!names.insert(c.name).second) throw Error(Errc::InvalidProfile, "duplicate tool " + c.name);
    }
}

std::string_view to_string(EdgeKind kind) noexcept {
    switch (kind) {
        case EdgeKind::interaction_link: return "interaction_link";
        case EdgeKind::capability_dependency: return "capability_dependency";
        case EdgeKind::shared_knowledge: return "shared_knowledge";
    }
    return "?";
}

std::optional<EdgeKind> parse_edge_kind(std::string_view text) noexcept {
    for (auto k : {EdgeKind::interaction_link, EdgeKind::capability_dependency, EdgeKind::shared_knowledge}) {
        if (to_string(k) == text) return k;
    }
    return std::nullopt;
}

std::string_view to_string(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::joined: return "joined";
        case EventKind::left: return "left";
        case EventKind::updated: return "updated";
        case EventKind::edge_added: return "edge_added";
        case EventKind::edge_removed: return "edge_removed";
    }
    return "?";
}

const AgentProfile* KnowledgeGraph::node(AgentId id) const {
    auto it = nodes.find(id);
    return it == nodes.end() ? nullptr : &it->second;
}

std::vector<AgentId> KnowledgeGraph::successors(AgentId id, EdgeKind kind) const {
    std::vector<AgentId> out;
    for (const auto& e : edges) {
        if (e.from == id && e.kind == kind) out.push_back(e.to);
    }
    return out;  // edges are sorted by (from, to, kind)
}

bool KnowledgeGraph::has_edge(AgentId from, AgentId to, EdgeKind kind) const {
    return std::any_of(edges.begin(), edges.end(),
                       [&](const Edge& e) { return e.from == from && e.to == to && e.kind == kind; });
}

void apply_event(KnowledgeGraph& graph, const GraphEvent& event) {
    switch (event.kind) {
        case EventKind::joined: {
            const auto& profile = std::get<AgentProfile>(event.payload);
            check_profile(profile);
            if (!graph.nodes.emplace(profile.id, profile).second) {
                throw Error(Errc::DuplicateId, to_string(profile.id));
            }
            break;
        }
        case EventKind::left: {
            if (graph.nodes.erase(event.subject) == 0) throw Error(Errc::UnknownAgent, to_string(event.subject));
            std::erase_if(graph.edges, [&](const Edge& e) { return e.from == event.subject || e.to == event.subject; });
            break;
        }
        case EventKind::updated: {
            auto it = graph.nodes.find(event.subject);
            if (it == graph.nodes.end()) throw Error(Errc::UnknownAgent, to_string(event.subject));
            const auto& delta = std::get<ProfileDelta>(event.payload);
            check_delta(it->second, delta);
            AgentProfile updated = it->second;
            apply_delta(updated, delta);
            check_profile(updated);
            it->second = std::move(updated);
            break;
        }
        case EventKind::edge_added: {
            const auto& edge = std::get<Edge>(event.payload);
            if (!graph.nodes.contains(edge.from)) throw Error(Errc::UnknownAgent, to_string(edge.from));
            if (!graph.nodes.contains(edge.to)) throw Error(Errc::UnknownAgent, to_string(edge.to));
            if (edge.from == edge.to) throw Error(Errc::SchemaViolation, "self-loop on " + to_string(edge.from));
            if (graph.has_edge(edge.from, edge.to, edge.kind)) {
                throw Error(Errc::DuplicateEdge, to_string(edge.from) + "->" + to_string(edge.to));
            }
            graph.edges.insert(std::upper_bound(graph.edges.begin(), graph.edges.end(), edge, edge_less), edge);
            break;
        }
        case EventKind::edge_removed: {
            const auto& edge = std::get<Edge>(event.payload);
            auto it = find_edge(graph.edges, edge.from, edge.to, edge.kind);
            if (it == graph.edges.end()) {
                throw Error(Errc::UnknownEdge, to_string(edge.from) + "->" + to_string(edge.to));
            }
            graph.edges.erase(it);
            break;
        }
    }
    graph.version = event.seq;
}

KnowledgeGraph fold_events(KnowledgeGraph base, const std::vector<GraphEvent>& events) {
    for (const auto& e : events) {
        if (e.seq != base.version + 1) {
            throw Error(Errc::GapInEvents, "expected seq " + std::to_string(base.version + 1) + ", got " +
                                               std::to_string(e.seq));
        }
        apply_event(base, e);
    }
    return base;
}

std::vector<AgentId> query(const KnowledgeGraph& graph, const QueryFilter& filter) {
    std::vector<AgentId> out;
    for (const auto& [id, p] : graph.nodes) {
        if (filter.agent_type && p.agent_type != *filter.agent_type) continue;
        if (filter.capability_name && !p.tool(*filter.capability_name)) continue;
        if (filter.output_kind &&
            std::none_of(p.tools.begin(), p.tools.end(),
                         [&](const Capability& c) { return c.output_schema.kind == *filter.output_kind; })) {
            continue;
        }
        out.push_back(id);
    }
    return out;
}

std::string to_dot(const KnowledgeGraph& graph) {
    std::ostringstream out;
    out << "digraph knowledge_graph {\n";
    for (const auto& [id, p] : graph.nodes) {
        out << "  n" << id.value << " [label=\"" << id.value << ':' << to_string(p.agent_type) << "\"];\n";
    }
    for (const auto& e : graph.edges) {
        out << "  n" << e.from.value << " -> n" << e.to.value << " [label=\"" << to_string(e.kind) << "\"];\n";
    }
    out << "}\n";
    return out.str();
}

Registry::Registry(KnowledgeGraph base) : graph_(std::move(base)) {}

GraphEvent Registry::commit(GraphEvent event) {
    event.seq = graph_.version + 1;
    event.timestamp = now_;
    apply_event(graph_, event);  // throws before anything is logged
    log_.push_back(event);
    return event;
}

GraphEvent Registry::register_agent(AgentProfile profile) {
    std::unique_lock lock(mutex_);
    AgentId id = profile.id;
    return commit(GraphEvent{0, EventKind::joined, id, std::move(profile), 0.0});
}

GraphEvent Registry::deregister(AgentId id) {
    std::unique_lock lock(mutex_);
    return commit(GraphEvent{0, EventKind::left, id, std::monostate{}, 0.0});
}

GraphEvent Registry::update_state(AgentId id, ProfileDelta delta) {
    std::unique_lock lock(mutex_);
    return commit(GraphEvent{0, EventKind::updated, id, std::move(delta), 0.0});
}

GraphEvent Registry::add_edge(AgentId from, AgentId to, EdgeKind kind, std::map<std::string, std::string> attrs) {
    std::unique_lock lock(mutex_);
    return commit(GraphEvent{0, EventKind::edge_added, from, Edge{from, to, kind, std::move(attrs)}, 0.0});
}

GraphEvent Registry::remove_edge(AgentId from, AgentId to, EdgeKind kind) {
    std::unique_lock lock(mutex_);
    auto it = find_edge(graph_.edges, from, to, kind);
    Edge edge = it == graph_.edges.end() ? Edge{from, to, kind, {}} : *it;
    return commit(GraphEvent{0, EventKind::edge_removed, from, std::move(edge), 0.0});
}

std::vector<AgentId> Registry::query(const QueryFilter& filter) const {
    std::shared_lock lock(mutex_);
    return registry::query(graph_, filter);
}

KnowledgeGraph Registry::snapshot() const {
    std::shared_lock lock(mutex_);
    return graph_;
}

std::uint64_t Registry::version() const {
    std::shared_lock lock(mutex_);
    return graph_.version;
}

std::vector<GraphEvent> Registry::events_since(std::uint64_t after) const {
    std::shared_lock lock(mutex_);
    std::vector<GraphEvent> out;
    for (const auto& e : log_) {
        if (e.seq > after) out.push_back(e);
    }
    return out;
}

void Registry::set_time(double t) {
    std::unique_lock lock(mutex_);
    now_ = t;
}

// JSON ----------------------------------------------------------------------

nlohmann::json to_json(const DataType& t) {
    return {{"kind", t.kind}, {"modality", t.modality}, {"unit", t.unit}};
}

nlohmann::json to_json(const Capability& c) {
    return {{"name", c.name},
            {"kind", c.kind},
            {"input", to_json(c.input_schema)},
            {"output", to_json(c.output_schema)},
            {"cost",
             {{"latency_base_s", c.cost_model.latency_base_s},
              {"latency_per_bit_s", c.cost_model.latency_per_bit_s},
              {"energy_base_j", c.cost_model.energy_base_j},
              {"energy_per_bit_j", c.cost_model.energy_per_bit_j}}}};
}

nlohmann::json to_json(const AgentProfile& p) {
    nlohmann::json j{{"id", p.id.value}, {"type", to_string(p.agent_type)}};
    j["tools"] = nlohmann::json::array();
    for (const auto& c : p.tools) j["tools"].push_back(to_json(c));
    j["function_space"] = nlohmann::json::object();
    for (const auto& [k, v] : p.function_space) j["function_space"][k] = to_json(v);
    j["resources"] = p.resources;
    return j;
}

nlohmann::json to_json(const ProfileDelta& d) {
    nlohmann::json j;
    j["resources"] = d.resources;
    j["function_space"] = nlohmann::json::object();
    for (const auto& [k, v] : d.function_space) j["function_space"][k] = to_json(v);
    j["add_tools"] = nlohmann::json::array();
    for (const auto& c : d.add_tools) j["add_tools"].push_back(to_json(c));
    j["remove_tools"] = d.remove_tools;
    return j;
}

nlohmann::json to_json(const Edge& e) {
    nlohmann::json j{{"from", e.from.value}, {"to", e.to.value}, {"kind", to_string(e.kind)}};
    j["attrs"] = e.attrs;
    return j;
}

nlohmann::json to_json(const GraphEvent& e) {
    nlohmann::json j{{"seq", e.seq},
                     {"kind", to_string(e.kind)},
                     {"subject", e.subject.value},
                     {"timestamp", e.timestamp}};
    std::visit(
        [&](const auto& payload) {
            using T = std::decay_t<decltype(payload)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                j["payload"] = nullptr;
            } else {
                j["payload"] = to_json(payload);
            }
        },
        e.payload);
    return j;
}

DataType data_type_from_json(const nlohmann::json& j) {
    return DataType{j.at("kind").get<std::string>(), j.value("modality", ""), j.value("unit", "")};
}

Capability capability_from_json(const nlohmann::json& j) {
    Capability c;
    c.name = j.at("name").get<std::string>();
    c.kind = j.value("kind", "aux");
    c.input_schema = data_type_from_json(j.at("input"));
    c.output_schema = data_type_from_json(j.at("output"));
    if (j.contains("cost")) {
        const auto& m = j["cost"];
        c.cost_model = CostModel{m.value("latency_base_s", 0.0), m.value("latency_per_bit_s", 0.0),
                                 m.value("energy_base_j", 0.0), m.value("energy_per_bit_j", 0.0)};
    }
    return c;
}

AgentProfile profile_from_json(const nlohmann::json& j) {
    AgentProfile p;
    p.id = id_from_json(j.at("id"));
    auto type = parse_agent_type(j.at("type").get<std::string>());
    if (!type) throw Error(Errc::InvalidProfile, "agent " + to_string(p.id) + ": unknown agent type");
    p.agent_type = *type;
    for (const auto& t : j.value("tools", nlohmann::json::array())) p.tools.push_back(capability_from_json(t));
    const auto function_space_doc = j.value("function_space", nlohmann::json::object());
    for (const auto& [k, v] : function_space_doc.items()) {
        p.function_space[k] = param_space_from_json(v);
    }
    p.resources = j.value("resources", std::map<std::string, double>{});
    return p;
}

ProfileDelta delta_from_json(const nlohmann::json& j) {
    ProfileDelta d;
    d.resources = j.value("resources", std::map<std::string, double>{});
    const auto function_space_doc = j.value("function_space", nlohmann::json::object());
    for (const auto& [k, v] : function_space_doc.items()) {
        d.function_space[k] = param_space_from_json(v);
    }
    for (const auto& t : j.value("add_tools", nlohmann::json::array())) d.add_tools.push_back(capability_from_json(t));
    d.remove_tools = j.value("remove_tools", std::vector<std::string>{});
    return d;
}

Edge edge_from_json(const nlohmann::json& j) {
    auto kind = parse_edge_kind(j.value("kind", "interaction_link"));
    if (!kind) throw Error(Errc::SchemaViolation, "unknown edge kind");
    return Edge{id_from_json(j.at("from")), id_from_json(j.at("to")), *kind,
                j.value("attrs", std::map<std::string, std::string>{})};
}

GraphEvent event_from_json(const nlohmann::json& j) {
    GraphEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    const auto kind = j.at("kind").get<std::string>();
    e.subject = id_from_json(j.at("subject"));
    e.timestamp = j.value("timestamp", 0.0);
    const auto& payload = j.at("payload");
    if (kind == "joined") {
        e.kind = EventKind::joined;
        e.payload = profile_from_json(payload);
    } else if (kind == "left") {
        e.kind = EventKind::left;
    } else if (kind == "updated") {
        e.kind = EventKind::updated;
        e.payload = delta_from_json(payload);
    } else if (kind == "edge_added" || kind == "edge_removed") {
        e.kind = kind == "edge_added" ? EventKind::edge_added : EventKind::edge_removed;
        e.payload = edge_from_json(payload);
    } else {
        throw Error(Errc::SchemaViolation, "unknown event kind '" + kind + "'");
    }
    return e;
}

}  // namespace goagentnet::registry
