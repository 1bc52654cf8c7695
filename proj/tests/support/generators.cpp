#include "generators.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "goagentnet/error.hpp"

namespace testsupport {

namespace {

using namespace goagentnet;
using registry::AgentProfile;
using registry::Capability;
using registry::CostModel;
using registry::DataType;

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
bool chance(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

/// Draws on a 10-step grid over [lo, hi] when quantized, so that equal costs recur.
struct Draw {
    std::mt19937_64& rng;
    bool quantized;

    double operator()(double lo, double hi) const {
        if (!quantized) return uniform(rng, lo, hi);
        return lo + (hi - lo) * pick(rng, 0, 10) / 10.0;
    }
};

Capability cap(std::string name, std::string kind, std::string in, std::string out, CostModel cost = {}) {
    return Capability{std::move(name), std::move(kind), DataType{std::move(in), "", ""}, DataType{std::move(out), "", ""},
                      cost};
}

std::string utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
    return out;
}

std::string random_string(std::mt19937_64& rng) {
    static constexpr char32_t specials[] = {U'"', U'\\', U'/', U'\n', U'\t', U'\x01', U'\x1f', U'é',
                                            U'中', U'€', U'\U0001F916', U' '};
    std::string s;
    const int len = pick(rng, 0, 12);
    for (int i = 0; i < len; ++i) {
        if (chance(rng, 0.25)) {
            s += utf8(specials[pick(rng, 0, static_cast<int>(std::size(specials)) - 1)]);
        } else {
            s += static_cast<char>(pick(rng, 'a', 'z'));
        }
    }
    return s;
}

double random_double(std::mt19937_64& rng) {
    switch (pick(rng, 0, 3)) {
        case 0: return uniform(rng, -1.0, 1.0);
        case 1: return uniform(rng, -1e9, 1e9);
        case 2: return std::ldexp(uniform(rng, 0.5, 1.0), pick(rng, -300, 300)) * (chance(rng, 0.5) ? 1 : -1);
        default: return std::round(uniform(rng, -1e6, 1e6));
    }
}

}  // namespace

std::filesystem::path data_dir() { return GOAGENTNET_TEST_DATA; }
std::filesystem::path canonical_config_path() { return std::filesystem::path(GOAGENTNET_CONFIG_DIR) / "fdr_canonical.json"; }

const scenario::Scenario& canonical() {
    static const scenario::Scenario sc = scenario::load_scenario_file(canonical_config_path());
    return sc;
}

std::string fdr_intent(const std::string& mhz) {
    return "Achieve the highest task success rate for robotic FDR under a " + mhz + "MHz bandwidth constraint.";
}

PlanningCase random_planning_case(std::uint64_t seed, std::size_t max_nodes) {
    std::mt19937_64 rng(seed);
    Draw draw{rng, seed % 2 == 0};
    PlanningCase pc;
    const std::string task = "rand_task";

    const int n_reps = pick(rng, 1, 4);
    std::vector<std::string> reps;
    for (int r = 0; r < n_reps; ++r) {
        reps.push_back("r" + std::to_string(r));
        knowledge::RepresentationSpec spec;
        spec.name = reps.back();
        spec.size_bits = draw(1e4, 4e7);
        spec.extract_latency_s = draw(0.0, 0.5);
        spec.extract_energy_j = draw(0.0, 0.5);
        spec.sufficiency = draw(0.3, 1.0);
        spec.producer_capability = r == 0 ? "sense" : "make_" + spec.name;
        pc.success.sufficiency[spec.name] = spec.sufficiency;
        pc.knowledge.add_representation(task, spec);
    }
    auto any_rep = [&] { return reps[static_cast<std::size_t>(pick(rng, 0, n_reps - 1))]; };

    // sense -> extract? -> transmit -> reason -> actuate, with some steps optional or absent.
    std::vector<SubtaskTemplate> steps;
    steps.push_back({"sense", AgentType::perceptual, "sense", 0, true, {}});
    steps.push_back({"extract", AgentType::computation, "extract", 0, false, {}});
    steps.push_back({"transmit", AgentType::communication, "transmit", 0, chance(rng, 0.7), {"bandwidth_hz"}});
    const bool has_reason = chance(rng, 0.7);
    if (has_reason) steps.push_back({"reason", AgentType::computation, "reason", 0, true, {}});
    steps.push_back({"actuate", AgentType::actuator, "actuate", 0, true, {}});
    for (auto& s : steps) s.kpi_share = 1.0 / static_cast<double>(steps.size());
    steps.back().kpi_share = 1.0 - (static_cast<double>(steps.size()) - 1) / static_cast<double>(steps.size());
    pc.templates.emplace(task, make_chain_template(task, steps, {"success_rate", "latency_s"}));

    const int n = pick(rng, 4, static_cast<int>(max_nodes));
    const double bandwidth = draw(1e6, 1e8);
    for (int i = 1; i <= n; ++i) {
        AgentProfile p;
        p.id = AgentId{static_cast<std::uint32_t>(i)};
        if (i == 1) {
            p.agent_type = AgentType::perceptual;
        } else if (i == n) {
            p.agent_type = AgentType::actuator;
        } else {
            const double u = uniform(rng, 0, 1);
            p.agent_type = u < 0.1   ? AgentType::perceptual
                           : u < 0.6 ? AgentType::computation
                           : u < 0.95 ? AgentType::communication
                                      : AgentType::actuator;
        }
        auto cost = [&](double max_base) {
            return CostModel{draw(0.0, max_base), chance(rng, 0.3) ? draw(0.0, 1e-8) : 0.0, draw(0.0, max_base),
                             chance(rng, 0.3) ? draw(0.0, 1e-8) : 0.0};
        };
        switch (p.agent_type) {
            case AgentType::perceptual:
                p.tools.push_back(cap("sense", "sense", "sensor", reps[0], cost(0.1)));
                if (chance(rng, 0.3)) p.tools.push_back(cap("sense_direct", "sense", "sensor", any_rep(), cost(0.3)));
                break;
            case AgentType::computation: {
                const int k = pick(rng, 1, 3);
                for (int t = 0; t < k; ++t) {
                    const std::string suffix = "_" + std::to_string(t);
                    switch (pick(rng, 0, 2)) {
                        case 0: {
                            const auto out = any_rep();
                            p.tools.push_back(cap(out == reps[0] ? "refine" + suffix : "make_" + out, "extract",
                                                  chance(rng, 0.3) ? "*" : any_rep(), out, cost(0.2)));
                            break;
                        }
                        case 1: p.tools.push_back(cap("filter" + suffix, "aux", "*", "*", cost(0.1))); break;
                        default:
                            p.tools.push_back(cap("reason" + suffix, "reason", chance(rng, 0.3) ? "*" : any_rep(), "plan",
                                                  cost(0.5)));
                    }
                }
                // Producer names may collide across draws; keep the first.
                std::vector<Capability> unique;
                for (auto& c : p.tools) {
                    if (!std::any_of(unique.begin(), unique.end(), [&](const Capability& u) { return u.name == c.name; })) {
                        unique.push_back(std::move(c));
                    }
                }
                p.tools = std::move(unique);
                break;
            }
            case AgentType::communication:
                p.tools.push_back(cap("tx", "transmit", "*", "*", cost(0.05)));
                if (chance(rng, 0.5)) {
                    const double lo = chance(rng, 0.6) ? bandwidth * draw(0.0, 0.9) : bandwidth * draw(1.0, 2.0);
                    p.function_space["bandwidth_hz"] = registry::NumericRange{lo, lo + draw(1e6, 1e8), true};
                }
                break;
            case AgentType::actuator:
                p.tools.push_back(cap("act", "actuate", chance(rng, 0.3) ? "*" : "plan", "cmd", cost(0.05)));
                break;
            case AgentType::orchestration:
                break;
        }
        if (chance(rng, 0.3)) p.resources["transfer_overhead"] = draw(0.0, 0.3);
        if (chance(rng, 0.3)) p.resources["history_penalty"] = draw(0.0, 0.3);
        pc.graph.nodes.emplace(p.id, std::move(p));
    }

    const double density = uniform(rng, 0.15, 0.35);
    for (int a = 1; a <= n; ++a) {
        for (int b = 1; b <= n; ++b) {
            if (a == b) continue;
            const AgentId from{static_cast<std::uint32_t>(a)}, to{static_cast<std::uint32_t>(b)};
            if (chance(rng, density)) pc.graph.edges.push_back({from, to, registry::EdgeKind::interaction_link, {}});
            if (chance(rng, 0.05)) pc.graph.edges.push_back({from, to, registry::EdgeKind::capability_dependency, {}});
        }
    }

    // Plant a few source-to-sink chains through matching agents so that most cases have
    // several feasible candidates to choose between.
    std::vector<AgentId> comp, comm;
    for (const auto& [nid, p] : pc.graph.nodes) {
        if (p.agent_type == AgentType::computation) comp.push_back(nid);
        if (p.agent_type == AgentType::communication) comm.push_back(nid);
    }
    auto any_of = [&](const std::vector<AgentId>& v) { return v[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(v.size()) - 1))]; };
    auto ensure_tool = [&](AgentId nid, Capability c) {
        auto& tools = pc.graph.nodes.at(nid).tools;
        if (std::none_of(tools.begin(), tools.end(), [&](const Capability& t) { return t.name == c.name; })) {
            tools.push_back(std::move(c));
        }
    };
    auto link = [&](AgentId a, AgentId b) {
        if (a == b || pc.graph.has_edge(a, b, registry::EdgeKind::interaction_link)) return;
        pc.graph.edges.push_back({a, b, registry::EdgeKind::interaction_link, {}});
    };
    const AgentId source{1}, sink{static_cast<std::uint32_t>(n)};
    if (!has_reason) ensure_tool(sink, cap("act_any", "actuate", "*", "cmd"));
    const int chains = pick(rng, 0, 3);
    for (int k = 0; k < chains; ++k) {
        std::vector<AgentId> chain{source};
        if (!comp.empty() && chance(rng, 0.6)) {
            const auto ext = any_of(comp);
            if (n_reps > 1) {
                const auto rep = reps[static_cast<std::size_t>(pick(rng, 1, n_reps - 1))];
                ensure_tool(ext, cap("make_" + rep, "extract", chance(rng, 0.5) ? "*" : reps[0], rep, {}));
            }
            chain.push_back(ext);
        }
        if (!comm.empty() && chance(rng, 0.8)) {
            const auto tx = any_of(comm);
            ensure_tool(tx, cap("tx", "transmit", "*", "*", {draw(0.0, 0.05), 0, draw(0.0, 0.05), 0}));
            chain.push_back(tx);
        }
        if (has_reason && !comp.empty()) {
            const auto rs = any_of(comp);
            ensure_tool(rs, cap("reason_any", "reason", "*", "plan", {draw(0.0, 0.5), 0, draw(0.0, 0.5), 0}));
            chain.push_back(rs);
        }
        chain.push_back(sink);
        for (std::size_t i = 1; i < chain.size(); ++i) link(chain[i - 1], chain[i]);
    }
    std::sort(pc.graph.edges.begin(), pc.graph.edges.end(),
              [](const auto& x, const auto& y) { return std::tie(x.from, x.to, x.kind) < std::tie(y.from, y.to, y.kind); });

    pc.channel = netmodel::Channel{"ch", bandwidth, draw(0.5, 2.0), draw(0.5, 2.0), draw(0.0, 0.05), 0.0, 0.0};
    pc.weights = orchestrator::UtilityWeights{draw(0.0, 0.5), draw(0.0, 0.3), draw(0.0, 0.3), draw(0.5, 2.0)};
    pc.success.deadline_s = draw(0.5, 3.0);
    pc.success.decay_per_s = draw(0.1, 2.0);

    pc.goal.task_type = task;
    pc.goal.kpis.push_back({"success_rate", intent::Direction::maximize, std::nullopt});
    if (chance(rng, 0.5)) {
        pc.goal.constraints.push_back({"bandwidth_hz", intent::Relation::le, {draw(1e6, 1e8), "Hz"}});
    }
    return pc;
}

AgentProfile random_profile(std::mt19937_64& rng, AgentId id) {
    AgentProfile p;
    p.id = id;
    p.agent_type = static_cast<AgentType>(pick(rng, 0, 4));
    const int k = pick(rng, 1, 3);
    for (int t = 0; t < k; ++t) {
        p.tools.push_back(cap("tool_" + std::to_string(t), chance(rng, 0.5) ? "aux" : "extract", "*",
                              chance(rng, 0.5) ? "*" : "kind_" + std::to_string(pick(rng, 0, 3)),
                              CostModel{uniform(rng, 0, 1), 0, uniform(rng, 0, 1), 0}));
    }
    if (chance(rng, 0.5)) p.function_space["bandwidth_hz"] = registry::NumericRange{0, uniform(rng, 1e6, 1e8), true};
    if (chance(rng, 0.3)) p.function_space["mode"] = std::vector<std::string>{"fast", "slow"};
    p.resources["battery_j"] = uniform(rng, 0, 100);
    if (chance(rng, 0.5)) p.resources["buffer_bits"] = uniform(rng, 0, 1e9);
    return p;
}

registry::ProfileDelta random_delta(std::mt19937_64& rng, const AgentProfile* base) {
    registry::ProfileDelta d;
    if (!base || chance(rng, 0.15)) {
        d.resources["no_such_field"] = 1.0;  // rejected with UnknownField
        return d;
    }
    for (const auto& [key, _] : base->resources) {
        if (chance(rng, 0.5)) d.resources[key] = uniform(rng, 0, 100);
    }
    for (const auto& [key, _] : base->function_space) {
        if (chance(rng, 0.3)) d.function_space[key] = registry::NumericRange{0, uniform(rng, 1e6, 1e8), false};
    }
    if (!base->tools.empty() && chance(rng, 0.3)) d.remove_tools.push_back(base->tools.front().name);
    if (chance(rng, 0.3)) d.add_tools.push_back(cap("added_" + std::to_string(pick(rng, 0, 1 << 20)), "aux", "*", "*"));
    return d;
}

nlohmann::json random_json(std::mt19937_64& rng, int depth) {
    const int kind = pick(rng, 0, depth >= 3 ? 5 : 7);
    switch (kind) {
        case 0: return nullptr;
        case 1: return chance(rng, 0.5);
        case 2: return std::uniform_int_distribution<std::int64_t>(INT64_MIN, INT64_MAX)(rng);
        case 3: return static_cast<std::int64_t>(pick(rng, -1000, 1000));
        case 4: return random_double(rng);
        case 5: return random_string(rng);
        case 6: {
            auto arr = nlohmann::json::array();
            for (int i = pick(rng, 0, 4); i > 0; --i) arr.push_back(random_json(rng, depth + 1));
            return arr;
        }
        default: {
            auto obj = nlohmann::json::object();
            for (int i = pick(rng, 0, 4); i > 0; --i) obj[random_string(rng)] = random_json(rng, depth + 1);
            return obj;
        }
    }
}

protocol::Message random_message(std::mt19937_64& rng) {
    const auto& methods = knowledge::kMessageMethods;
    const std::string method{methods[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(std::size(methods)) - 1))]};
    auto id = [&]() -> std::int64_t {
        switch (pick(rng, 0, 3)) {
            case 0: return INT64_MAX;
            case 1: return INT64_MIN;
            case 2: return pick(rng, -5, 5);
            default: return std::uniform_int_distribution<std::int64_t>(INT64_MIN, INT64_MAX)(rng);
        }
    };
    auto params = [&]() -> nlohmann::json {
        switch (pick(rng, 0, 2)) {
            case 0: return nullptr;
            case 1: {
                auto a = nlohmann::json::array();
                for (int i = pick(rng, 0, 3); i > 0; --i) a.push_back(random_json(rng, 1));
                return a;
            }
            default: {
                auto o = nlohmann::json::object();
                for (int i = pick(rng, 0, 4); i > 0; --i) o[random_string(rng)] = random_json(rng, 1);
                return o;
            }
        }
    };
    switch (pick(rng, 0, 3)) {
        case 0: return protocol::Message::request(id(), method, params());
        case 1: return protocol::Message::notification(method, params());
        case 2: return protocol::Message::response(chance(rng, 0.9) ? std::optional(id()) : std::nullopt, random_json(rng));
        default:
            return protocol::Message::failure(chance(rng, 0.9) ? std::optional(id()) : std::nullopt,
                                              {pick(rng, INT32_MIN, INT32_MAX), random_string(rng)});
    }
}

ScmCase random_scm_case(std::mt19937_64& rng) {
    using scm::StructuralEquation;
    using scm::Term;
    using scm::Transform;
    using Kind = Transform::Kind;
    for (;;) {
        ScmCase c;
        c.target = "x";
        std::vector<std::string> vars{"x"};
        std::map<std::string, bool> positive{{"x", true}};
        const int n_exo = pick(rng, 0, 2);
        for (int i = 0; i < n_exo; ++i) {
            const auto name = "e" + std::to_string(i);
            vars.push_back(name);
            positive[name] = true;
            c.baseline[name] = uniform(rng, 0.1, 5.0);
        }
        std::vector<StructuralEquation> eqs;
        const int n_eq = pick(rng, 1, 5);
        std::string prev = "x";
        for (int i = 0; i < n_eq; ++i) {
            StructuralEquation eq;
            eq.output = "v" + std::to_string(i);
            const int comb = pick(rng, 0, 2);
            eq.combiner = comb == 0 ? StructuralEquation::Combiner::sum
                          : comb == 1 ? StructuralEquation::Combiner::min
                                      : StructuralEquation::Combiner::max;
            eq.bias = comb == 0 ? uniform(rng, 0.0, 1.0) : 0.0;
            std::vector<std::string> inputs{prev};
            for (const auto& v : vars) {
                if (v != prev && chance(rng, 0.3)) inputs.push_back(v);
            }
            bool out_positive = true;
            for (const auto& in : inputs) {
                Transform t;
                const bool pos_in = positive[in];
                const int tk = pick(rng, 0, pos_in ? 4 : 2);
                switch (tk) {
                    case 0: t = {Kind::linear, uniform(rng, 0.2, 3.0), 0.0, uniform(rng, 0.0, 1.0)}; break;
                    case 1: t = {Kind::linear, -uniform(rng, 0.2, 3.0), 0.0, uniform(rng, 0.0, 2.0)}; out_positive = false; break;
                    case 2: t = {Kind::exp_decay, uniform(rng, 0.5, 2.0), uniform(rng, 0.1, 1.0), uniform(rng, 0.0, 1.0)}; break;
                    case 3: t = {Kind::saturation, uniform(rng, 0.5, 2.0), uniform(rng, 0.5, 5.0), 0.0}; break;
                    default: t = {Kind::reciprocal, uniform(rng, 0.5, 2.0), uniform(rng, 0.2, 2.0), uniform(rng, 0.2, 2.0)};
                }
                eq.terms.push_back(Term{in, t, t.analytic_sign() < 0 ? -1 : 1});
            }
            positive[eq.output] = out_positive;
            vars.push_back(eq.output);
            prev = eq.output;
            eqs.push_back(std::move(eq));
        }
        c.goal = prev;
        try {
            c.scm = scm::build_scm(eqs);
        } catch (const goagentnet::Error&) {
            continue;
        }
        const double lo = uniform(rng, 0.1, 2.0);
        c.range = {lo, lo + uniform(rng, 0.05, 10.0)};
        auto at = [&](double v) {
            auto a = c.baseline;
            a["x"] = v;
            return scm::evaluate(c.scm, a).at(c.goal);
        };
        const double f_lo = at(c.range.first), f_hi = at(c.range.second);
        if (!(f_hi - f_lo > 1e-6)) continue;
        c.threshold = f_lo + uniform(rng, 0.05, 0.95) * (f_hi - f_lo);
        try {
            scm::derive_bound(c.scm, c.goal, c.threshold, c.target, c.range, c.baseline);
        } catch (const goagentnet::Error& e) {
            if (e.code() == goagentnet::Errc::NonMonotonePath) continue;
            throw;
        }
        return c;
    }
}

std::vector<std::uint8_t> read_hex(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<std::uint8_t> out;
    std::string tok;
    while (in >> tok) out.push_back(static_cast<std::uint8_t>(std::stoul(tok, nullptr, 16)));
    return out;
}

}  // namespace testsupport
