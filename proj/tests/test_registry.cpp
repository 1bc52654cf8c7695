#include <doctest.h>

#include <algorithm>
#include <thread>

#include "check.hpp"
#include "generators.hpp"
#include "goagentnet/registry.hpp"

using namespace goagentnet;
using namespace goagentnet::registry;

namespace {

AgentId id(std::uint32_t v) { return AgentId{v}; }

void populate(Registry& reg) {
    const auto& g = testsupport::canonical().graph;
    for (const auto& [_, p] : g.nodes) reg.register_agent(p);
    for (const auto& e : g.edges) reg.add_edge(e.from, e.to, e.kind, e.attrs);
}

KnowledgeGraph canonical_snapshot() {
    Registry reg;
    populate(reg);
    return reg.snapshot();
}

std::vector<AgentId> ids(std::initializer_list<std::uint32_t> vs) {
    std::vector<AgentId> out;
    for (auto v : vs) out.push_back(id(v));
    return out;
}

}  // namespace

TEST_SUITE("registry") {
    TEST_CASE("registering the 11 FDR profiles emits seq 1..11") {
        Registry reg;
        std::uint64_t expected = 1;
        for (const auto& [_, p] : testsupport::canonical().graph.nodes) {
            const auto ev = reg.register_agent(p);
            CHECK(ev.seq == expected++);
            CHECK(ev.kind == EventKind::joined);
            CHECK(std::get<AgentProfile>(ev.payload) == p);
        }
        const auto snap = reg.snapshot();
        CHECK(snap.nodes.size() == 11);
        CHECK(snap.nodes.begin()->first == id(1));
        CHECK(snap.nodes.rbegin()->first == id(11));
        CHECK(reg.events_since(0).size() == 11);
    }

    TEST_CASE("singleton registration") {
        Registry reg;
        std::mt19937_64 rng(1);
        reg.register_agent(testsupport::random_profile(rng, id(42)));
        CHECK(reg.snapshot().nodes.size() == 1);
        CHECK(reg.snapshot().edges.empty());
    }

    TEST_CASE("duplicate id is rejected without an event") {
        Registry reg;
        std::mt19937_64 rng(2);
        const auto p = testsupport::random_profile(rng, id(1));
        reg.register_agent(p);
        CHECK_ERRC(reg.register_agent(p), Errc::DuplicateId);
        CHECK(reg.version() == 1);
        CHECK(reg.events_since(0).size() == 1);
    }

    TEST_CASE("invalid profiles") {
        Registry reg;
        AgentProfile p;
        p.id = id(1);
        p.tools.push_back({"t", "aux", {"", "", ""}, {"x", "", ""}, {}});
        CHECK_ERRC(reg.register_agent(p), Errc::InvalidProfile);
        p.tools[0].input_schema.kind = "x";
        p.tools[0].cost_model.energy_base_j = -1;
        CHECK_ERRC(reg.register_agent(p), Errc::InvalidProfile);
        CHECK(reg.version() == 0);
    }

    TEST_CASE("canonical graph has 13 interaction links plus 2 dependencies") {
        const auto g = canonical_snapshot();
        const auto links = std::count_if(g.edges.begin(), g.edges.end(),
                                         [](const Edge& e) { return e.kind == EdgeKind::interaction_link; });
        CHECK(links == 13);
        CHECK(g.edges.size() == 15);
        CHECK(g.has_edge(id(4), id(10), EdgeKind::capability_dependency));
        CHECK(g.has_edge(id(5), id(10), EdgeKind::capability_dependency));
        CHECK(g.successors(id(6)) == ids({7, 8, 9}));
        CHECK(g.successors(id(3)) == ids({4, 5}));
        CHECK_FALSE(g.has_edge(id(3), id(6), EdgeKind::interaction_link));
    }

    TEST_CASE("edge errors") {
        Registry reg;
        populate(reg);
        const auto v = reg.version();
        CHECK_ERRC(reg.add_edge(id(1), id(1), EdgeKind::interaction_link), Errc::SchemaViolation);
        CHECK_ERRC(reg.add_edge(id(1), id(2), EdgeKind::interaction_link), Errc::DuplicateEdge);
        CHECK_ERRC(reg.add_edge(id(1), id(99), EdgeKind::interaction_link), Errc::UnknownAgent);
        CHECK_ERRC(reg.remove_edge(id(1), id(3), EdgeKind::interaction_link), Errc::UnknownEdge);
        CHECK(reg.version() == v);
        // Same endpoints with another kind is a distinct edge.
        CHECK(reg.add_edge(id(1), id(2), EdgeKind::shared_knowledge).kind == EventKind::edge_added);
        CHECK(reg.remove_edge(id(1), id(2), EdgeKind::shared_knowledge).kind == EventKind::edge_removed);
    }

    TEST_CASE("deregister removes incident edges") {
        Registry reg;
        populate(reg);
        const auto ev = reg.deregister(id(4));
        CHECK(ev.kind == EventKind::left);
        const auto g = reg.snapshot();
        CHECK_FALSE(g.nodes.contains(id(4)));
        CHECK(g.successors(id(3)) == ids({5}));
        for (const auto& e : g.edges) CHECK((e.from != id(4) && e.to != id(4)));
        CHECK_ERRC(reg.deregister(id(4)), Errc::UnknownAgent);
    }

    TEST_CASE("deregister then register the same id") {
        Registry reg;
        populate(reg);
        const auto p = *reg.snapshot().node(id(4));
        const auto left = reg.deregister(id(4));
        const auto joined = reg.register_agent(p);
        CHECK(joined.seq == left.seq + 1);
        CHECK(reg.snapshot().node(id(4))->tools == p.tools);
    }

    TEST_CASE("update_state") {
        Registry reg;
        populate(reg);
        const auto before = reg.version();
        ProfileDelta half;
        half.resources["compute_ops_per_s"] = 0.5e12;
        const auto ev = reg.update_state(id(10), half);
        CHECK(ev.seq == before + 1);
        CHECK(ev.kind == EventKind::updated);
        CHECK(std::get<ProfileDelta>(ev.payload) == half);
        CHECK(reg.snapshot().node(id(10))->resources.at("compute_ops_per_s") == 0.5e12);

        ProfileDelta add;
        add.add_tools.push_back({"compress", "aux", {"*", "", ""}, {"*", "", ""}, {}});
        reg.update_state(id(6), add);
        QueryFilter f;
        f.capability_name = "compress";
        CHECK(reg.query(f) == ids({6}));

        ProfileDelta bad;
        bad.resources["warp_drive"] = 1;
        CHECK_ERRC(reg.update_state(id(6), bad), Errc::UnknownField);
        CHECK_ERRC(reg.update_state(id(99), half), Errc::UnknownAgent);
        ProfileDelta dup;
        dup.add_tools.push_back(reg.snapshot().node(id(6))->tools.front());
        CHECK_ERRC(reg.update_state(id(6), dup), Errc::InvalidProfile);
    }

    TEST_CASE("query") {
        Registry reg;
        populate(reg);
        QueryFilter comp;
        comp.agent_type = AgentType::computation;
        CHECK(reg.query(comp) == ids({2, 3, 4, 5, 10}));
        CHECK(reg.query({}) == ids({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}));
        QueryFilter sg;
        sg.capability_name = "extract_scene_graph";
        CHECK(reg.query(sg) == ids({4}));
        QueryFilter out;
        out.output_kind = "edge_points";
        CHECK(reg.query(out) == ids({5}));
        QueryFilter both;
        both.agent_type = AgentType::communication;
        both.capability_name = "extract_scene_graph";
        CHECK(reg.query(both).empty());
    }

    TEST_CASE("query is invariant to registration order") {
        const auto& nodes = testsupport::canonical().graph.nodes;
        std::vector<AgentProfile> profiles;
        for (const auto& [_, p] : nodes) profiles.push_back(p);
        std::mt19937_64 rng(3);
        QueryFilter comp;
        comp.agent_type = AgentType::computation;
        for (int i = 0; i < 10; ++i) {
            std::shuffle(profiles.begin(), profiles.end(), rng);
            Registry reg;
            for (const auto& p : profiles) reg.register_agent(p);
            CHECK(reg.query(comp) == ids({2, 3, 4, 5, 10}));
            CHECK(reg.query({}).size() == 11);
        }
    }

    TEST_CASE("fold of 11 join events equals the snapshot") {
        Registry reg;
        for (const auto& [_, p] : testsupport::canonical().graph.nodes) reg.register_agent(p);
        CHECK(fold_events({}, reg.events_since(0)) == reg.snapshot());
    }

    TEST_CASE("fold of nothing is the base") {
        const auto base = canonical_snapshot();
        CHECK(fold_events(base, {}) == base);
    }

    TEST_CASE("fold rejects gaps and reordering") {
        Registry reg;
        populate(reg);
        auto events = reg.events_since(0);
        std::swap(events[0], events[1]);
        CHECK_ERRC(fold_events({}, events), Errc::GapInEvents);
        CHECK_ERRC(fold_events({}, reg.events_since(3)), Errc::GapInEvents);
    }

    TEST_CASE("fold from an intermediate snapshot") {
        Registry reg;
        populate(reg);
        const auto mid = reg.snapshot();
        reg.deregister(id(9));
        reg.add_edge(id(2), id(5), EdgeKind::interaction_link);
        CHECK(fold_events(mid, reg.events_since(mid.version)) == reg.snapshot());
    }

    TEST_CASE("event JSON round-trip") {
        Registry reg;
        populate(reg);
        ProfileDelta d;
        d.resources["buffer_bits"] = 5;
        d.function_space["bandwidth_hz"] = NumericRange{0, 1e6, true};
        reg.update_state(id(7), d);
        reg.deregister(id(7));
        for (const auto& ev : reg.events_since(0)) CHECK(event_from_json(to_json(ev)) == ev);
    }

    TEST_CASE("events carry the registry clock") {
        Registry reg;
        std::mt19937_64 rng(4);
        reg.set_time(1.5);
        CHECK(reg.register_agent(testsupport::random_profile(rng, id(1))).timestamp == 1.5);
    }

    TEST_CASE("DOT export") {
        const auto dot = to_dot(canonical_snapshot());
        CHECK(dot.find("n1 [label=\"1:perceptual\"]") != std::string::npos);
        CHECK(dot.find("n4 -> n10 [label=\"capability_dependency\"]") != std::string::npos);
        CHECK(std::count(dot.begin(), dot.end(), '\n') == 1 + 11 + 15 + 1);
        CHECK(dot == to_dot(canonical_snapshot()));
    }

    TEST_CASE("random operation sequences fold to the snapshot") {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            std::mt19937_64 rng(seed);
            Registry reg;
            std::uniform_int_distribution<int> op(0, 5), pick_id(1, 8);
            for (int step = 0; step < 60; ++step) {
                const auto a = id(static_cast<std::uint32_t>(pick_id(rng)));
                const auto b = id(static_cast<std::uint32_t>(pick_id(rng)));
                const auto kind = static_cast<EdgeKind>(pick_id(rng) % 3);
                const auto before = reg.version();
                try {
                    switch (op(rng)) {
                        case 0:
                        case 1: reg.register_agent(testsupport::random_profile(rng, a)); break;
                        case 2: reg.deregister(a); break;
                        case 3: {
                            const auto snap = reg.snapshot();
                            reg.update_state(a, testsupport::random_delta(rng, snap.node(a)));
                            break;
                        }
                        case 4: reg.add_edge(a, b, kind); break;
                        default: reg.remove_edge(a, b, kind);
                    }
                } catch (const Error&) {
                    CHECK(reg.version() == before);
                }
            }
            const auto events = reg.events_since(0);
            for (std::size_t i = 0; i < events.size(); ++i) CHECK(events[i].seq == i + 1);
            CHECK(fold_events({}, events) == reg.snapshot());
        }
    }

    TEST_CASE("concurrent readers see consistent snapshots") {
        Registry reg;
        populate(reg);
        std::atomic<bool> done{false};
        std::atomic<int> bad{0};
        std::vector<std::thread> readers;
        for (int r = 0; r < 4; ++r) {
            readers.emplace_back([&] {
                while (!done) {
                    const auto snap = reg.snapshot();
                    for (const auto& e : snap.edges) {
                        if (!snap.nodes.contains(e.from) || !snap.nodes.contains(e.to)) ++bad;
                    }
                }
            });
        }
        const auto p9 = *reg.snapshot().node(id(9));
        for (int i = 0; i < 200; ++i) {
            reg.deregister(id(9));
            reg.register_agent(p9);
            reg.add_edge(id(6), id(9), EdgeKind::interaction_link);
            reg.add_edge(id(9), id(10), EdgeKind::interaction_link);
        }
        done = true;
        for (auto& t : readers) t.join();
        CHECK(bad == 0);
        CHECK(fold_events({}, reg.events_since(0)) == reg.snapshot());
    }
}
