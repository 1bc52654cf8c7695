#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "generators.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "goagentnet");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = goagentnet::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("goagentnet_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name, std::ios::binary) << text;
        return file(name);
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json canonical_doc() { return json::parse(slurp(testsupport::canonical_config_path())); }

const std::string kConfig = testsupport::canonical_config_path();
const std::string kTemplate =
    "Achieve the highest task success rate for robotic FDR under a {bandwidth} bandwidth constraint.";

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("run prints a JSON report") {
        const auto r = cli({"run", "--config", kConfig, "--intent", testsupport::fdr_intent("5")});
        REQUIRE(r.code == 0);
        const auto doc = json::parse(r.out);
        CHECK(doc.at("arch") == "goagentnet");
        CHECK(doc.at("plan").at("representation") == "scene_graph");
        CHECK(doc.at("measured").at("t_e2e_s").get<double>() == doctest::Approx(0.508));
    }

    TEST_CASE("run --arch both carries the comparison") {
        const auto r = cli({"run", "--config", kConfig, "--intent", testsupport::fdr_intent("10"), "--arch", "both"});
        REQUIRE(r.code == 0);
        const auto doc = json::parse(r.out);
        CHECK(doc.at("baseline").at("arch") == "baseline");
        CHECK(doc.at("comparison").at("energy_reduction_pct").get<double>() == doctest::Approx(60.0));
    }

    TEST_CASE("run csv writes the comparison next to the output file") {
        TempDir dir;
        const auto out = dir.file("run.csv");
        const auto r = cli({"run", "--config", kConfig, "--intent", testsupport::fdr_intent("5"), "--arch", "both",
                            "--format", "csv", "--out", out});
        REQUIRE(r.code == 0);
        CHECK(r.out.empty());
        const auto rows = lines(slurp(out));
        REQUIRE(rows.size() == 3);
        CHECK(rows[0] == "bandwidth_hz,arch,representation,t_e2e,E_c,E_x,S,U");
        CHECK(rows[1].rfind("5000000,baseline,raw_point_cloud,8.2,8,0,", 0) == 0);
        CHECK(rows[2].rfind("5000000,goagentnet,scene_graph,", 0) == 0);
        const auto cmp = json::parse(slurp(out + ".comparison.json"));
        CHECK(cmp.at("energy_reduction_pct").get<double>() == doctest::Approx(99.9));
    }

    TEST_CASE("run reads the intent from a file") {
        TempDir dir;
        const auto intent = dir.write("intent.txt", testsupport::fdr_intent("100") + "\n");
        const auto r = cli({"run", "--config", kConfig, "--intent-file", intent, "--format", "csv"});
        REQUIRE(r.code == 0);
        CHECK(lines(r.out).at(1).rfind("100000000,goagentnet,edge_points,0.46", 0) == 0);
    }

    TEST_CASE("run exit codes") {
        CHECK(cli({"run", "--config", kConfig}).code == 1);
        CHECK(cli({"run", "--config", "/nonexistent.json", "--intent", testsupport::fdr_intent("5")}).code == 1);
        CHECK(cli({"run", "--config", kConfig, "--intent", "what is this"}).code == 1);
        CHECK(cli({"run", "--config", kConfig, "--intent", testsupport::fdr_intent("5"), "--arch", "quantum"}).code == 1);
        CHECK(cli({}).code == 1);

        TempDir dir;
        auto doc = canonical_doc();
        for (auto& a : doc["agents"]) {
            if (a["type"] == "communication") a["function_space"]["bandwidth_hz"] = {{"min", 1e9}, {"max", 2e9}};
        }
        const auto bad = dir.write("noplan.json", doc.dump());
        const auto r = cli({"run", "--config", bad, "--intent", testsupport::fdr_intent("5")});
        CHECK(r.code == 2);
        CHECK(r.err.find("NoFeasiblePlan") != std::string::npos);
    }

    TEST_CASE("sweep emits sorted rows for both architectures") {
        const auto r = cli({"sweep", "--config", kConfig, "--intent-template",
                            kTemplate,
                            "--bandwidths", "1e8, 5e6,1e7"});
        REQUIRE(r.code == 0);
        const auto rows = lines(r.out);
        REQUIRE(rows.size() == 7);
        CHECK(rows[1].rfind("5000000,baseline,", 0) == 0);
        CHECK(rows[2].rfind("5000000,goagentnet,", 0) == 0);
        CHECK(rows[3].rfind("10000000,baseline,", 0) == 0);
        CHECK(rows[6].rfind("100000000,goagentnet,edge_points,", 0) == 0);
    }

    TEST_CASE("sweep argument errors") {
        const std::string tmpl = kTemplate;
        CHECK(cli({"sweep", "--config", kConfig, "--intent-template", tmpl, "--bandwidths", ""}).code == 1);
        CHECK(cli({"sweep", "--config", kConfig, "--intent-template", tmpl, "--bandwidths", "5e6,abc"}).code == 1);
        CHECK(cli({"sweep", "--config", kConfig, "--intent-template", "no placeholder", "--bandwidths", "5e6"}).code == 1);
    }

    TEST_CASE("validate") {
        auto r = cli({"validate", "--config", kConfig});
        CHECK(r.code == 0);
        CHECK(r.out == "ok\n");

        TempDir dir;
        auto doc = canonical_doc();
        doc["edges"].push_back({{"from", 3}, {"to", 99}, {"kind", "interaction_link"}});
        r = cli({"validate", "--config", dir.write("dangling.json", doc.dump())});
        CHECK(r.code == 1);
        CHECK(r.out.find("99") != std::string::npos);

        r = cli({"validate", "--config", dir.write("broken.json", "{ not json")});
        CHECK(r.code == 1);
        CHECK(r.out.rfind("SchemaViolation", 0) == 0);

        CHECK(cli({"validate", "--config", dir.file("missing.json")}).code == 1);
    }

    TEST_CASE("graph exports stable DOT") {
        const auto a = cli({"graph", "--config", kConfig});
        const auto b = cli({"graph", "--config", kConfig});
        REQUIRE(a.code == 0);
        CHECK(a.out == b.out);
        CHECK(a.out.rfind("digraph", 0) == 0);
        std::size_t edges = 0;
        for (auto pos = a.out.find("->"); pos != std::string::npos; pos = a.out.find("->", pos + 2)) ++edges;
        CHECK(edges == 15);

        TempDir dir;
        auto doc = canonical_doc();
        doc["agents"] = json::array();
        doc["edges"] = json::array();
        CHECK(cli({"graph", "--config", dir.write("empty.json", doc.dump())}).code == 1);
    }
}
