#include "cli.hpp"

#include <algorithm>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "goagentnet/error.hpp"
#include "goagentnet/numfmt.hpp"
#include "goagentnet/protocol.hpp"
#include "goagentnet/scenario.hpp"

namespace goagentnet::cli {

namespace {

using nlohmann::json;

volatile std::sig_atomic_t g_interrupted = 0;

void configure_logging() {
    static const bool once = [] {
        auto logger = spdlog::stderr_color_mt("goagentnet");
        spdlog::set_default_logger(logger);
        spdlog::set_pattern("[%l] %v");
        const char* env = std::getenv("GOAGENTNET_LOG");
        const std::string level = env ? env : "error";
        spdlog::set_level(spdlog::level::from_str(level));
        return true;
    }();
    (void)once;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::SchemaViolation, "cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Writes to --out when given, otherwise to the supplied stream.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::SchemaViolation, "cannot write " + path);
    f << text;
}

std::string csv(const std::vector<scenario::RunReport>& rows) {
    std::string text = scenario::csv_header() + "\n";
    for (const auto& r : rows) text += scenario::csv_row(r) + "\n";
    return text;
}

std::vector<scenario::RunReport> run_archs(const scenario::Scenario& sc, const std::string& intent,
                                           const std::string& arch, std::uint64_t seed) {
    std::vector<scenario::RunReport> out;
    if (arch == "baseline" || arch == "both") out.push_back(scenario::run_baseline(sc, intent, seed));
    if (arch == "goagentnet" || arch == "both") out.push_back(scenario::run_goagentnet(sc, intent, seed));
    return out;
}

std::pair<std::string, std::uint16_t> split_address(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) throw Error(Errc::SchemaViolation, "--listen expects HOST:PORT");
    const int port = std::stoi(addr.substr(colon + 1));
    if (port < 0 || port > 65535) throw Error(Errc::SchemaViolation, "port out of range");
    return {addr.substr(0, colon), static_cast<std::uint16_t>(port)};
}

/// Serves the scenario's agents over TCP until SIGINT/SIGTERM.
void serve(const scenario::Scenario& sc, const std::string& task, const std::string& address, std::ostream& err) {
    registry::Registry reg;
    protocol::Bus bus(reg);
    const auto catalog = sc.knowledge.get_representations(task);
    for (const auto& [id, profile] : sc.graph.nodes) {
        bus.register_agent(profile);
        bus.attach(id, protocol::simulated_agent(catalog));
    }
    for (const auto& e : sc.graph.edges) reg.add_edge(e.from, e.to, e.kind, e.attrs);
    bus.flush();
    auto [host, port] = split_address(address);
    protocol::TcpServer server(bus, host, port);
    err << "listening on " << host << ":" << server.port() << "\n";
    std::signal(SIGINT, [](int) { g_interrupted = 1; });
    std::signal(SIGTERM, [](int) { g_interrupted = 1; });
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
}

int cmd_run(const std::string& config, std::string intent, const std::string& intent_file, const std::string& arch,
            std::uint64_t seed, const std::string& out_path, const std::string& format, const std::string& listen,
            std::ostream& out, std::ostream& err) {
    const auto sc = scenario::load_scenario_file(config);
    if (!intent_file.empty()) intent = read_file(intent_file);
    intent = trim(intent);
    const auto reports = run_archs(sc, intent, arch, seed);

    std::optional<scenario::ComparisonReport> comparison;
    if (arch == "both") comparison = scenario::compare(reports[1], reports[0]);

    if (format == "csv") {
        emit(out_path, csv(reports), out);
        if (comparison) {
            const std::string cmp = to_json(*comparison).dump(2) + "\n";
            if (out_path.empty()) {
                err << cmp;
            } else {
                emit(out_path + ".comparison.json", cmp, out);
            }
        }
    } else {
        json doc;
        if (arch == "both") {
            doc = {{"baseline", to_json(reports[0])},
                   {"goagentnet", to_json(reports[1])},
                   {"comparison", to_json(*comparison)}};
        } else {
            doc = to_json(reports.front());
        }
        emit(out_path, doc.dump(2) + "\n", out);
    }
    if (!listen.empty()) {
        serve(sc, scenario::parse_goal(intent, sc.templates).task_type, listen, err);
    }
    return kExitOk;
}

std::string substitute(std::string text, const std::string& key, const std::string& value) {
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
        text.replace(pos, key.size(), value);
    }
    return text;
}

int cmd_sweep(const std::string& config, const std::string& tmpl, const std::vector<double>& bandwidths,
              const std::string& arch, std::uint64_t seed, const std::string& out_path, std::ostream& out) {
    if (bandwidths.empty()) throw CLI::ValidationError("--bandwidths", "at least one bandwidth is required");
    if (tmpl.find("{bandwidth}") == std::string::npos) {
        throw CLI::ValidationError("--intent-template", "must contain the {bandwidth} placeholder");
    }
    const auto sc = scenario::load_scenario_file(config);

    // Each point runs on its own registry, bus and network model; results are merged in sorted order.
    std::vector<std::future<std::vector<scenario::RunReport>>> jobs;
    for (double b : bandwidths) {
        const auto intent = substitute(tmpl, "{bandwidth}", format_number(b) + "Hz");
        jobs.push_back(std::async(std::launch::async, [&sc, intent, arch, seed] { return run_archs(sc, intent, arch, seed); }));
    }
    std::vector<scenario::RunReport> rows;
    std::exception_ptr failure;
    for (auto& j : jobs) {
        try {
            for (auto& r : j.get()) rows.push_back(std::move(r));
        } catch (...) {
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        return std::tie(a.bandwidth_hz, a.arch) < std::tie(b.bandwidth_hz, b.arch);
    });
    emit(out_path, csv(rows), out);
    return kExitOk;
}

int cmd_validate(const std::string& config, std::ostream& out) {
    json doc;
    try {
        doc = json::parse(read_file(config));
    } catch (const json::exception& e) {
        out << "SchemaViolation: " << config << ": " << e.what() << "\n";
        return kExitConfig;
    }
    const auto findings = scenario::validate_scenario(doc);
    for (const auto& f : findings) out << f << "\n";
    if (findings.empty()) out << "ok\n";
    return findings.empty() ? kExitOk : kExitConfig;
}

int cmd_graph(const std::string& config, const std::string& out_path, std::ostream& out) {
    const auto sc = scenario::load_scenario_file(config);
    emit(out_path, registry::to_dot(sc.graph), out);
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    configure_logging();
    CLI::App app{"Goal-oriented agent network simulator"};
    app.require_subcommand(1);

    std::string config, intent, intent_file, arch = "goagentnet", out_path, format = "json", listen, tmpl, bw_list;
    std::uint64_t seed = 0;
    const std::vector<std::string> archs{"goagentnet", "baseline", "both"};

    auto* run = app.add_subcommand("run", "Run one intent through GoAgentNet and/or the baseline");
    run->add_option("--config", config, "Scenario config (JSON)")->required();
    auto* intent_opt = run->add_option("--intent", intent, "Intent text or structured intent JSON");
    auto* file_opt = run->add_option("--intent-file", intent_file, "File holding the intent");
    intent_opt->excludes(file_opt);
    run->add_option("--arch", arch, "goagentnet | baseline | both")->check(CLI::IsMember(archs));
    run->add_option("--seed", seed, "Simulation seed");
    run->add_option("--out", out_path, "Output file (default stdout)");
    run->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
    run->add_option("--listen", listen, "Serve the agent bus on HOST:PORT after the run");

    auto* sweep = app.add_subcommand("sweep", "Run an intent template over a list of bandwidths");
    sweep->add_option("--config", config, "Scenario config (JSON)")->required();
    sweep->add_option("--intent-template", tmpl, "Intent text with a {bandwidth} placeholder")->required();
    sweep->add_option("--bandwidths", bw_list, "Comma-separated bandwidths in Hz")->required();
    sweep->add_option("--arch", arch, "goagentnet | baseline | both")->check(CLI::IsMember(archs));
    sweep->add_option("--seed", seed, "Simulation seed");
    sweep->add_option("--out", out_path, "CSV output file (default stdout)");

    auto* validate = app.add_subcommand("validate", "Check a scenario config");
    validate->add_option("--config", config, "Scenario config (JSON)")->required();

    auto* graph = app.add_subcommand("graph", "Export the knowledge graph as DOT");
    graph->add_option("--config", config, "Scenario config (JSON)")->required();
    graph->add_option("--out", out_path, "DOT output file (default stdout)");

    try {
        app.parse(argc, argv);
        if (run->parsed()) {
            if (intent_opt->count() == 0 && file_opt->count() == 0) {
                throw CLI::RequiredError("--intent or --intent-file");
            }
            return cmd_run(config, intent, intent_file, arch, seed, out_path, format, listen, out, err);
        }
        if (sweep->parsed()) {
            if (!sweep->count("--arch")) arch = "both";
            std::vector<double> bandwidths;
            std::stringstream ss(bw_list);
            for (std::string item; std::getline(ss, item, ',');) {
                item = trim(item);
                if (item.empty()) continue;
                std::size_t used = 0;
                double v = 0;
                try {
                    v = std::stod(item, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used != item.size()) throw CLI::ValidationError("--bandwidths", "not a number: " + item);
                bandwidths.push_back(v);
            }
            return cmd_sweep(config, tmpl, bandwidths, arch, seed, out_path, out);
        }
        if (validate->parsed()) return cmd_validate(config, out);
        if (graph->parsed()) return cmd_graph(config, out_path, out);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == Errc::NoFeasiblePlan ? kExitNoPlan : kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}

}  // namespace goagentnet::cli
