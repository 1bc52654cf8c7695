#include "goagentnet/intent.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <regex>
#include <set>
#include <tuple>

#include "goagentnet/error.hpp"
#include "goagentnet/numfmt.hpp"

namespace goagentnet::intent {

namespace {

struct UnitInfo {
    std::string_view name;
    double scale;
    std::string_view canonical;
};

constexpr UnitInfo kUnits[] = {
    {"hz", 1.0, "Hz"},     {"khz", 1e3, "Hz"},      {"mhz", 1e6, "Hz"},    {"ghz", 1e9, "Hz"},
    {"bit", 1.0, "bits"},  {"bits", 1.0, "bits"},   {"kbit", 1e3, "bits"}, {"mbit", 1e6, "bits"},
    {"gbit", 1e9, "bits"}, {"byte", 8.0, "bits"},   {"bytes", 8.0, "bits"}, {"s", 1.0, "s"},
    {"sec", 1.0, "s"},     {"ms", 1e-3, "s"},       {"us", 1e-6, "s"},     {"min", 60.0, "s"},
    {"j", 1.0, "J"},       {"mj", 1e-3, "J"},       {"kj", 1e3, "J"},      {"", 1.0, "1"},
};

std::string_view unit_suffix(std::string_view canonical) {
    if (canonical == "Hz") return "hz";
    if (canonical == "bits") return "bits";
    if (canonical == "s") return "s";
    if (canonical == "J") return "j";
    return "";
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string snake(std::string_view s) {
    std::string out;
    bool pending = false;
    for (unsigned char c : s) {
        if (std::isalnum(c)) {
            if (pending && !out.empty()) out.push_back('_');
            pending = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            pending = true;
        }
    }
    return out;
}

std::string kpi_name(std::string_view phrase) {
    static const std::map<std::string, std::string, std::less<>> aliases = {
        {"task success rate", "success_rate"},
        {"success rate", "success_rate"},
        {"latency", "latency_s"},
        {"end-to-end latency", "latency_s"},
        {"energy efficiency", "energy_efficiency"},
    };
    auto key = lower(phrase);
    if (auto it = aliases.find(key); it != aliases.end()) return it->second;
    return snake(key);
}

bool is_physical(const Quantity& q) { return q.unit != "1"; }

double parse_double(const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw Error(Errc::SchemaViolation, "bad number '" + s + "'");
    }
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::optional<Relation> parse_relation(std::string_view s) {
    if (s == "<=" || s == "le") return Relation::le;
    if (s == ">=" || s == "ge") return Relation::ge;
    if (s == "=" || s == "==" || s == "eq") return Relation::eq;
    return std::nullopt;
}

std::optional<Direction> parse_direction(std::string_view s) {
    if (s == "maximize") return Direction::maximize;
    if (s == "minimize") return Direction::minimize;
    return std::nullopt;
}

Goal parse_pattern(const std::string& body) {
    // "Achieve the highest <kpi> for <task> under a <N><unit> <quantity> constraint."
    static const std::regex pattern(
        R"(^\s*achieve\s+the\s+(highest|lowest)\s+(.+?)\s+for\s+(.+?)\s+(under|above)\s+an?\s+)"
        R"(([0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?)\s*([A-Za-z]*)\s+([A-Za-z][A-Za-z _-]*?)\s+constraint\s*\.?\s*$)",
        std::regex::icase | std::regex::ECMAScript);
    std::smatch m;
    if (!std::regex_match(body, m, pattern)) {
        throw Error(Errc::UnrecognizedTemplate, "no intent template matches: " + body);
    }
    Goal goal;
    goal.task_type = snake(m[3].str());
    goal.kpis.push_back(Kpi{kpi_name(m[2].str()),
                            lower(m[1].str()) == "highest" ? Direction::maximize : Direction::minimize,
                            std::nullopt});
    auto q = canonicalize(parse_double(m[5].str()), m[6].str());
    if (!q) throw Error(Errc::UnrecognizedTemplate, "unknown unit '" + m[6].str() + "'");
    std::string quantity = snake(m[7].str());
    if (auto suffix = unit_suffix(q->unit); !suffix.empty()) quantity += "_" + std::string(suffix);
    goal.constraints.push_back(
        Constraint{quantity, lower(m[4].str()) == "under" ? Relation::le : Relation::ge, *q});
    return goal;
}

Quantity quantity_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("value") || !doc["value"].is_number()) {
        throw Error(Errc::SchemaViolation, "quantity needs numeric 'value'");
    }
    std::string unit = doc.value("unit", "");
    auto q = canonicalize(doc["value"].get<double>(), unit);
    if (!q) throw Error(Errc::SchemaViolation, "unknown unit '" + unit + "'");
    return *q;
}

}  // namespace

std::string_view to_string(Direction d) noexcept {
    return d == Direction::maximize ? "maximize" : "minimize";
}

std::string_view to_string(Relation r) noexcept {
    switch (r) {
        case Relation::le: return "<=";
        case Relation::ge: return ">=";
        case Relation::eq: return "=";
    }
    return "?";
}

std::string_view to_string(FindingKind k) noexcept {
    switch (k) {
        case FindingKind::UnknownTask: return "UnknownTask";
        case FindingKind::UnknownKpi: return "UnknownKpi";
        case FindingKind::InfeasibleConstraint: return "InfeasibleConstraint";
        case FindingKind::InvalidTradeoff: return "InvalidTradeoff";
    }
    return "?";
}

std::optional<Quantity> canonicalize(double value, std::string_view unit) {
    auto key = lower(unit);
    for (const auto& u : kUnits) {
        if (u.name == key) return Quantity{value * u.scale, std::string(u.canonical)};
    }
    // Already-canonical spellings.
    for (const auto& u : kUnits) {
        if (u.canonical == unit) return Quantity{value, std::string(u.canonical)};
    }
    return std::nullopt;
}

std::optional<double> Goal::upper_bound(std::string_view quantity) const {
    for (const auto& c : constraints) {
        if (c.quantity == quantity && (c.relation == Relation::le || c.relation == Relation::eq)) {
            return c.value.value;
        }
    }
    return std::nullopt;
}

Goal canonical(Goal goal) {
    std::sort(goal.kpis.begin(), goal.kpis.end(),
              [](const Kpi& a, const Kpi& b) { return a.name < b.name; });
    std::sort(goal.constraints.begin(), goal.constraints.end(), [](const Constraint& a, const Constraint& b) {
        return std::tie(a.quantity, a.relation, a.value.value, a.value.unit) <
               std::tie(b.quantity, b.relation, b.value.value, b.value.unit);
    });
    return goal;
}

bool operator==(const Goal& a, const Goal& b) {
    auto ca = canonical(a);
    auto cb = canonical(b);
    return ca.task_type == cb.task_type && ca.kpis == cb.kpis && ca.constraints == cb.constraints &&
           ca.tradeoffs == cb.tradeoffs;
}

Goal parse_intent(const IntentSpec& spec) {
    if (spec.body.empty()) throw Error(Errc::SchemaViolation, "empty intent body");
    if (spec.source_kind == SourceKind::pattern_text) return canonical(parse_pattern(spec.body));

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(spec.body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::SchemaViolation, std::string("structured intent: ") + e.what());
    }
    return goal_from_json(doc);
}

Goal goal_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw Error(Errc::SchemaViolation, "structured intent must be an object");
    if (!doc.contains("task_type") || !doc["task_type"].is_string() ||
        doc["task_type"].get<std::string>().empty()) {
        throw Error(Errc::SchemaViolation, "structured intent missing task_type");
    }
    Goal goal;
    goal.task_type = doc["task_type"].get<std::string>();

    std::set<std::string> seen;
    for (const auto& k : doc.value("kpis", nlohmann::json::array())) {
        Kpi kpi;
        kpi.name = k.at("name").get<std::string>();
        auto dir = parse_direction(k.value("direction", "maximize"));
        if (!dir) throw Error(Errc::SchemaViolation, "bad KPI direction for " + kpi.name);
        kpi.direction = *dir;
        if (k.contains("target")) {
            kpi.target = quantity_from_json(k["target"]);
            if (!std::isfinite(kpi.target->value)) {
                throw Error(Errc::SchemaViolation, "non-finite KPI target for " + kpi.name);
            }
        }
        if (!seen.insert(kpi.name).second) throw Error(Errc::SchemaViolation, "duplicate KPI " + kpi.name);
        goal.kpis.push_back(std::move(kpi));
    }

    for (const auto& c : doc.value("constraints", nlohmann::json::array())) {
        Constraint con;
        con.quantity = c.at("quantity").get<std::string>();
        auto rel = parse_relation(c.value("relation", "<="));
        if (!rel) throw Error(Errc::SchemaViolation, "bad relation for " + con.quantity);
        con.relation = *rel;
        con.value = quantity_from_json(c);
        goal.constraints.push_back(std::move(con));
    }

    double total = 0.0;
    const auto tradeoffs_doc = doc.value("tradeoffs", nlohmann::json::object());
    for (const auto& [name, w] : tradeoffs_doc.items()) {
        double weight = w.get<double>();
        if (!(weight >= 0.0) || !std::isfinite(weight)) {
            throw Error(Errc::SchemaViolation, "negative trade-off weight for " + name);
        }
        goal.tradeoffs[name] = weight;
        total += weight;
    }
    if (!goal.tradeoffs.empty()) {
        if (total <= 0.0) throw Error(Errc::SchemaViolation, "trade-off weights sum to zero");
        for (auto& [_, w] : goal.tradeoffs) w /= total;
    }
    return canonical(std::move(goal));
}

nlohmann::json to_json(const Goal& goal) {
    nlohmann::json doc;
    doc["task_type"] = goal.task_type;
    doc["kpis"] = nlohmann::json::array();
    for (const auto& k : goal.kpis) {
        nlohmann::json j{{"name", k.name}, {"direction", to_string(k.direction)}};
        if (k.target) j["target"] = {{"value", k.target->value}, {"unit", k.target->unit}};
        doc["kpis"].push_back(std::move(j));
    }
    doc["constraints"] = nlohmann::json::array();
    for (const auto& c : goal.constraints) {
        doc["constraints"].push_back({{"quantity", c.quantity},
                                      {"relation", to_string(c.relation)},
                                      {"value", c.value.value},
                                      {"unit", c.value.unit}});
    }
    doc["tradeoffs"] = nlohmann::json::object();
    for (const auto& [name, w] : goal.tradeoffs) doc["tradeoffs"][name] = w;
    return doc;
}

GoalRecord encode_goal(const Goal& goal) {
    const std::string subject = "goal:" + goal.task_type;
    GoalRecord record;
    record.triples.push_back({subject, "hasTaskType", goal.task_type});
    for (const auto& k : goal.kpis) {
        std::string object = k.name + ";" + std::string(to_string(k.direction));
        if (k.target) object += ";" + format_number(k.target->value) + ";" + k.target->unit;
        record.triples.push_back({subject, "hasKpi", std::move(object)});
    }
    for (const auto& c : goal.constraints) {
        record.triples.push_back({subject, "hasConstraint",
                                  c.quantity + ";" + std::string(to_string(c.relation)) + ";" +
                                      format_number(c.value.value) + ";" + c.value.unit});
    }
    for (const auto& [name, w] : goal.tradeoffs) {
        record.triples.push_back({subject, "hasTradeoff", name + ";" + format_number(w)});
    }
    std::sort(record.triples.begin(), record.triples.end(), [](const Triple& a, const Triple& b) {
        return std::tie(a.predicate, a.object) < std::tie(b.predicate, b.object);
    });
    return record;
}

Goal decode_goal(const GoalRecord& record) {
    Goal goal;
    bool have_task = false;
    for (const auto& t : record.triples) {
        auto parts = split(t.object, ';');
        if (t.predicate == "hasTaskType") {
            goal.task_type = t.object;
            have_task = true;
        } else if (t.predicate == "hasKpi" && (parts.size() == 2 || parts.size() == 4)) {
            auto dir = parse_direction(parts[1]);
            if (!dir) throw Error(Errc::SchemaViolation, "bad KPI triple " + t.object);
            Kpi kpi{parts[0], *dir, std::nullopt};
            if (parts.size() == 4) kpi.target = Quantity{parse_double(parts[2]), parts[3]};
            goal.kpis.push_back(std::move(kpi));
        } else if (t.predicate == "hasConstraint" && parts.size() == 4) {
            auto rel = parse_relation(parts[1]);
            if (!rel) throw Error(Errc::SchemaViolation, "bad constraint triple " + t.object);
            goal.constraints.push_back({parts[0], *rel, Quantity{parse_double(parts[2]), parts[3]}});
        } else if (t.predicate == "hasTradeoff" && parts.size() == 2) {
            goal.tradeoffs[parts[0]] = parse_double(parts[1]);
        } else {
            throw Error(Errc::SchemaViolation, "unrecognized triple " + t.predicate + " " + t.object);
        }
    }
    if (!have_task) throw Error(Errc::SchemaViolation, "goal record has no hasTaskType triple");
    return canonical(std::move(goal));
}

ValidationReport validate_goal(const Goal& goal, const TaskTemplateSet& templates) {
    ValidationReport report;
    if (!templates.contains(goal.task_type)) {
        report.findings.push_back({FindingKind::UnknownTask, goal.task_type});
    }

    std::set<std::string, std::less<>> known_kpis;
    for (const auto& [_, tmpl] : templates) known_kpis.insert(tmpl.kpis.begin(), tmpl.kpis.end());
    for (const auto& k : goal.kpis) {
        if (!known_kpis.contains(k.name)) report.findings.push_back({FindingKind::UnknownKpi, k.name});
    }

    std::map<std::string, double> upper;
    std::map<std::string, double> lower_b;
    for (const auto& c : goal.constraints) {
        const auto& v = c.value.value;
        if (!std::isfinite(v) || (is_physical(c.value) && v <= 0.0)) {
            report.findings.push_back({FindingKind::InfeasibleConstraint,
                                       c.quantity + " " + std::string(to_string(c.relation)) + " " +
                                           format_number(v)});
            continue;
        }
        if (c.relation != Relation::ge) {
            auto [it, fresh] = upper.emplace(c.quantity, v);
            if (!fresh) it->second = std::min(it->second, v);
        }
        if (c.relation != Relation::le) {
            auto [it, fresh] = lower_b.emplace(c.quantity, v);
            if (!fresh) it->second = std::max(it->second, v);
        }
    }
    for (const auto& [q, lo] : lower_b) {
        if (auto it = upper.find(q); it != upper.end() && lo > it->second) {
            report.findings.push_back({FindingKind::InfeasibleConstraint, q + " has empty feasible range"});
        }
    }

    if (!goal.tradeoffs.empty()) {
        double total = 0.0;
        for (const auto& [name, w] : goal.tradeoffs) {
            total += w;
            bool named = std::any_of(goal.kpis.begin(), goal.kpis.end(),
                                     [&](const Kpi& k) { return k.name == name; });
            if (w < 0.0 || w > 1.0 || !named) {
                report.findings.push_back({FindingKind::InvalidTradeoff, name});
            }
        }
        if (std::abs(total - 1.0) > 1e-9) {
            report.findings.push_back({FindingKind::InvalidTradeoff, "weights sum to " + format_number(total)});
        }
    }
    return report;
}

}  // namespace goagentnet::intent
