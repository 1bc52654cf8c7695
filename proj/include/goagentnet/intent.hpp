#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "goagentnet/task_template.hpp"

namespace goagentnet::intent {

enum class SourceKind { structured, pattern_text };

struct IntentSpec {
    SourceKind source_kind = SourceKind::pattern_text;
    std::string body;
};

enum class Direction { maximize, minimize };
enum class Relation { le, ge, eq };

std::string_view to_string(Direction d) noexcept;
std::string_view to_string(Relation r) noexcept;

struct Quantity {
    double value = 0.0;
    /// Canonical unit: Hz, bits, s, J, or "1" for dimensionless.
    std::string unit;

    bool operator==(const Quantity&) const = default;
};

struct Kpi {
    std::string name;
    Direction direction = Direction::maximize;
    std::optional<Quantity> target;

    bool operator==(const Kpi&) const = default;
};

struct Constraint {
    std::string quantity;
    Relation relation = Relation::le;
    Quantity value;

    bool operator==(const Constraint&) const = default;
};

struct Goal {
    std::string task_type;
    std::vector<Kpi> kpis;
    std::vector<Constraint> constraints;
    std::map<std::string, double> tradeoffs;

    /// Upper bound from the first `quantity <= v` constraint, if any.
    std::optional<double> upper_bound(std::string_view quantity) const;
};

/// Sorts KPIs by name and constraints by (quantity, relation, value).
Goal canonical(Goal goal);

/// Order-insensitive over KPI and constraint lists.
bool operator==(const Goal& a, const Goal& b);

struct Triple {
    std::string subject;
    std::string predicate;
    std::string object;

    bool operator==(const Triple&) const = default;
};

struct GoalRecord {
    std::vector<Triple> triples;

    bool operator==(const GoalRecord&) const = default;
};

Goal parse_intent(const IntentSpec& spec);
GoalRecord encode_goal(const Goal& goal);
Goal decode_goal(const GoalRecord& record);

enum class FindingKind { UnknownTask, UnknownKpi, InfeasibleConstraint, InvalidTradeoff };
std::string_view to_string(FindingKind k) noexcept;

struct Finding {
    FindingKind kind;
    std::string detail;
};

struct ValidationReport {
    std::vector<Finding> findings;
    bool clean() const { return findings.empty(); }
};

ValidationReport validate_goal(const Goal& goal, const TaskTemplateSet& templates);

/// Converts `value` in `unit` (e.g. "MHz") to its canonical unit.
/// Returns nullopt for unknown units.
std::optional<Quantity> canonicalize(double value, std::string_view unit);

nlohmann::json to_json(const Goal& goal);
/// Structured-intent document: task_type, kpis[], constraints[], tradeoffs{}.
Goal goal_from_json(const nlohmann::json& doc);

}  // namespace goagentnet::intent
