#include "goagentnet/task_template.hpp"

#include <cmath>

#include "goagentnet/error.hpp"

namespace goagentnet {

void check_template(const TaskTemplate& tmpl) {
    if (tmpl.subtasks.empty()) throw Error(Errc::SchemaViolation, tmpl.task_type + ": no subtasks");
    double total = 0.0;
    for (const auto& s : tmpl.subtasks) {
        if (s.kpi_share < 0.0) throw Error(Errc::SchemaViolation, tmpl.task_type + ": negative kpi_share");
        total += s.kpi_share;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw Error(Errc::SchemaViolation, tmpl.task_type + ": kpi_shares must sum to 1");
    }
    // Listing order must be topological; that also rules out cycles.
    for (auto [before, after] : tmpl.precedence) {
        if (before >= tmpl.subtasks.size() || after >= tmpl.subtasks.size()) {
            throw Error(Errc::SchemaViolation, tmpl.task_type + ": precedence index out of range");
        }
        if (before >= after) {
            throw Error(Errc::SchemaViolation, tmpl.task_type + ": precedence is cyclic or out of order");
        }
    }
}

TaskTemplate make_chain_template(std::string task_type, std::vector<SubtaskTemplate> subtasks,
                                 std::vector<std::string> kpis) {
    TaskTemplate tmpl{std::move(task_type), std::move(subtasks), {}, std::move(kpis)};
    for (std::size_t i = 1; i < tmpl.subtasks.size(); ++i) tmpl.precedence.emplace_back(i - 1, i);
    return tmpl;
}

}  // namespace goagentnet
