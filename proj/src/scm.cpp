#include "goagentnet/scm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "goagentnet/error.hpp"

namespace goagentnet::scm {

namespace {

constexpr int kSignSamples = 64;

int sign_of(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

// Sampled monotonicity: every consecutive step must move in the declared direction (or stay flat).
bool sampled_consistent(const Transform& t, int declared, std::pair<double, double> domain) {
    auto [lo, hi] = domain;
    double prev = t.apply(lo);
    for (int i = 1; i <= kSignSamples; ++i) {
        double x = lo + (hi - lo) * i / kSignSamples;
        double cur = t.apply(x);
        if (!std::isfinite(cur)) return false;
        if (declared > 0 && cur < prev) return false;
        if (declared < 0 && cur > prev) return false;
        prev = cur;
    }
    return true;
}

}  // namespace

double Transform::apply(double x) const {
    switch (kind) {
        case Kind::linear: return scale * x + offset;
        case Kind::saturation: return scale * x / (x + rate);
        case Kind::exp_decay: return scale * std::exp(-rate * x) + offset;
        case Kind::reciprocal: return scale / (offset + rate * x);
    }
    return 0.0;
}

int Transform::analytic_sign() const {
    switch (kind) {
        case Kind::linear:
        case Kind::saturation: return sign_of(scale);
        case Kind::exp_decay:
        case Kind::reciprocal: return -sign_of(scale) * sign_of(rate);
    }
    return 0;
}

double StructuralEquation::evaluate(const Assignment& values) const {
    auto input = [&](const Term& t) { return t.transform.apply(values.find(t.input)->second); };
    switch (combiner) {
        case Combiner::sum: {
            double acc = bias;
            for (const auto& t : terms) acc += input(t);
            return acc;
        }
        case Combiner::min: {
            double acc = std::numeric_limits<double>::infinity();
            for (const auto& t : terms) acc = std::min(acc, input(t));
            return terms.empty() ? bias : acc;
        }
        case Combiner::max: {
            double acc = -std::numeric_limits<double>::infinity();
            for (const auto& t : terms) acc = std::max(acc, input(t));
            return terms.empty() ? bias : acc;
        }
    }
    return bias;
}

bool Scm::has_variable(std::string_view var) const {
    if (index_.contains(var) || exogenous_.contains(var)) return true;
    return false;
}

const StructuralEquation* Scm::equation_for(std::string_view var) const {
    auto it = index_.find(var);
    return it == index_.end() ? nullptr : &equations_[it->second];
}

Scm build_scm(std::vector<StructuralEquation> equations) {
    Scm scm;
    for (std::size_t i = 0; i < equations.size(); ++i) {
        if (!scm.index_.emplace(equations[i].output, i).second) {
            throw Error(Errc::DuplicateDefinition, equations[i].output);
        }
    }
    for (const auto& eq : equations) {
        for (const auto& t : eq.terms) {
            if (t.sign != 1 && t.sign != -1) {
                throw Error(Errc::NonMonotonePath, eq.output + ": sign must be +1 or -1");
            }
            if (!sampled_consistent(t.transform, t.sign, eq.domain)) {
                throw Error(Errc::NonMonotonePath,
                            eq.output + ": declared sign disagrees with transform of " + t.input);
            }
            if (!scm.index_.contains(t.input)) scm.exogenous_.insert(t.input);
        }
    }

    // Depth-first topological sort; grey marks detect back edges.
    enum class Mark { white, grey, black };
    std::map<std::string, Mark, std::less<>> mark;
    std::vector<std::string> order;
    auto visit = [&](auto&& self, const std::string& var) -> void {
        auto it = scm.index_.find(var);
        if (it == scm.index_.end()) return;
        auto& m = mark[var];
        if (m == Mark::black) return;
        if (m == Mark::grey) throw Error(Errc::CycleDetected, "cycle through " + var);
        m = Mark::grey;
        for (const auto& t : equations[it->second].terms) self(self, t.input);
        mark[var] = Mark::black;
        order.push_back(var);
    };
    for (const auto& eq : equations) visit(visit, eq.output);

    scm.equations_ = std::move(equations);
    scm.topo_order_ = std::move(order);
    return scm;
}

Assignment evaluate(const Scm& scm, const Assignment& assignment) {
    Assignment values;
    for (const auto& var : scm.exogenous()) {
        auto it = assignment.find(var);
        if (it == assignment.end()) throw Error(Errc::MissingExogenous, var);
        values.emplace(var, it->second);
    }
    for (const auto& var : scm.topo_order()) values[var] = scm.equation_for(var)->evaluate(values);
    return values;
}

Scm intervene(const Scm& scm, std::string_view var, double value) {
    if (!scm.has_variable(var)) throw Error(Errc::UnknownVariable, std::string(var));
    auto equations = scm.equations();
    StructuralEquation constant{std::string(var), StructuralEquation::Combiner::sum, value, {}, {0.0, 1.0}};
    auto it = std::find_if(equations.begin(), equations.end(),
                           [&](const StructuralEquation& e) { return e.output == var; });
    if (it != equations.end()) {
        *it = std::move(constant);
    } else {
        equations.push_back(std::move(constant));
    }
    return build_scm(std::move(equations));
}

double derive_bound(const Scm& scm, std::string_view goal_var, double threshold, std::string_view target_var,
                    std::pair<double, double> range, const Assignment& baseline) {
    if (!scm.has_variable(goal_var)) throw Error(Errc::UnknownVariable, std::string(goal_var));
    if (!scm.has_variable(target_var)) throw Error(Errc::UnknownVariable, std::string(target_var));
    auto [lo, hi] = range;
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
        throw Error(Errc::SchemaViolation, "search range must be finite and ordered");
    }

    // Path signs from target to every downstream variable: bit0 = some positive path, bit1 = negative.
    std::map<std::string, unsigned, std::less<>> path_signs{{std::string(target_var), 1u}};
    for (const auto& var : scm.topo_order()) {
        if (var == target_var) continue;
        unsigned acc = 0;
        for (const auto& t : scm.equation_for(var)->terms) {
            auto it = path_signs.find(t.input);
            if (it == path_signs.end()) continue;
            unsigned s = it->second;
            acc |= t.sign > 0 ? s : (((s & 1u) << 1) | ((s & 2u) >> 1));
        }
        if (acc != 0) path_signs[var] = acc;
    }
    if (auto it = path_signs.find(goal_var); it != path_signs.end() && (it->second & 2u)) {
        throw Error(Errc::NonMonotonePath, std::string(goal_var) + " is not non-decreasing in " +
                                               std::string(target_var));
    }

    auto goal_at = [&](double v) {
        return evaluate(intervene(scm, target_var, v), baseline).find(goal_var)->second;
    };
    if (goal_at(lo) >= threshold) return lo;
    if (goal_at(hi) < threshold) {
        throw Error(Errc::Unsatisfiable, std::string(goal_var) + " cannot reach threshold in range");
    }
    const double tol = kBoundTolerance * (hi - lo);
    while (hi - lo > tol) {
        double mid = lo + (hi - lo) / 2;
        if (goal_at(mid) >= threshold) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

std::vector<StructuralEquation> equations_from_json(const nlohmann::json& doc) {
    using Kind = Transform::Kind;
    auto transform_from = [](const nlohmann::json& j, Kind kind) {
        Transform t{kind, j.value("scale", 1.0), 0.0, 0.0};
        switch (kind) {
            case Kind::linear: t.scale = j.value("weight", j.value("scale", 1.0)); t.offset = j.value("offset", 0.0); break;
            case Kind::saturation: t.rate = j.value("half", 1.0); break;
            case Kind::exp_decay: t.rate = j.value("rate", 1.0); t.offset = j.value("offset", 0.0); break;
            case Kind::reciprocal: t.rate = j.value("rate", 1.0); t.offset = j.value("offset", 1.0); break;
        }
        return t;
    };
    auto kind_of = [](const std::string& name) -> std::optional<Kind> {
        if (name == "linear") return Kind::linear;
        if (name == "saturation") return Kind::saturation;
        if (name == "exp-decay") return Kind::exp_decay;
        if (name == "reciprocal") return Kind::reciprocal;
        return std::nullopt;
    };
    auto make_term = [](std::string input, Transform t, const nlohmann::json& j) {
        int sign = j.value("sign", t.analytic_sign() < 0 ? -1 : 1);
        return Term{std::move(input), t, sign};
    };

    std::vector<StructuralEquation> out;
    for (const auto& e : doc) {
        StructuralEquation eq;
        eq.output = e.at("output").get<std::string>();
        if (e.contains("domain")) eq.domain = {e["domain"].at(0).get<double>(), e["domain"].at(1).get<double>()};
        const auto kind = e.at("kind").get<std::string>();
        if (kind == "constant") {
            eq.bias = e.at("value").get<double>();
        } else if (kind == "linear") {
            eq.bias = e.value("bias", 0.0);
            for (const auto& in : e.at("inputs")) {
                eq.terms.push_back(make_term(in.at("var").get<std::string>(), transform_from(in, Kind::linear), in));
            }
        } else if (kind == "min" || kind == "max") {
            eq.combiner = kind == "min" ? StructuralEquation::Combiner::min : StructuralEquation::Combiner::max;
            for (const auto& in : e.at("inputs")) {
                Transform t{};
                if (in.contains("transform")) {
                    auto tk = kind_of(in["transform"].at("kind").get<std::string>());
                    if (!tk) throw Error(Errc::SchemaViolation, eq.output + ": unknown transform kind");
                    t = transform_from(in["transform"], *tk);
                }
                eq.terms.push_back(make_term(in.at("var").get<std::string>(), t, in));
            }
        } else if (auto tk = kind_of(kind)) {
            eq.terms.push_back(make_term(e.at("input").get<std::string>(), transform_from(e, *tk), e));
        } else {
            throw Error(Errc::SchemaViolation, eq.output + ": unknown equation kind '" + kind + "'");
        }
        out.push_back(std::move(eq));
    }
    return out;
}

}  // namespace goagentnet::scm
