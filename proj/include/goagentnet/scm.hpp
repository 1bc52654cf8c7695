#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace goagentnet::scm {

using Assignment = std::map<std::string, double, std::less<>>;

/// Monotone scalar map applied to one input before combination.
///   linear:      scale * x + offset
///   saturation:  scale * x / (x + rate)        (x >= 0, rate > 0)
///   exp_decay:   scale * exp(-rate * x) + offset
///   reciprocal:  scale / (offset + rate * x)   (denominator > 0 on the domain)
struct Transform {
    enum class Kind { linear, saturation, exp_decay, reciprocal };
    Kind kind = Kind::linear;
    double scale = 1.0;
    double rate = 0.0;
    double offset = 0.0;

    double apply(double x) const;
    /// +1, -1, or 0 (constant) from the parameters.
    int analytic_sign() const;

    bool operator==(const Transform&) const = default;
};

struct Term {
    std::string input;
    Transform transform;
    /// Declared monotonicity of the equation in this input: +1 or -1.
    int sign = +1;

    bool operator==(const Term&) const = default;
};

struct StructuralEquation {
    enum class Combiner { sum, min, max };

    std::string output;
    Combiner combiner = Combiner::sum;
    /// Added to the sum; ignored by min/max. An equation with no terms is the constant `bias`.
    double bias = 0.0;
    std::vector<Term> terms;
    /// Input domain on which declared signs are sampled.
    std::pair<double, double> domain{0.0, 100.0};

    double evaluate(const Assignment& values) const;

    bool operator==(const StructuralEquation&) const = default;
};

/// Immutable after construction; see build_scm.
class Scm {
public:
    const std::vector<StructuralEquation>& equations() const { return equations_; }
    const std::set<std::string, std::less<>>& exogenous() const { return exogenous_; }
    /// Endogenous variables in evaluation order.
    const std::vector<std::string>& topo_order() const { return topo_order_; }
    bool has_variable(std::string_view var) const;
    const StructuralEquation* equation_for(std::string_view var) const;

private:
    friend Scm build_scm(std::vector<StructuralEquation> equations);

    std::vector<StructuralEquation> equations_;
    std::map<std::string, std::size_t, std::less<>> index_;
    std::set<std::string, std::less<>> exogenous_;
    std::vector<std::string> topo_order_;
};

/// Throws CycleDetected, DuplicateDefinition, or NonMonotonePath when a declared sign
/// disagrees with the sampled behaviour of its transform.
Scm build_scm(std::vector<StructuralEquation> equations);

/// Assignments for endogenous variables are ignored; missing exogenous -> MissingExogenous.
Assignment evaluate(const Scm& scm, const Assignment& assignment);

/// do(var = value).
Scm intervene(const Scm& scm, std::string_view var, double value);

/// Smallest v in `range` with evaluate(do(target=v), baseline)[goal] >= threshold.
double derive_bound(const Scm& scm, std::string_view goal_var, double threshold, std::string_view target_var,
                    std::pair<double, double> range, const Assignment& baseline);

/// Bisection stops once the bracket is narrower than this fraction of the range width.
inline constexpr double kBoundTolerance = 1e-6;

std::vector<StructuralEquation> equations_from_json(const nlohmann::json& doc);

}  // namespace goagentnet::scm
