#pragma once

#include <map>
#include <string>

namespace goagentnet::scenario {

/// Task-success model: S = s_r * g(t), g(t) = 1 for t <= D, exp(-lambda (t - D)) beyond the deadline.
struct SuccessParams {
    double deadline_s = 2.0;
    double decay_per_s = 1.0;
    /// Sufficiency per representation name.
    std::map<std::string, double, std::less<>> sufficiency;
};

double success_probability(double sufficiency, double t_e2e, double deadline_s, double decay_per_s);

/// Throws Error(UnknownTask) when the representation has no sufficiency entry.
double success_model(std::string_view representation, double t_e2e, const SuccessParams& params);

}  // namespace goagentnet::scenario
