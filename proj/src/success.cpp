#include "goagentnet/success.hpp"

#include <cmath>

#include "goagentnet/error.hpp"

namespace goagentnet::scenario {

double success_probability(double sufficiency, double t_e2e, double deadline_s, double decay_per_s) {
    if (t_e2e <= deadline_s) return sufficiency;
    return sufficiency * std::exp(-decay_per_s * (t_e2e - deadline_s));
}

double success_model(std::string_view representation, double t_e2e, const SuccessParams& params) {
    auto it = params.sufficiency.find(representation);
    if (it == params.sufficiency.end()) {
        throw Error(Errc::UnknownTask, "no sufficiency for representation " + std::string(representation));
    }
    return success_probability(it->second, t_e2e, params.deadline_s, params.decay_per_s);
}

}  // namespace goagentnet::scenario
