#include "dvdf/env/behavior.hpp"

#include "dvdf/core/errors.hpp"
#include "dvdf/core/solve.hpp"

namespace dvdf {

namespace {

constexpr double kExpertTol = 1e-11;

void check_epsilon(double eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw InvalidInput("behavior: epsilon outside [0, 1]");
}

PolicyTable medium_policy(const TabularMDP& mdp, const PolicyTable& expert, const BehaviorSpec& spec) {
    double eps = kMediumEpsilon;
    if (spec.calibrate) eps = calibrate_medium_epsilon(mdp);
    else if (spec.epsilon) eps = *spec.epsilon;
    check_epsilon(eps);
    return soften(expert, eps);
}

} // namespace

std::string to_string(Quality q) {
    switch (q) {
    case Quality::random: return "random";
    case Quality::medium: return "medium";
    case Quality::expert: return "expert";
    case Quality::mixture: return "mixture";
    }
    return "unknown";
}

Quality parse_quality(const std::string& text) {
    if (text == "random") return Quality::random;
    if (text == "medium") return Quality::medium;
    if (text == "expert") return Quality::expert;
    if (text == "mixture") return Quality::mixture;
    throw InvalidInput("unknown quality '" + text + "'");
}

double calibrate_medium_epsilon(const TabularMDP& mdp) {
    const PolicyTable expert = value_iteration(mdp, kExpertTol).policy;
    const double j_exp = expected_return(mdp, expert);
    const double j_rand = expected_return(mdp, PolicyTable::uniform(mdp.n_states(), mdp.n_actions()));
    const double half = 0.5 * j_exp;
    const double target = (j_rand <= half && half <= j_exp) ? half : 0.5 * (j_rand + j_exp);
    if (j_exp <= j_rand) return kMediumEpsilon;
    double lo = 0.0;  // J(lo) >= target
    double hi = 1.0;  // J(hi) <= target
    for (int it = 0; it < 50; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (expected_return(mdp, soften(expert, mid)) >= target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

PolicyTable make_behavior(const TabularMDP& mdp, const BehaviorSpec& spec) {
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    if (spec.quality == Quality::random) return PolicyTable::uniform(S, A);

    const PolicyTable greedy = value_iteration(mdp, kExpertTol).policy;
    switch (spec.quality) {
    case Quality::expert: {
        const double eps = spec.epsilon.value_or(0.0);
        check_epsilon(eps);
        return eps == 0.0 ? greedy : soften(greedy, eps);
    }
    case Quality::medium: return medium_policy(mdp, greedy, spec);
    case Quality::mixture: {
        for (double w : spec.mixture_weights)
            if (!(w >= 0.0)) throw InvalidInput("behavior: negative mixture weight");
        const std::array<PolicyTable, 3> parts{PolicyTable::uniform(S, A), medium_policy(mdp, greedy, spec), greedy};
        return mix_policies(parts, spec.mixture_weights);
    }
    default: break;
    }
    throw InvalidInput("behavior: unsupported quality");
}

} // namespace dvdf
