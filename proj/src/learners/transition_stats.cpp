#include "dvdf/learners/transition_stats.hpp"

#include <algorithm>
#include <cmath>

#include "dvdf/core/errors.hpp"

namespace dvdf {

TransitionStats::TransitionStats(std::size_t S, std::size_t A, double g)
    : n_states(S), n_actions(A), gamma(g), weight(S * A, 0.0), reward(S * A, 0.0), next(S * A * S, 0.0) {
    if (S == 0 || A == 0) throw InvalidInput("transition stats: empty shape");
    if (!(g > 0.0 && g < 1.0)) throw InvalidInput("transition stats: gamma outside (0, 1)");
}

void TransitionStats::add(const Dataset& data, std::span<const double> weights) {
    if (data.n_states != n_states || data.n_actions != n_actions)
        throw InvalidInput("transition stats: dataset shape mismatch");
    if (data.gamma != gamma) throw InvalidInput("transition stats: dataset discount mismatch");
    if (!weights.empty() && weights.size() != data.size())
        throw InvalidInput("transition stats: one weight per record required");
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& rec = data.records[i];
        const double w = weights.empty() ? 1.0 : weights[i];
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("transition stats: negative or non-finite weight");
        if (w == 0.0) continue;
        const std::size_t sa = rec.s * n_actions + rec.a;
        weight[sa] += w;
        reward[sa] += w * rec.r;
        if (!rec.done) next[sa * n_states + rec.s_next] += w;
    }
}

bool TransitionStats::any_observed() const noexcept {
    return std::any_of(weight.begin(), weight.end(), [](double w) { return w > 0.0; });
}

TransitionStats stats_of(const Dataset& data) {
    TransitionStats stats(data.n_states, data.n_actions, data.gamma);
    stats.add(data);
    return stats;
}

} // namespace dvdf
