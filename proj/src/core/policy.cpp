#include "dvdf/core/policy.hpp"

#include <cmath>
#include <string>

#include "dvdf/core/errors.hpp"
#include "dvdf/core/tabular_mdp.hpp"

namespace dvdf {

PolicyTable::PolicyTable(std::size_t n_states, std::size_t n_actions, std::vector<double> probs)
    : n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
    if (n_states_ == 0 || n_actions_ == 0) throw InvalidInput("policy: empty shape");
    if (probs_.size() != n_states_ * n_actions_) throw InvalidInput("policy: table has wrong size");
    for (std::size_t s = 0; s < n_states_; ++s) {
        double total = 0.0;
        for (double x : row(s)) {
            if (!std::isfinite(x) || x < 0.0 || x > 1.0)
                throw InvalidInput("policy: entry outside [0, 1] at state " + std::to_string(s));
            total += x;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw InvalidInput("policy: row " + std::to_string(s) + " does not sum to 1");
    }
}

PolicyTable PolicyTable::uniform(std::size_t n_states, std::size_t n_actions) {
    return PolicyTable(n_states, n_actions,
                       std::vector<double>(n_states * n_actions, 1.0 / static_cast<double>(n_actions)));
}

PolicyTable PolicyTable::deterministic(std::size_t n_actions, std::span<const std::size_t> actions) {
    std::vector<double> probs(actions.size() * n_actions, 0.0);
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] >= n_actions) throw InvalidInput("policy: action id out of range");
        probs[s * n_actions + actions[s]] = 1.0;
    }
    return PolicyTable(actions.size(), n_actions, std::move(probs));
}

std::size_t PolicyTable::argmax(std::size_t s) const noexcept {
    const auto r = row(s);
    std::size_t best = 0;
    for (std::size_t a = 1; a < r.size(); ++a)
        if (r[a] > r[best]) best = a;
    return best;
}

bool PolicyTable::fits(const TabularMDP& mdp) const noexcept {
    return n_states_ == mdp.n_states() && n_actions_ == mdp.n_actions();
}

PolicyTable soften(const PolicyTable& pi, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidInput("soften: epsilon outside [0, 1]");
    const double u = epsilon / static_cast<double>(pi.n_actions());
    std::vector<double> probs(pi.probs().begin(), pi.probs().end());
    for (double& p : probs) p = (1.0 - epsilon) * p + u;
    return PolicyTable(pi.n_states(), pi.n_actions(), std::move(probs));
}

PolicyTable mix_policies(std::span<const PolicyTable> policies, std::span<const double> weights) {
    if (policies.empty() || policies.size() != weights.size())
        throw InvalidInput("mix_policies: need one weight per policy");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw InvalidInput("mix_policies: negative weight");
        total += w;
    }
    if (total <= 0.0) throw InvalidInput("mix_policies: weights sum to zero");
    const auto n_states = policies.front().n_states();
    const auto n_actions = policies.front().n_actions();
    std::vector<double> probs(n_states * n_actions, 0.0);
    for (std::size_t i = 0; i < policies.size(); ++i) {
        if (policies[i].n_states() != n_states || policies[i].n_actions() != n_actions)
            throw InvalidInput("mix_policies: shape mismatch");
        const auto src = policies[i].probs();
        for (std::size_t j = 0; j < probs.size(); ++j) probs[j] += weights[i] / total * src[j];
    }
    return PolicyTable(n_states, n_actions, std::move(probs));
}

} // namespace dvdf
