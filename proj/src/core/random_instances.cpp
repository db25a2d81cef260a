#include "dvdf/core/random_instances.hpp"

#include <cmath>
#include <vector>

#include "dvdf/core/errors.hpp"

namespace dvdf {

namespace {

// Exponential spacings give a flat Dirichlet row; the last entry absorbs the
// rounding so the row sums to 1 to within an ulp or two.
void random_simplex(Rng& rng, std::span<double> out) {
    double total = 0.0;
    for (double& x : out) {
        x = -std::log(1.0 - uniform01(rng));
        total += x;
    }
    for (double& x : out) x /= total;
}

} // namespace

TabularMDP random_mdp(Rng& rng, std::size_t n_states, std::size_t n_actions, double gamma, double r_max) {
    std::vector<double> transitions(n_states * n_actions * n_states);
    for (std::size_t i = 0; i < n_states * n_actions; ++i)
        random_simplex(rng, std::span<double>(transitions.data() + i * n_states, n_states));
    std::vector<double> rewards(n_states * n_actions);
    for (double& r : rewards) r = uniform(rng, -r_max, r_max);
    std::vector<double> initial(n_states);
    random_simplex(rng, initial);
    return TabularMDP(n_states, n_actions, std::move(transitions), std::move(rewards), std::move(initial), gamma,
                      r_max);
}

TabularMDP perturbed_kernel(Rng& rng, const TabularMDP& base, double max_mix) {
    if (!(max_mix >= 0.0 && max_mix <= 1.0)) throw InvalidInput("perturbed_kernel: max_mix outside [0, 1]");
    const std::size_t n = base.n_states();
    std::vector<double> transitions(base.transitions().begin(), base.transitions().end());
    std::vector<double> fresh(n);
    for (std::size_t i = 0; i < base.n_states() * base.n_actions(); ++i) {
        random_simplex(rng, fresh);
        const double mix = uniform(rng, 0.0, max_mix);
        double total = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            double& p = transitions[i * n + t];
            p = (1.0 - mix) * p + mix * fresh[t];
            total += p;
        }
        for (std::size_t t = 0; t < n; ++t) transitions[i * n + t] /= total;
    }
    return base.with_transitions(std::move(transitions));
}

PolicyTable random_policy(Rng& rng, std::size_t n_states, std::size_t n_actions) {
    std::vector<double> probs(n_states * n_actions);
    for (std::size_t s = 0; s < n_states; ++s)
        random_simplex(rng, std::span<double>(probs.data() + s * n_actions, n_actions));
    return PolicyTable(n_states, n_actions, std::move(probs));
}

DomainPair sticky_pair(double gamma, double leak, double r_max) {
    if (!(leak >= 0.0 && leak <= 1.0)) throw InvalidInput("sticky_pair: leak outside [0, 1]");
    // states: 0 pays +r_max, 1 pays -r_max; one action
    std::vector<double> src_kernel = {1.0, 0.0, 0.0, 1.0};
    std::vector<double> tar_kernel = {1.0 - leak, leak, leak, 1.0 - leak};
    std::vector<double> rewards = {r_max, -r_max};
    std::vector<double> initial = {1.0, 0.0};
    TabularMDP src(2, 1, src_kernel, rewards, initial, gamma, r_max);
    return DomainPair{src, src.with_transitions(std::move(tar_kernel))};
}

} // namespace dvdf
