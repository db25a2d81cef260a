#pragma once

#include <cstddef>

#include "dvdf/core/policy.hpp"
#include "dvdf/core/rng.hpp"
#include "dvdf/core/tabular_mdp.hpp"

namespace dvdf {

/// Dense random MDP: Dirichlet(1)-like kernel rows, rewards uniform in
/// [-r_max, r_max], random initial distribution.
TabularMDP random_mdp(Rng& rng, std::size_t n_states, std::size_t n_actions, double gamma,
                      double r_max = 1.0);

/// Copy of base whose kernel rows are each mixed with a fresh random row;
/// mixing weight is uniform in [0, max_mix].
TabularMDP perturbed_kernel(Rng& rng, const TabularMDP& base, double max_mix);

/// Random stochastic policy with rows drawn like kernel rows.
PolicyTable random_policy(Rng& rng, std::size_t n_states, std::size_t n_actions);

/// Two-state pair with rewards +-r_max where the source is perfectly sticky and
/// the target leaks across with probability leak. As leak -> 0 the return gap
/// approaches the C1 * tv_sup bound, which is what makes the pair useful for
/// mutation testing of the bound constants.
struct DomainPair {
    TabularMDP src;
    TabularMDP tar;
};
DomainPair sticky_pair(double gamma, double leak, double r_max = 1.0);

} // namespace dvdf
