#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::parallel. Each output
// element is computed by the same arithmetic in both, so results are
// bit-identical regardless of thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "dvdf/core/policy.hpp"
#include "dvdf/core/tabular_mdp.hpp"

namespace dvdf::kernels {

namespace serial {

/// q(s, a) = r(s, a) + gamma * sum_s' P(s'|s, a) v(s').
void bellman_backup(const TabularMDP& mdp, std::span<const double> v, std::span<double> q);

/// v(s) = max over allowed a of q(s, a); all actions when none is allowed.
void action_max(std::size_t n_states, std::size_t n_actions, std::span<const double> q,
                const std::vector<bool>* allowed, std::span<double> v);

/// Dense (S x S) row-major matrix P_pi(s, s') = sum_a pi(a|s) P(s'|s, a).
void policy_kernel(const TabularMDP& mdp, const PolicyTable& pi, std::span<double> out);

} // namespace serial

namespace parallel {

void bellman_backup(const TabularMDP& mdp, std::span<const double> v, std::span<double> q);
void action_max(std::size_t n_states, std::size_t n_actions, std::span<const double> q,
                const std::vector<bool>* allowed, std::span<double> v);
void policy_kernel(const TabularMDP& mdp, const PolicyTable& pi, std::span<double> out);

} // namespace parallel

// Library code calls these; they route to the parallel versions.
using parallel::action_max;
using parallel::bellman_backup;
using parallel::policy_kernel;

} // namespace dvdf::kernels
