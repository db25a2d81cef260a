#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dvdf/core/policy.hpp"
#include "dvdf/core/tabular_mdp.hpp"
#include "dvdf/core/value_tables.hpp"

namespace dvdf {

struct OptimalSolution {
    ValueTables values;
    PolicyTable policy;
    std::size_t iterations = 0;
    double residual = 0.0;  // sup-norm Bellman optimality residual of values.v
};

/// Value iteration until the Bellman optimality residual is at most tol.
/// The policy is greedy in Q with the lowest action index winning ties.
OptimalSolution value_iteration(const TabularMDP& mdp, double tol);

/// Same, with the max at each state restricted to actions where allowed(s, a)
/// is true. States with no allowed action fall back to the full action set.
OptimalSolution value_iteration(const TabularMDP& mdp, double tol,
                                const std::vector<bool>& allowed);

/// Exact V^pi from (I - gamma P_pi) V = r_pi, then Q and A.
ValueTables policy_evaluation(const TabularMDP& mdp, const PolicyTable& pi);

/// J(pi) = sum_s rho0(s) V^pi(s).
double expected_return(const TabularMDP& mdp, const PolicyTable& pi);

/// Solves d = rho0 + gamma P_pi^T d (unnormalized convention).
OccupancyVector occupancy(const TabularMDP& mdp, const PolicyTable& pi);

/// sup_s |max_a (r + gamma P v)(s, a) - v(s)|.
double bellman_residual(const TabularMDP& mdp, std::span<const double> v);

/// Greedy deterministic policy over q, restricted to allowed pairs when given.
PolicyTable greedy_policy(std::size_t n_states, std::size_t n_actions,
                          std::span<const double> q, const std::vector<bool>* allowed = nullptr);

/// Above this many states evaluation switches from a dense LU solve to
/// fixed-point iteration.
inline constexpr std::size_t kDirectSolveLimit = 200;

} // namespace dvdf
