#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dvdf/core/bounds.hpp"
#include "dvdf/core/policy.hpp"
#include "dvdf/core/tabular_mdp.hpp"
#include "dvdf/env/dataset.hpp"
#include "dvdf/learners/critic.hpp"

namespace dvdf {

/// |J_tar(pi) - J_src(pi)| <= C1 * tv_sup.
BoundReport check_lemma1(const TabularMDP& src, const TabularMDP& tar, const PolicyTable& pi, double tol = 1e-9,
                         double c1_scale = 1.0);

/// Sub-optimality bound with the in-sample optimum of data_src on src.
BoundReport check_prop1(const TabularMDP& src, const TabularMDP& tar, const PolicyTable& pi, const Dataset& data_src,
                        double tol = 1e-9);

/// J(mu) - J(pi_ref) = sum_s d_mu(s) sum_a mu(a|s) A_{pi_ref}(s, a).
BoundReport check_pdl_identity(const TabularMDP& mdp, const PolicyTable& mu, const PolicyTable& pi_ref,
                               double tol = 1e-6);

/// lhs = J(pi) - J(pi*_insrc), rhs = E_{d_mu, mu}[A_{pi*_insrc}] - penalty with
/// penalty = 2 gamma eps_max sqrt(eps_kl) / (1 - gamma)^2, where
/// eps_max = max_s |E_{a~pi} A_mu(s, a)| and eps_kl = max_s KL(pi || mu)(s).
/// Components record both forms of the improvement assumption:
///   assumption_pairwise  = min over observed (s,a) of (pi - mu) A_mu
///   assumption_statewise = min over observed s of sum_a (pi - mu) A_mu
/// and assumption_satisfied (1 or 0) for the pairwise form at -1e-9.
BoundReport check_prop2_bound(const TabularMDP& mdp_src, const Dataset& data_src, const PolicyTable& pi,
                              const PolicyTable& mu, double tol = 1e-9);

/// E_{d_mu, mu}[A_hat - A*] = (J(pi*) - J(pi_pre)) + E_{d_mu, mu}[A_hat - A_pre],
/// with mu the dataset behavior, A* the exact advantage of the in-sample
/// optimum and A_pre the exact advantage of the critic's policy.
BoundReport check_prop3_identity(const TabularMDP& mdp_src, const Dataset& data_src, const PretrainedCritic& critic,
                                 double tol = 1e-6);

struct TheoryOptions {
    bool mutate_c1 = false;          // halves C1 in the lemma check; the suite must then fail
    bool identical_domains = false;  // target kernel = source kernel
};

struct CheckSummary {
    std::string name;
    std::size_t instances = 0;
    std::size_t holds = 0;
    double worst_slack = 0.0;  // min slack for bounds, max |lhs - rhs| for identities
    bool identity = false;
};

struct TheorySummary {
    std::vector<CheckSummary> rows;
    bool all_hold() const noexcept;
};

/// n randomized instances per check, gamma alternating between 0.5 and 0.9.
/// Instances are independent and evaluated in parallel; instance i draws
/// from derive_seed(seed, i), so the result does not depend on thread count.
TheorySummary run_theory_suite(std::uint64_t seed, std::size_t n, const TheoryOptions& options = {});

/// Fixed-width text table: check, instances, holds, worst slack.
std::string format_summary(const TheorySummary& summary);

/// One record per allowed (s, a) with s' the most likely successor; behavior
/// uniform over allowed actions (all actions where none is allowed).
Dataset coverage_dataset(const TabularMDP& mdp, const std::vector<bool>& allowed);

} // namespace dvdf
