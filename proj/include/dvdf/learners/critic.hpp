#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dvdf/core/policy.hpp"
#include "dvdf/core/tabular_mdp.hpp"
#include "dvdf/core/value_tables.hpp"
#include "dvdf/env/dataset.hpp"
#include "dvdf/learners/transition_stats.hpp"

namespace dvdf {

struct IqlConfig {
    double tau = 0.7;
    double beta = 3.0;
    std::size_t iters = 20000;
    double tol = 1e-10;
};

struct SqlConfig {
    double alpha = 0.1;
    double beta = 3.0;  // AWR temperature for the extracted policy
    std::size_t iters = 20000;
    double tol = 1e-10;
};

struct PretrainedCritic {
    ValueTables values;
    PolicyTable policy = PolicyTable::uniform(1, 1);
    std::string learner;
    std::size_t iterations = 0;
    double residual = 0.0;  // last sup-norm change of Q
    bool converged = false;
    std::vector<double> residuals;  // one per iteration; not serialized
};

/// Maps the Q values and weights of the observed actions at one state to V(s).
using StateOperator = std::function<double(std::span<const double> q, std::span<const double> w)>;

/// Alternating fixed point on weighted statistics:
///   Q(s,a) = (sum w r + gamma sum w (1 - done) V(s')) / W(s,a)  on observed pairs
///   V(s)   = op(Q(s, observed actions), W(s, observed actions))
/// Unobserved states get V = 0 and unobserved pairs Q = V, hence A = 0.
/// The policy is AWR over W(s, a).
PretrainedCritic fit_critic(const TransitionStats& stats, const StateOperator& op, double beta,
                            std::size_t iters, double tol, const std::string& label);

PretrainedCritic fit_iql(const Dataset& data, const IqlConfig& cfg);
PretrainedCritic fit_sql(const Dataset& data, const SqlConfig& cfg);

/// Weighted variants used by the filtering pipeline.
PretrainedCritic fit_iql(const TransitionStats& stats, const IqlConfig& cfg);
PretrainedCritic fit_sql(const TransitionStats& stats, const SqlConfig& cfg);

/// pi(a|s) proportional to W(s,a) * exp(beta * A(s,a)) over pairs with W > 0;
/// uniform where a state has no weight.
PolicyTable awr_extract(std::size_t n_states, std::size_t n_actions, std::span<const double> weight,
                        const ValueTables& adv, double beta);
PolicyTable awr_extract(const Dataset& data, const ValueTables& adv, double beta);

struct InSampleOptimal {
    PolicyTable policy;
    ValueTables values;
};

/// Value iteration with the max restricted to actions seen in data.
InSampleOptimal in_sample_optimal(const TabularMDP& mdp, const Dataset& data);

/// Pairs seen in data, row-major (s, a).
std::vector<bool> support_mask(const Dataset& data);

struct AdvantageError {
    double value = 0.0;
    std::size_t kept = 0;
    std::size_t excluded = 0;
};

/// Mean of (est - truth) / truth over dataset records whose |truth A| is at
/// least eps_denom. Throws UndefinedMetric when every record is excluded.
AdvantageError advantage_error(const ValueTables& est, const ValueTables& truth, const Dataset& data,
                               double eps_denom);

/// 1e-3 times the largest |A| of truth over the dataset's pairs.
double default_eps_denom(const ValueTables& truth, const Dataset& data);

/// Maximum-likelihood MDP of the dataset. Unseen pairs self-loop with zero
/// reward; rho0 is the empirical state frequency.
TabularMDP empirical_mdp(const Dataset& data);

// "pretrained-critic v1", label, "<S> <A> <iterations> <residual> <converged>",
// S rows of Q, one row of V, S policy rows.
void write_critic(std::ostream& out, const PretrainedCritic& critic);
PretrainedCritic read_critic(std::istream& in);
void save_critic(const std::string& path, const PretrainedCritic& critic);
PretrainedCritic load_critic(const std::string& path);

} // namespace dvdf
