#include "dvdf/theory/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <sstream>

#include "dvdf/core/errors.hpp"
#include "dvdf/core/random_instances.hpp"
#include "dvdf/core/rng.hpp"
#include "dvdf/core/solve.hpp"

namespace dvdf {

namespace {

// sum_s d(s) sum_a w(a|s) x(s, a)
double occupancy_average(const OccupancyVector& occ, const PolicyTable& w, const std::vector<double>& x) {
    const std::size_t A = w.n_actions();
    double total = 0.0;
    for (std::size_t s = 0; s < occ.d.size(); ++s) {
        double inner = 0.0;
        for (std::size_t a = 0; a < A; ++a) inner += w(s, a) * x[s * A + a];
        total += occ.d[s] * inner;
    }
    return total;
}

void require_fit(const TabularMDP& mdp, const Dataset& data) {
    if (data.n_states != mdp.n_states() || data.n_actions != mdp.n_actions())
        throw InvalidInput("theory: dataset does not fit the MDP");
}

} // namespace

BoundReport check_lemma1(const TabularMDP& src, const TabularMDP& tar, const PolicyTable& pi, double tol,
                         double c1_scale) {
    return lemma1_bound(src, tar, pi, tol, c1_scale);
}

BoundReport check_prop1(const TabularMDP& src, const TabularMDP& tar, const PolicyTable& pi, const Dataset& data_src,
                        double tol) {
    require_fit(src, data_src);
    const auto insrc = in_sample_optimal(src, data_src);
    return prop1_bound(src, tar, pi, insrc.policy, tol);
}

BoundReport check_pdl_identity(const TabularMDP& mdp, const PolicyTable& mu, const PolicyTable& pi_ref, double tol) {
    const double lhs = expected_return(mdp, mu) - expected_return(mdp, pi_ref);
    const auto ref = policy_evaluation(mdp, pi_ref);
    const double rhs = occupancy_average(occupancy(mdp, mu), mu, ref.adv);
    return BoundReport::identity("pdl_identity", lhs, rhs, tol);
}

BoundReport check_prop2_bound(const TabularMDP& mdp, const Dataset& data, const PolicyTable& pi,
                              const PolicyTable& mu, double tol) {
    require_fit(mdp, data);
    if (!pi.fits(mdp) || !mu.fits(mdp)) throw InvalidInput("prop2: policy does not fit the MDP");
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    const double gamma = mdp.gamma();

    const auto insrc = in_sample_optimal(mdp, data);
    const double j_pi = expected_return(mdp, pi);
    const double j_star = expected_return(mdp, insrc.policy);
    const auto occ_mu = occupancy(mdp, mu);
    const auto star = policy_evaluation(mdp, insrc.policy);
    const double rhs_term = occupancy_average(occ_mu, mu, star.adv);

    const auto behav = policy_evaluation(mdp, mu);
    double eps_max = 0.0;
    double eps_kl = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        double expected_adv = 0.0;
        double kl = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            expected_adv += pi(s, a) * behav.A(s, a);
            if (pi(s, a) <= 0.0) continue;
            kl = mu(s, a) > 0.0 ? kl + pi(s, a) * std::log(pi(s, a) / mu(s, a))
                                : std::numeric_limits<double>::infinity();
        }
        eps_max = std::max(eps_max, std::abs(expected_adv));
        eps_kl = std::max(eps_kl, kl);
    }
    const double penalty = eps_max == 0.0 ? 0.0 : 2.0 * gamma * eps_max * std::sqrt(eps_kl) / ((1.0 - gamma) * (1.0 - gamma));
    // tighter intermediate form that needs no improvement assumption
    const double improvement = occupancy_average(occ_mu, pi, behav.adv);

    double pairwise = std::numeric_limits<double>::infinity();
    double statewise = std::numeric_limits<double>::infinity();
    const auto seen = support_mask(data);
    for (std::size_t s = 0; s < S; ++s) {
        double sum = 0.0;
        bool any = false;
        for (std::size_t a = 0; a < A; ++a) {
            const double term = (pi(s, a) - mu(s, a)) * behav.A(s, a);
            sum += term;
            if (!seen[s * A + a]) continue;
            any = true;
            pairwise = std::min(pairwise, term);
        }
        if (any) statewise = std::min(statewise, sum);
    }

    auto report = BoundReport::lower_bound("prop2", j_pi - j_star, rhs_term - penalty, tol);
    report.components = {{"J_pi", j_pi},
                         {"J_insrc", j_star},
                         {"rhs_term", rhs_term},
                         {"lhs_minus_rhs_term", j_pi - j_star - rhs_term},
                         {"penalty", penalty},
                         {"eps_max", eps_max},
                         {"eps_kl", eps_kl},
                         {"improvement", improvement},
                         {"cpo_rhs", rhs_term + improvement - penalty},
                         {"assumption_pairwise", pairwise},
                         {"assumption_statewise", statewise},
                         {"assumption_satisfied", pairwise >= -1e-9 ? 1.0 : 0.0}};
    return report;
}

BoundReport check_prop3_identity(const TabularMDP& mdp, const Dataset& data, const PretrainedCritic& critic,
                                 double tol) {
    require_fit(mdp, data);
    if (critic.values.n_states != mdp.n_states() || critic.values.n_actions != mdp.n_actions())
        throw InvalidInput("prop3: critic does not fit the MDP");
    const auto& mu = data.behavior;
    const auto insrc = in_sample_optimal(mdp, data);
    const auto star = policy_evaluation(mdp, insrc.policy);
    const auto pre = policy_evaluation(mdp, critic.policy);
    const auto occ = occupancy(mdp, mu);

    const std::size_t n = critic.values.adv.size();
    std::vector<double> err_star(n), err_pre(n);
    for (std::size_t i = 0; i < n; ++i) {
        err_star[i] = critic.values.adv[i] - star.adv[i];
        err_pre[i] = critic.values.adv[i] - pre.adv[i];
    }
    const double lhs = occupancy_average(occ, mu, err_star);
    const double delta_j = expected_return(mdp, insrc.policy) - expected_return(mdp, critic.policy);
    const double delta_term = occupancy_average(occ, mu, err_pre);
    auto report = BoundReport::identity("prop3", lhs, delta_j + delta_term, tol);
    report.components = {{"delta_J", delta_j}, {"E_delta", delta_term}};
    return report;
}

Dataset coverage_dataset(const TabularMDP& mdp, const std::vector<bool>& allowed) {
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    if (allowed.size() != S * A) throw InvalidInput("coverage_dataset: mask has wrong size");
    Dataset data;
    data.n_states = S;
    data.n_actions = A;
    data.gamma = mdp.gamma();
    data.quality = "coverage";
    const auto absorbing = mdp.absorbing_states();
    std::vector<double> probs(S * A, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        const auto count = static_cast<double>(std::count(allowed.begin() + static_cast<std::ptrdiff_t>(s * A),
                                                          allowed.begin() + static_cast<std::ptrdiff_t>((s + 1) * A), true));
        for (std::size_t a = 0; a < A; ++a) {
            probs[s * A + a] = count > 0.0 ? (allowed[s * A + a] ? 1.0 / count : 0.0) : 1.0 / static_cast<double>(A);
            if (!allowed[s * A + a]) continue;
            const auto row = mdp.row(s, a);
            const auto next = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
            data.records.push_back({s, a, mdp.reward(s, a), next, absorbing[next], Domain::source, "coverage"});
        }
    }
    data.behavior = PolicyTable(S, A, std::move(probs));
    return data;
}

bool TheorySummary::all_hold() const noexcept {
    return std::all_of(rows.begin(), rows.end(), [](const CheckSummary& r) { return r.holds == r.instances; });
}

namespace {

struct Instance {
    std::size_t S;
    std::size_t A;
    double gamma;
};

Instance draw_shape(Rng& rng, std::size_t index, std::size_t min_actions) {
    const std::size_t S = 2 + uniform_index(rng, 5);
    const std::size_t A = min_actions + uniform_index(rng, 4 - min_actions);
    return {S, A, index % 2 == 0 ? 0.5 : 0.9};
}

// Dense random pair on most indices, a near-tight sticky pair on every fourth.
DomainPair draw_pair(Rng& rng, std::size_t index, bool identical) {
    if (index % 4 == 3) {
        const double leak = std::pow(10.0, -uniform(rng, 2.0, 4.0));
        auto pair = sticky_pair(index % 2 == 0 ? 0.5 : 0.9, leak);
        if (identical) return {pair.src, pair.src};
        return pair;
    }
    const auto shape = draw_shape(rng, index, 1);
    auto src = random_mdp(rng, shape.S, shape.A, shape.gamma);
    auto tar = identical ? src : perturbed_kernel(rng, src, uniform01(rng));
    return {std::move(src), std::move(tar)};
}

std::vector<bool> random_mask(Rng& rng, std::size_t S, std::size_t A) {
    std::vector<bool> mask(S * A, false);
    bool any = false;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = uniform01(rng) < 0.6;
        any = any || mask[i];
    }
    if (!any) mask[uniform_index(rng, mask.size())] = true;
    return mask;
}

PolicyTable exp_tilt(const PolicyTable& mu, const ValueTables& adv, double beta) {
    const std::size_t S = mu.n_states();
    const std::size_t A = mu.n_actions();
    std::vector<double> probs(S * A);
    for (std::size_t s = 0; s < S; ++s) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < A; ++a) top = std::max(top, adv.A(s, a));
        double z = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            probs[s * A + a] = mu(s, a) * std::exp(beta * (adv.A(s, a) - top));
            z += probs[s * A + a];
        }
        for (std::size_t a = 0; a < A; ++a) probs[s * A + a] /= z;
    }
    return PolicyTable(S, A, std::move(probs));
}

template <class Check>
CheckSummary run_check(const std::string& name, bool identity, std::uint64_t seed, std::size_t n, Check check) {
    std::vector<BoundReport> reports(n);
    std::vector<std::string> errors(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            Rng rng(derive_seed(seed, idx));
            reports[idx] = check(rng, idx);
        } catch (const std::exception& e) {
            errors[idx] = e.what();
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!errors[i].empty()) throw std::runtime_error(name + " instance " + std::to_string(i) + ": " + errors[i]);
    CheckSummary row;
    row.name = name;
    row.identity = identity;
    row.instances = n;
    row.worst_slack = identity ? 0.0 : std::numeric_limits<double>::infinity();
    for (const auto& r : reports) {
        if (r.holds) ++row.holds;
        row.worst_slack = identity ? std::max(row.worst_slack, r.slack) : std::min(row.worst_slack, r.slack);
    }
    if (n == 0) row.worst_slack = 0.0;
    return row;
}

} // namespace

TheorySummary run_theory_suite(std::uint64_t seed, std::size_t n, const TheoryOptions& options) {
    TheorySummary summary;
    const double c1_scale = options.mutate_c1 ? 0.5 : 1.0;
    const bool same = options.identical_domains;

    summary.rows.push_back(run_check("lemma1", false, derive_seed(seed, 1), n, [&](Rng& rng, std::size_t i) {
        const auto pair = draw_pair(rng, i, same);
        const auto pi = random_policy(rng, pair.src.n_states(), pair.src.n_actions());
        return check_lemma1(pair.src, pair.tar, pi, 1e-9, c1_scale);
    }));
    summary.rows.push_back(run_check("prop1", false, derive_seed(seed, 2), n, [&](Rng& rng, std::size_t i) {
        const auto pair = draw_pair(rng, i, same);
        const std::size_t S = pair.src.n_states();
        const std::size_t A = pair.src.n_actions();
        const auto pi = random_policy(rng, S, A);
        const auto data = coverage_dataset(pair.src, random_mask(rng, S, A));
        return check_prop1(pair.src, pair.tar, pi, data);
    }));
    summary.rows.push_back(run_check("pdl_identity", true, derive_seed(seed, 3), n, [&](Rng& rng, std::size_t i) {
        const auto shape = draw_shape(rng, i, 1);
        const auto mdp = random_mdp(rng, shape.S, shape.A, shape.gamma);
        const auto mu = random_policy(rng, shape.S, shape.A);
        const auto ref = random_policy(rng, shape.S, shape.A);
        return check_pdl_identity(mdp, mu, ref);
    }));
    summary.rows.push_back(run_check("prop2", false, derive_seed(seed, 4), n, [&](Rng& rng, std::size_t i) {
        const auto shape = draw_shape(rng, i, 2);
        const auto mdp = random_mdp(rng, shape.S, shape.A, shape.gamma);
        const auto mu = random_policy(rng, shape.S, shape.A);
        const auto data = collect(mdp, mu, 200, rng(), Domain::source, "random");
        const auto pi = exp_tilt(mu, policy_evaluation(mdp, mu), 1.0);
        return check_prop2_bound(mdp, data, pi, mu);
    }));
    summary.rows.push_back(run_check("prop3", true, derive_seed(seed, 5), n, [&](Rng& rng, std::size_t i) {
        const auto shape = draw_shape(rng, i, 2);
        const auto mdp = random_mdp(rng, shape.S, shape.A, shape.gamma);
        const auto mu = random_policy(rng, shape.S, shape.A);
        const auto data = collect(mdp, mu, 200, rng(), Domain::source, "random");
        const auto critic = i % 2 == 0 ? fit_sql(data, SqlConfig{}) : fit_iql(data, IqlConfig{});
        return check_prop3_identity(mdp, data, critic);
    }));
    return summary;
}

std::string format_summary(const TheorySummary& summary) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-14s %9s %7s %14s  %s\n", "check", "instances", "holds", "worst_slack", "status");
    out << line;
    for (const auto& r : summary.rows) {
        std::snprintf(line, sizeof line, "%-14s %9zu %7zu %14.6e  %s\n", r.name.c_str(), r.instances, r.holds,
                      r.worst_slack, r.holds == r.instances ? "ok" : "FAIL");
        out << line;
    }
    return out.str();
}

} // namespace dvdf
