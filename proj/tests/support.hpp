#pragma once

// Small builders and brute-force oracles shared by the test suites.

#include <cmath>
#include <cstddef>
#include <vector>

#include "dvdf/core/policy.hpp"
#include "dvdf/core/rng.hpp"
#include "dvdf/core/tabular_mdp.hpp"

namespace dvdf::test {

/// MDP from nested tables: p[s][a][s'], r[s][a].
inline TabularMDP make_mdp(const std::vector<std::vector<std::vector<double>>>& p,
                           const std::vector<std::vector<double>>& r, std::vector<double> rho0, double gamma,
                           double r_max = 1.0) {
    const std::size_t S = p.size();
    const std::size_t A = p[0].size();
    std::vector<double> flat_p, flat_r;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            flat_p.insert(flat_p.end(), p[s][a].begin(), p[s][a].end());
            flat_r.push_back(r[s][a]);
        }
    return TabularMDP(S, A, std::move(flat_p), std::move(flat_r), std::move(rho0), gamma, r_max);
}

/// Discounted return of one episode of length horizon.
inline double rollout(const TabularMDP& mdp, const PolicyTable& pi, Rng& rng, std::size_t horizon) {
    std::size_t s = sample_categorical(rng, mdp.initial());
    double ret = 0.0;
    double disc = 1.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        const std::size_t a = sample_categorical(rng, pi.row(s));
        ret += disc * mdp.reward(s, a);
        disc *= mdp.gamma();
        s = sample_categorical(rng, mdp.row(s, a));
    }
    return ret;
}

struct MonteCarlo {
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline MonteCarlo monte_carlo_return(const TabularMDP& mdp, const PolicyTable& pi, std::size_t episodes,
                                     std::uint64_t seed) {
    const auto horizon = static_cast<std::size_t>(std::ceil(std::log(1e-8) / std::log(mdp.gamma()))) + 1;
    Rng rng(seed);
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < episodes; ++i) {
        const double g = rollout(mdp, pi, rng, horizon);
        sum += g;
        sq += g * g;
    }
    const double n = static_cast<double>(episodes);
    const double mean = sum / n;
    const double var = (sq - n * mean * mean) / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

/// V^pi by iterating the Bellman expectation operator from zero; independent
/// of the linear solve used by the library.
inline std::vector<double> iterate_values(const TabularMDP& mdp, const PolicyTable& pi, std::size_t sweeps) {
    const std::size_t S = mdp.n_states();
    std::vector<double> v(S, 0.0), next(S);
    for (std::size_t it = 0; it < sweeps; ++it) {
        for (std::size_t s = 0; s < S; ++s) {
            double acc = 0.0;
            for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
                double q = mdp.reward(s, a);
                for (std::size_t n = 0; n < S; ++n) q += mdp.gamma() * mdp.p(s, a, n) * v[n];
                acc += pi(s, a) * q;
            }
            next[s] = acc;
        }
        v.swap(next);
    }
    return v;
}

inline double iterate_return(const TabularMDP& mdp, const PolicyTable& pi, std::size_t sweeps = 3000) {
    const auto v = iterate_values(mdp, pi, sweeps);
    double j = 0.0;
    for (std::size_t s = 0; s < mdp.n_states(); ++s) j += mdp.initial()[s] * v[s];
    return j;
}

/// Every deterministic policy, as action lists, in lexicographic order.
inline std::vector<std::vector<std::size_t>> all_deterministic(std::size_t n_states, std::size_t n_actions) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur(n_states, 0);
    while (true) {
        out.push_back(cur);
        std::size_t i = 0;
        while (i < n_states && ++cur[i] == n_actions) cur[i++] = 0;
        if (i == n_states) break;
    }
    return out;
}

} // namespace dvdf::test
