#pragma once

#include <cstddef>
#include <vector>

namespace dvdf {

/// Q, V and A = Q - V for one policy or learner.
struct ValueTables {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<double> q;
    std::vector<double> v;
    std::vector<double> adv;

    /// Builds A from Q and V elementwise.
    static ValueTables from_qv(std::size_t n_states, std::size_t n_actions,
                               std::vector<double> q, std::vector<double> v);

    double Q(std::size_t s, std::size_t a) const noexcept { return q[s * n_actions + a]; }
    double V(std::size_t s) const noexcept { return v[s]; }
    double A(std::size_t s, std::size_t a) const noexcept { return adv[s * n_actions + a]; }

    /// Largest |A - (Q - V)| over all entries; zero for tables built by from_qv.
    double advantage_defect() const noexcept;
};

/// Unnormalized discounted visitation: d(s) = sum_t gamma^t Pr(s_t = s), so
/// sum_s d(s) = 1 / (1 - gamma). sa(s, a) = d(s) * pi(a|s).
struct OccupancyVector {
    std::vector<double> d;
    std::vector<double> sa;
};

} // namespace dvdf
