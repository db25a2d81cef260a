#include "dvdf/core/kernels.hpp"

#include <limits>

namespace dvdf::kernels {

namespace {

inline double backup_one(const TabularMDP& mdp, std::span<const double> v, std::size_t s,
                         std::size_t a) {
    const auto row = mdp.row(s, a);
    double acc = 0.0;
    for (std::size_t next = 0; next < row.size(); ++next) acc += row[next] * v[next];
    return mdp.reward(s, a) + mdp.gamma() * acc;
}

inline double max_one(std::size_t n_actions, std::span<const double> q,
                      const std::vector<bool>* allowed, std::size_t s) {
    bool any = false;
    if (allowed != nullptr) {
        for (std::size_t a = 0; a < n_actions; ++a) any = any || (*allowed)[s * n_actions + a];
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n_actions; ++a) {
        if (any && !(*allowed)[s * n_actions + a]) continue;
        const double x = q[s * n_actions + a];
        if (x > best) best = x;
    }
    return best;
}

inline void kernel_row(const TabularMDP& mdp, const PolicyTable& pi, std::size_t s,
                       std::span<double> out) {
    const std::size_t n = mdp.n_states();
    double* dst = out.data() + s * n;
    for (std::size_t next = 0; next < n; ++next) dst[next] = 0.0;
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        const double w = pi(s, a);
        if (w == 0.0) continue;
        const auto row = mdp.row(s, a);
        for (std::size_t next = 0; next < n; ++next) dst[next] += w * row[next];
    }
}

} // namespace

namespace serial {

void bellman_backup(const TabularMDP& mdp, std::span<const double> v, std::span<double> q) {
    const std::size_t n_actions = mdp.n_actions();
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
        for (std::size_t a = 0; a < n_actions; ++a) q[s * n_actions + a] = backup_one(mdp, v, s, a);
}

void action_max(std::size_t n_states, std::size_t n_actions, std::span<const double> q,
                const std::vector<bool>* allowed, std::span<double> v) {
    for (std::size_t s = 0; s < n_states; ++s) v[s] = max_one(n_actions, q, allowed, s);
}

void policy_kernel(const TabularMDP& mdp, const PolicyTable& pi, std::span<double> out) {
    for (std::size_t s = 0; s < mdp.n_states(); ++s) kernel_row(mdp, pi, s, out);
}

} // namespace serial

namespace parallel {

void bellman_backup(const TabularMDP& mdp, std::span<const double> v, std::span<double> q) {
    const auto n_states = static_cast<long>(mdp.n_states());
    const std::size_t n_actions = mdp.n_actions();
#pragma omp parallel for schedule(static) if (n_states >= 64)
    for (long s = 0; s < n_states; ++s)
        for (std::size_t a = 0; a < n_actions; ++a)
            q[static_cast<std::size_t>(s) * n_actions + a] =
                backup_one(mdp, v, static_cast<std::size_t>(s), a);
}

void action_max(std::size_t n_states, std::size_t n_actions, std::span<const double> q,
                const std::vector<bool>* allowed, std::span<double> v) {
    const auto n = static_cast<long>(n_states);
#pragma omp parallel for schedule(static) if (n >= 256)
    for (long s = 0; s < n; ++s)
        v[static_cast<std::size_t>(s)] = max_one(n_actions, q, allowed, static_cast<std::size_t>(s));
}

void policy_kernel(const TabularMDP& mdp, const PolicyTable& pi, std::span<double> out) {
    const auto n = static_cast<long>(mdp.n_states());
#pragma omp parallel for schedule(static) if (n >= 64)
    for (long s = 0; s < n; ++s) kernel_row(mdp, pi, static_cast<std::size_t>(s), out);
}

} // namespace parallel

} // namespace dvdf::kernels
