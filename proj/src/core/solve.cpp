#include "dvdf/core/solve.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "dvdf/core/errors.hpp"
#include "dvdf/core/kernels.hpp"

namespace dvdf {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

constexpr double kIterativeTol = 1e-10;

double sup_diff(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

OptimalSolution run_value_iteration(const TabularMDP& mdp, double tol, const std::vector<bool>* allowed) {
    if (!(tol > 0.0)) throw InvalidInput("value_iteration: tol must be positive");
    const std::size_t n_states = mdp.n_states();
    const std::size_t n_actions = mdp.n_actions();
    if (allowed != nullptr && allowed->size() != n_states * n_actions)
        throw InvalidInput("value_iteration: support mask has wrong size");

    std::vector<double> v(n_states, 0.0);
    std::vector<double> next_v(n_states, 0.0);
    std::vector<double> q(n_states * n_actions, 0.0);
    std::size_t iterations = 0;
    double residual = 0.0;
    while (true) {
        kernels::bellman_backup(mdp, v, q);
        kernels::action_max(n_states, n_actions, q, allowed, next_v);
        residual = sup_diff(next_v, v);
        if (!std::isfinite(residual)) throw InvalidInput("value_iteration: diverged");
        if (residual <= tol) break;
        v.swap(next_v);
        ++iterations;
    }
    // q was computed from v, so (q, v) is a consistent pair whose residual is <= tol.
    auto policy = greedy_policy(n_states, n_actions, q, allowed);
    return OptimalSolution{ValueTables::from_qv(n_states, n_actions, std::move(q), std::move(v)),
                           std::move(policy), iterations, residual};
}

Matrix policy_matrix(const TabularMDP& mdp, const PolicyTable& pi) {
    const auto n = static_cast<Eigen::Index>(mdp.n_states());
    Matrix p_pi(n, n);
    kernels::policy_kernel(mdp, pi, std::span<double>(p_pi.data(), static_cast<std::size_t>(n * n)));
    return p_pi;
}

void require_fits(const TabularMDP& mdp, const PolicyTable& pi, const char* who) {
    if (!pi.fits(mdp)) throw InvalidInput(std::string(who) + ": policy shape does not match mdp");
}

} // namespace

OptimalSolution value_iteration(const TabularMDP& mdp, double tol) {
    return run_value_iteration(mdp, tol, nullptr);
}

OptimalSolution value_iteration(const TabularMDP& mdp, double tol, const std::vector<bool>& allowed) {
    return run_value_iteration(mdp, tol, &allowed);
}

PolicyTable greedy_policy(std::size_t n_states, std::size_t n_actions, std::span<const double> q,
                          const std::vector<bool>* allowed) {
    std::vector<std::size_t> actions(n_states, 0);
    for (std::size_t s = 0; s < n_states; ++s) {
        bool any = false;
        if (allowed != nullptr)
            for (std::size_t a = 0; a < n_actions; ++a) any = any || (*allowed)[s * n_actions + a];
        bool have = false;
        for (std::size_t a = 0; a < n_actions; ++a) {
            if (any && !(*allowed)[s * n_actions + a]) continue;
            if (!have || q[s * n_actions + a] > q[s * n_actions + actions[s]]) {
                actions[s] = a;
                have = true;
            }
        }
    }
    return PolicyTable::deterministic(n_actions, actions);
}

ValueTables policy_evaluation(const TabularMDP& mdp, const PolicyTable& pi) {
    require_fits(mdp, pi, "policy_evaluation");
    const std::size_t n_states = mdp.n_states();
    const std::size_t n_actions = mdp.n_actions();

    std::vector<double> r_pi(n_states, 0.0);
    for (std::size_t s = 0; s < n_states; ++s)
        for (std::size_t a = 0; a < n_actions; ++a) r_pi[s] += pi(s, a) * mdp.reward(s, a);

    std::vector<double> v(n_states, 0.0);
    const Matrix p_pi = policy_matrix(mdp, pi);
    if (n_states <= kDirectSolveLimit) {
        const auto n = static_cast<Eigen::Index>(n_states);
        const Matrix system = Matrix::Identity(n, n) - mdp.gamma() * p_pi;
        const Vector rhs = Eigen::Map<const Vector>(r_pi.data(), n);
        const auto lu = system.partialPivLu();
        Vector sol = lu.solve(rhs);
        sol += lu.solve(rhs - system * sol);  // one refinement step
        std::copy(sol.data(), sol.data() + n, v.begin());
    } else {
        std::vector<double> next(n_states);
        while (true) {
            for (std::size_t s = 0; s < n_states; ++s) {
                double acc = 0.0;
                for (std::size_t t = 0; t < n_states; ++t) acc += p_pi(s, t) * v[t];
                next[s] = r_pi[s] + mdp.gamma() * acc;
            }
            const double change = sup_diff(next, v);
            v.swap(next);
            if (change <= kIterativeTol) break;
        }
    }

    std::vector<double> q(n_states * n_actions);
    kernels::bellman_backup(mdp, v, q);
    return ValueTables::from_qv(n_states, n_actions, std::move(q), std::move(v));
}

double expected_return(const TabularMDP& mdp, const PolicyTable& pi) {
    const auto values = policy_evaluation(mdp, pi);
    double j = 0.0;
    for (std::size_t s = 0; s < mdp.n_states(); ++s) j += mdp.initial()[s] * values.V(s);
    return j;
}

OccupancyVector occupancy(const TabularMDP& mdp, const PolicyTable& pi) {
    require_fits(mdp, pi, "occupancy");
    const std::size_t n_states = mdp.n_states();
    const std::size_t n_actions = mdp.n_actions();
    const Matrix p_pi = policy_matrix(mdp, pi);

    std::vector<double> d(n_states, 0.0);
    const auto rho0 = mdp.initial();
    if (n_states <= kDirectSolveLimit) {
        const auto n = static_cast<Eigen::Index>(n_states);
        const Matrix system = Matrix::Identity(n, n) - mdp.gamma() * p_pi.transpose();
        const Vector rhs = Eigen::Map<const Vector>(rho0.data(), n);
        const auto lu = system.partialPivLu();
        Vector sol = lu.solve(rhs);
        sol += lu.solve(rhs - system * sol);
        std::copy(sol.data(), sol.data() + n, d.begin());
    } else {
        std::vector<double> next(n_states);
        while (true) {
            for (std::size_t t = 0; t < n_states; ++t) next[t] = rho0[t];
            for (std::size_t s = 0; s < n_states; ++s)
                for (std::size_t t = 0; t < n_states; ++t) next[t] += mdp.gamma() * p_pi(s, t) * d[s];
            const double change = sup_diff(next, d);
            d.swap(next);
            if (change <= kIterativeTol) break;
        }
    }

    OccupancyVector out;
    out.sa.resize(n_states * n_actions);
    for (std::size_t s = 0; s < n_states; ++s)
        for (std::size_t a = 0; a < n_actions; ++a) out.sa[s * n_actions + a] = d[s] * pi(s, a);
    out.d = std::move(d);
    return out;
}

double bellman_residual(const TabularMDP& mdp, std::span<const double> v) {
    if (v.size() != mdp.n_states()) throw InvalidInput("bellman_residual: wrong value size");
    std::vector<double> q(mdp.n_states() * mdp.n_actions());
    std::vector<double> tv(mdp.n_states());
    kernels::serial::bellman_backup(mdp, v, q);
    kernels::serial::action_max(mdp.n_states(), mdp.n_actions(), q, nullptr, tv);
    return sup_diff(tv, v);
}

} // namespace dvdf
