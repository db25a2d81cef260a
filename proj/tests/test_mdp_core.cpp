#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dvdf/core/bounds.hpp"
#include "dvdf/core/errors.hpp"
#include "dvdf/core/kernels.hpp"
#include "dvdf/core/mdp_io.hpp"
#include "dvdf/core/random_instances.hpp"
#include "dvdf/core/solve.hpp"
#include "support.hpp"

using namespace dvdf;
using dvdf::test::make_mdp;

namespace {

// State 0 moves to state 1, which is absorbing and pays 1 per step.
TabularMDP two_state_chain(double gamma) {
    return make_mdp({{{0.0, 1.0}}, {{0.0, 1.0}}}, {{0.0}, {1.0}}, {1.0, 0.0}, gamma);
}

// Same MDP with states relabeled by perm (new id of old state s is perm[s]).
TabularMDP permute_states(const TabularMDP& m, const std::vector<std::size_t>& perm) {
    const std::size_t S = m.n_states();
    const std::size_t A = m.n_actions();
    std::vector<double> p(S * A * S), r(S * A), rho(S);
    for (std::size_t s = 0; s < S; ++s) {
        rho[perm[s]] = m.initial()[s];
        for (std::size_t a = 0; a < A; ++a) {
            r[perm[s] * A + a] = m.reward(s, a);
            for (std::size_t n = 0; n < S; ++n) p[(perm[s] * A + a) * S + perm[n]] = m.p(s, a, n);
        }
    }
    return TabularMDP(S, A, p, r, rho, m.gamma(), m.r_max());
}

} // namespace

TEST_CASE("mdp construction rejects malformed tables") {
    CHECK_THROWS_AS(make_mdp({{{0.5, 0.4}}, {{0.0, 1.0}}}, {{0.0}, {0.0}}, {1.0, 0.0}, 0.9), InvalidInput);
    CHECK_THROWS_AS(make_mdp({{{0.0, 1.0}}, {{0.0, 1.0}}}, {{0.0}, {2.0}}, {1.0, 0.0}, 0.9), InvalidInput);
    CHECK_THROWS_AS(make_mdp({{{0.0, 1.0}}, {{0.0, 1.0}}}, {{0.0}, {0.0}}, {0.6, 0.6}, 0.9), InvalidInput);
    CHECK_THROWS_AS(make_mdp({{{0.0, 1.0}}, {{0.0, 1.0}}}, {{0.0}, {0.0}}, {1.0, 0.0}, 1.0), InvalidInput);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(make_mdp({{{nan, 1.0}}, {{0.0, 1.0}}}, {{0.0}, {0.0}}, {1.0, 0.0}, 0.9), InvalidInput);
    CHECK_THROWS_AS(make_mdp({{{0.0, 1.0}}, {{0.0, 1.0}}}, {{nan}, {0.0}}, {1.0, 0.0}, 0.9), InvalidInput);
}

TEST_CASE("value iteration on the two-state chain") {
    const auto m = two_state_chain(0.5);
    const auto sol = value_iteration(m, 1e-12);
    CHECK(sol.values.V(1) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(sol.values.V(0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sol.residual <= 1e-12);
}

TEST_CASE("zero reward gives zero optimal values") {
    Rng rng(3);
    auto base = random_mdp(rng, 4, 3, 0.9);
    const auto m = TabularMDP(4, 3, {base.transitions().begin(), base.transitions().end()},
                              std::vector<double>(12, 0.0), {base.initial().begin(), base.initial().end()}, 0.9, 1.0);
    const auto sol = value_iteration(m, 1e-12);
    for (double v : sol.values.v) CHECK(v == 0.0);
    // Every action ties, so the lowest index wins.
    for (std::size_t s = 0; s < 4; ++s) CHECK(sol.policy.argmax(s) == 0);
    CHECK(expected_return(m, PolicyTable::uniform(4, 3)) == 0.0);
}

TEST_CASE("value iteration matches enumeration of deterministic policies") {
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const auto m = random_mdp(rng, 5, 3, 0.9);
        const auto sol = value_iteration(m, 1e-11);
        CHECK(sol.residual <= 1e-11);
        CHECK(bellman_residual(m, sol.values.v) <= 1e-11);
        std::vector<double> best(5, -INFINITY);
        for (const auto& acts : test::all_deterministic(5, 3)) {
            const auto v = test::iterate_values(m, PolicyTable::deterministic(3, acts), 2000);
            for (std::size_t s = 0; s < 5; ++s) best[s] = std::max(best[s], v[s]);
        }
        for (std::size_t s = 0; s < 5; ++s) CHECK(sol.values.V(s) == doctest::Approx(best[s]).epsilon(1e-6));
    }
}

TEST_CASE("greedy tie-break takes the lowest action index") {
    const std::vector<double> q{1.0, 3.0, 3.0, 2.0, 2.0, 0.0};
    const auto pi = greedy_policy(2, 3, q);
    CHECK(pi.argmax(0) == 1);
    CHECK(pi.argmax(1) == 0);
    const std::vector<bool> allowed{true, false, true, false, true, true};
    const auto restricted = greedy_policy(2, 3, q, &allowed);
    CHECK(restricted.argmax(0) == 2);
    CHECK(restricted.argmax(1) == 1);
}

TEST_CASE("policy evaluation closed forms") {
    const auto loop = make_mdp({{{1.0}}}, {{0.3}}, {1.0}, 0.8);
    const auto vt = policy_evaluation(loop, PolicyTable::uniform(1, 1));
    CHECK(vt.V(0) == doctest::Approx(0.3 / 0.2).epsilon(1e-12));
    CHECK(vt.advantage_defect() <= 1e-12);

    const auto single = make_mdp({{{1.0}}}, {{1.0}}, {1.0}, 0.99);
    CHECK(expected_return(single, PolicyTable::uniform(1, 1)) == doctest::Approx(100.0).epsilon(1e-10));
}

TEST_CASE("policy evaluation agrees with Monte Carlo") {
    Rng rng(5);
    const auto m = random_mdp(rng, 5, 3, 0.9);
    const auto pi = random_policy(rng, 5, 3);
    const auto mc = test::monte_carlo_return(m, pi, 100000, 17);
    const double j = expected_return(m, pi);
    CHECK(std::abs(j - mc.mean) <= 3.0 * mc.stderr_);

    const auto vt = policy_evaluation(m, pi);
    for (std::size_t s = 0; s < 5; ++s) {
        CHECK(std::abs(vt.V(s)) <= m.r_max() / (1.0 - m.gamma()) + 1e-12);
        for (std::size_t a = 0; a < 3; ++a) {
            double q = m.reward(s, a);
            for (std::size_t n = 0; n < 5; ++n) q += m.gamma() * m.p(s, a, n) * vt.V(n);
            CHECK(vt.Q(s, a) == doctest::Approx(q).epsilon(1e-10));
        }
    }
}

TEST_CASE("occupancy convention and oracles") {
    SUBCASE("absorbing single state") {
        const auto m = make_mdp({{{1.0}}}, {{0.0}}, {1.0}, 0.75);
        const auto occ = occupancy(m, PolicyTable::uniform(1, 1));
        CHECK(occ.d[0] == doctest::Approx(4.0).epsilon(1e-12));
    }
    SUBCASE("tiny discount") {
        Rng rng(2);
        const auto m = random_mdp(rng, 4, 2, 1e-6);
        const auto occ = occupancy(m, PolicyTable::uniform(4, 2));
        for (std::size_t s = 0; s < 4; ++s) CHECK(occ.d[s] == doctest::Approx(m.initial()[s]).epsilon(1e-5));
    }
    SUBCASE("truncated power series") {
        Rng rng(8);
        for (int trial = 0; trial < 5; ++trial) {
            const auto m = random_mdp(rng, 6, 3, 0.9);
            const auto pi = random_policy(rng, 6, 3);
            const auto occ = occupancy(m, pi);
            std::vector<double> term(m.initial().begin(), m.initial().end()), sum = term;
            for (int t = 1; t < 400; ++t) {
                std::vector<double> next(6, 0.0);
                for (std::size_t s = 0; s < 6; ++s)
                    for (std::size_t a = 0; a < 3; ++a)
                        for (std::size_t n = 0; n < 6; ++n) next[n] += m.gamma() * term[s] * pi(s, a) * m.p(s, a, n);
                term = next;
                for (std::size_t s = 0; s < 6; ++s) sum[s] += term[s];
            }
            double total = 0.0;
            for (std::size_t s = 0; s < 6; ++s) {
                CHECK(std::abs(occ.d[s] - sum[s]) <= 1e-8);
                total += occ.d[s];
                for (std::size_t a = 0; a < 3; ++a) CHECK(occ.sa[s * 3 + a] == doctest::Approx(occ.d[s] * pi(s, a)));
            }
            CHECK(total == doctest::Approx(1.0 / (1.0 - m.gamma())).epsilon(1e-9));
        }
    }
}

TEST_CASE("performance difference identity on random instances") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = random_mdp(rng, 2 + trial % 5, 1 + trial % 3, 0.9);
        const auto mu = random_policy(rng, m.n_states(), m.n_actions());
        const auto ref = random_policy(rng, m.n_states(), m.n_actions());
        const auto occ = occupancy(m, mu);
        const auto vt = policy_evaluation(m, ref);
        double rhs = 0.0;
        for (std::size_t s = 0; s < m.n_states(); ++s)
            for (std::size_t a = 0; a < m.n_actions(); ++a) rhs += occ.d[s] * mu(s, a) * vt.A(s, a);
        CHECK(std::abs(expected_return(m, mu) - expected_return(m, ref) - rhs) <= 1e-6);
    }
}

TEST_CASE("expected return is invariant to relabeling states") {
    Rng rng(4);
    const auto m = random_mdp(rng, 5, 2, 0.9);
    const auto pi = random_policy(rng, 5, 2);
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    std::vector<double> probs(10);
    for (std::size_t s = 0; s < 5; ++s)
        for (std::size_t a = 0; a < 2; ++a) probs[perm[s] * 2 + a] = pi(s, a);
    const auto pm = permute_states(m, perm);
    CHECK(expected_return(pm, PolicyTable(5, 2, probs)) == doctest::Approx(expected_return(m, pi)).epsilon(1e-12));
}

TEST_CASE("tv_sup examples and metric properties") {
    const auto a = make_mdp({{{1.0, 0.0}}, {{0.0, 1.0}}}, {{0.0}, {0.0}}, {1.0, 0.0}, 0.9);
    const auto b = make_mdp({{{0.0, 1.0}}, {{0.0, 1.0}}}, {{0.0}, {0.0}}, {1.0, 0.0}, 0.9);
    const auto c = make_mdp({{{0.5, 0.5}}, {{0.0, 1.0}}}, {{0.0}, {0.0}}, {1.0, 0.0}, 0.9);
    CHECK(tv_sup(a, a) == 0.0);
    CHECK(tv_sup(a, b) == doctest::Approx(1.0));
    CHECK(tv_sup(c, a) == doctest::Approx(0.5));

    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_mdp(rng, 4, 2, 0.9);
        const auto y = perturbed_kernel(rng, x, 0.8);
        const auto z = perturbed_kernel(rng, x, 0.8);
        CHECK(tv_sup(x, y) == doctest::Approx(tv_sup(y, x)).epsilon(1e-15));
        CHECK(tv_sup(x, z) <= tv_sup(x, y) + tv_sup(y, z) + 1e-15);
        CHECK(tv_sup(x, y) >= 0.0);
        CHECK(tv_sup(x, y) <= 1.0);
    }
}

TEST_CASE("domains that differ beyond the kernel are rejected") {
    const auto a = two_state_chain(0.9);
    const auto other_gamma = two_state_chain(0.8);
    const auto other_reward = make_mdp({{{0.0, 1.0}}, {{0.0, 1.0}}}, {{0.5}, {1.0}}, {1.0, 0.0}, 0.9);
    const auto other_shape = make_mdp({{{1.0}}}, {{0.0}}, {1.0}, 0.9);
    CHECK_THROWS_AS(tv_sup(a, other_gamma), DomainMismatch);
    CHECK_THROWS_AS(tv_sup(a, other_reward), DomainMismatch);
    CHECK_THROWS_AS(tv_sup(a, other_shape), DomainMismatch);
}

TEST_CASE("bound constants") {
    const auto k = BoundConstants::from(0.5, 1.0);
    CHECK(k.c1 == doctest::Approx(4.0));
    CHECK(k.c2 == doctest::Approx(12.0));
}

TEST_CASE("lemma 1 bound") {
    const auto m = two_state_chain(0.9);
    const auto same = lemma1_bound(m, m, PolicyTable::uniform(2, 1));
    CHECK(same.lhs == 0.0);
    CHECK(same.rhs == 0.0);
    CHECK(same.holds);

    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const auto src = random_mdp(rng, 5, 2, 0.9);
        const auto tar = perturbed_kernel(rng, src, 1.0);
        const auto rep = lemma1_bound(src, tar, random_policy(rng, 5, 2));
        CHECK(rep.slack >= -1e-9);
        CHECK(rep.holds);
    }
}

TEST_CASE("proposition 1 bound") {
    Rng rng(14);
    SUBCASE("optimal policy on identical domains") {
        const auto m = random_mdp(rng, 4, 3, 0.9);
        const auto opt = value_iteration(m, 1e-12);
        const auto rep = prop1_bound(m, m, opt.policy, opt.policy);
        CHECK(rep.components.at("SubOpt") == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(rep.components.at("eps_opt") == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(rep.holds);
    }
    SUBCASE("random pairs") {
        for (int trial = 0; trial < 200; ++trial) {
            const double gamma = trial % 2 ? 0.9 : 0.5;
            const auto src = random_mdp(rng, 4, 2, gamma);
            const auto tar = perturbed_kernel(rng, src, 1.0);
            const auto rep = prop1_bound(src, tar, random_policy(rng, 4, 2), random_policy(rng, 4, 2));
            CHECK(rep.slack >= -1e-9);
        }
    }
}

TEST_CASE("bound report conventions") {
    const auto up = BoundReport::bound("b", 1.0, 3.0, 0.0);
    CHECK(up.slack == 2.0);
    CHECK(up.holds);
    const auto low = BoundReport::lower_bound("l", 1.0, 3.0, 0.0);
    CHECK(low.slack == -2.0);
    CHECK_FALSE(low.holds);
    const auto id = BoundReport::identity("i", 1.0, 1.0 + 1e-9, 1e-6);
    CHECK(id.holds);
    CHECK(id.slack == doctest::Approx(1e-9));
}

TEST_CASE("mdp text round trip is bit exact") {
    Rng rng(31);
    const auto m = random_mdp(rng, 4, 3, 0.93, 2.5);
    std::stringstream ss;
    write_mdp(ss, m);
    const auto back = read_mdp(ss);
    CHECK(back.n_states() == 4);
    CHECK(back.n_actions() == 3);
    CHECK(back.gamma() == m.gamma());
    CHECK(back.r_max() == m.r_max());
    for (std::size_t i = 0; i < m.transitions().size(); ++i) CHECK(back.transitions()[i] == m.transitions()[i]);
    for (std::size_t i = 0; i < m.rewards().size(); ++i) CHECK(back.rewards()[i] == m.rewards()[i]);
    for (std::size_t i = 0; i < 4; ++i) CHECK(back.initial()[i] == m.initial()[i]);

    const auto pi = random_policy(rng, 4, 3);
    std::stringstream ps;
    write_policy(ps, pi);
    const auto pi_back = read_policy(ps);
    for (std::size_t i = 0; i < pi.probs().size(); ++i) CHECK(pi_back.probs()[i] == pi.probs()[i]);

    std::stringstream bad("tabular-mdp v1\n1 1 0.9\n");
    CHECK_THROWS_AS(read_mdp(bad), InvalidInput);
}

TEST_CASE("serial and parallel kernels agree bit for bit") {
    Rng rng(41);
    const auto m = random_mdp(rng, 300, 4, 0.95);
    const auto pi = random_policy(rng, 300, 4);
    std::vector<double> v(300);
    for (double& x : v) x = uniform(rng, -5.0, 5.0);

    std::vector<double> q1(1200), q2(1200);
    kernels::serial::bellman_backup(m, v, q1);
    kernels::parallel::bellman_backup(m, v, q2);
    CHECK(q1 == q2);

    std::vector<bool> allowed(1200);
    for (std::size_t i = 0; i < allowed.size(); ++i) allowed[i] = uniform01(rng) < 0.5;
    std::vector<double> v1(300), v2(300);
    kernels::serial::action_max(300, 4, q1, &allowed, v1);
    kernels::parallel::action_max(300, 4, q1, &allowed, v2);
    CHECK(v1 == v2);
    kernels::serial::action_max(300, 4, q1, nullptr, v1);
    kernels::parallel::action_max(300, 4, q1, nullptr, v2);
    CHECK(v1 == v2);

    std::vector<double> k1(300 * 300), k2(300 * 300);
    kernels::serial::policy_kernel(m, pi, k1);
    kernels::parallel::policy_kernel(m, pi, k2);
    CHECK(k1 == k2);
}

TEST_CASE("large instances use the iterative evaluation path") {
    Rng rng(43);
    const auto m = random_mdp(rng, kDirectSolveLimit + 20, 2, 0.9);
    const auto pi = random_policy(rng, m.n_states(), 2);
    const auto vt = policy_evaluation(m, pi);
    const auto oracle = test::iterate_values(m, pi, 400);
    for (std::size_t s = 0; s < m.n_states(); s += 17) CHECK(vt.V(s) == doctest::Approx(oracle[s]).epsilon(1e-9));
}
