#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dvdf/core/errors.hpp"
#include "dvdf/core/random_instances.hpp"
#include "dvdf/core/solve.hpp"
#include "dvdf/env/behavior.hpp"
#include "dvdf/env/dataset.hpp"
#include "dvdf/env/gridworld.hpp"
#include "dvdf/learners/critic.hpp"
#include "dvdf/learners/operators.hpp"
#include "support.hpp"

using namespace dvdf;

namespace {

template <class F>
double bisect(F f, double lo, double hi) {
    // f(lo) > 0 > f(hi), f decreasing
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double expectile_oracle(const std::vector<double>& x, const std::vector<double>& w, double tau) {
    auto g = [&](double v) {
        double up = 0.0, down = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] > v) up += w[i] * (x[i] - v);
            else down += w[i] * (v - x[i]);
        }
        return tau * up - (1.0 - tau) * down;
    };
    return bisect(g, *std::min_element(x.begin(), x.end()) - 1.0, *std::max_element(x.begin(), x.end()) + 1.0);
}

double sparse_oracle(const std::vector<double>& x, const std::vector<double>& w, double alpha) {
    double W = 0.0;
    for (double wi : w) W += wi;
    auto g = [&](double v) {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * std::max(0.0, 1.0 + (x[i] - v) / (2.0 * alpha));
        return acc / W - 1.0;
    };
    return bisect(g, *std::min_element(x.begin(), x.end()) - 10.0, *std::max_element(x.begin(), x.end()) + 10.0);
}

Dataset dataset_of(std::vector<DatasetRecord> records, std::size_t S, std::size_t A, double gamma) {
    Dataset d;
    d.records = std::move(records);
    d.n_states = S;
    d.n_actions = A;
    d.gamma = gamma;
    d.quality = "random";
    d.behavior = empirical_behavior(d);
    return d;
}

DatasetRecord rec(std::size_t s, std::size_t a, double r, std::size_t s_next, bool done = false) {
    DatasetRecord x;
    x.s = s;
    x.a = a;
    x.r = r;
    x.s_next = s_next;
    x.done = done;
    x.quality = "random";
    return x;
}

GridSpec grid5(double reward, double slip) {
    GridSpec g;
    g.width = 5;
    g.height = 5;
    g.terminal_cells = {24};
    g.reward_map = {{24, reward}};
    g.slip_prob = slip;
    g.gamma = 0.9;
    return g;
}

} // namespace

TEST_CASE("expectile") {
    const std::vector<double> x{0.0, 1.0}, w{1.0, 1.0};
    CHECK(expectile(x, w, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(expectile(x, w, 0.7) == doctest::Approx(expectile_oracle(x, w, 0.7)).epsilon(1e-12));
    CHECK(expectile(x, w, 0.7) == doctest::Approx(0.7).epsilon(1e-12));

    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 8);
        std::vector<double> xs(n), ws(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = uniform(rng, -5.0, 5.0);
            ws[i] = uniform(rng, 0.1, 3.0);
        }
        if (trial % 5 == 0 && n > 1) xs[1] = xs[0];
        const double tau = uniform(rng, 0.01, 0.99);
        const double v = expectile(xs, ws, tau);
        CHECK(v == doctest::Approx(expectile_oracle(xs, ws, tau)).epsilon(1e-9));
        CHECK(v >= *std::min_element(xs.begin(), xs.end()) - 1e-12);
        CHECK(v <= *std::max_element(xs.begin(), xs.end()) + 1e-12);
    }
    // tau = 0.5 is the weighted mean
    const std::vector<double> x3{1.0, 2.0, 6.0}, w3{1.0, 2.0, 1.0};
    CHECK(expectile(x3, w3, 0.5) == doctest::Approx((1.0 + 4.0 + 6.0) / 4.0).epsilon(1e-12));
}

TEST_CASE("sparse value") {
    SUBCASE("single action is its own value") {
        const std::vector<double> x{2.5}, w{4.0};
        for (double alpha : {0.01, 1.0, 100.0}) {
            const double v = sparse_value(x, w, alpha);
            CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
            CHECK(v <= 2.5 + 2.0 * alpha);
        }
    }
    SUBCASE("equal values share an advantage") {
        const std::vector<double> x{1.0, 1.0}, w{1.0, 3.0};
        const double v = sparse_value(x, w, 0.3);
        CHECK(x[0] - v == doctest::Approx(x[1] - v));
        CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("matches a bisection oracle") {
        Rng rng(4);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 1 + uniform_index(rng, 8);
            std::vector<double> xs(n), ws(n);
            double mean = 0.0, W = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                xs[i] = uniform(rng, -2.0, 2.0);
                ws[i] = uniform(rng, 0.1, 3.0);
                mean += ws[i] * xs[i];
                W += ws[i];
            }
            mean /= W;
            const double alpha = std::exp(uniform(rng, std::log(0.01), std::log(10.0)));
            const double v = sparse_value(xs, ws, alpha);
            CHECK(v == doctest::Approx(sparse_oracle(xs, ws, alpha)).epsilon(1e-9));
            CHECK(v >= mean - 1e-12);
            CHECK(v <= *std::max_element(xs.begin(), xs.end()) + 1e-12);
        }
    }
    SUBCASE("small alpha approaches the max, large alpha the mean") {
        const std::vector<double> x{0.0, 1.0, 3.0}, w{1.0, 1.0, 1.0};
        CHECK(sparse_value(x, w, 1e-4) == doctest::Approx(3.0).epsilon(1e-3));
        CHECK(sparse_value(x, w, 1e4) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("in-sample optimal policy") {
    SUBCASE("full coverage equals value iteration") {
        Rng rng(5);
        const auto m = random_mdp(rng, 6, 3, 0.9);
        const auto d = collect(m, PolicyTable::uniform(6, 3), 5000, 1, Domain::source, "random");
        for (bool b : support_mask(d)) REQUIRE(b);
        const auto ins = in_sample_optimal(m, d);
        const auto vi = value_iteration(m, 1e-12);
        for (std::size_t s = 0; s < 6; ++s) {
            CHECK(ins.values.V(s) == doctest::Approx(vi.values.V(s)).epsilon(1e-9));
            CHECK(ins.policy.argmax(s) == vi.policy.argmax(s));
        }
    }
    SUBCASE("one action per state forces the policy") {
        Rng rng(6);
        const auto m = random_mdp(rng, 5, 4, 0.9);
        const std::vector<std::size_t> forced{3, 0, 2, 1, 3};
        const auto mu = PolicyTable::deterministic(4, forced);
        const auto d = collect(m, mu, 3000, 2, Domain::source, "expert");
        const auto ins = in_sample_optimal(m, d);
        const auto truth = test::iterate_values(m, mu, 3000);
        for (std::size_t s = 0; s < 5; ++s) {
            CHECK(ins.policy(s, forced[s]) == 1.0);
            CHECK(ins.values.V(s) == doctest::Approx(truth[s]).epsilon(1e-9));
        }
    }
    SUBCASE("partial coverage matches enumeration over supported policies") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(100 + seed);
            const std::size_t S = 4, A = 3;
            const auto m = random_mdp(rng, S, A, 0.85);
            std::vector<double> probs(S * A, 0.0);
            for (std::size_t s = 0; s < S; ++s) {
                const std::size_t keep = 1 + uniform_index(rng, A);
                for (std::size_t a = 0; a < keep; ++a) probs[s * A + (a + s) % A] = 1.0 / keep;
            }
            const auto d = collect(m, PolicyTable(S, A, probs), 400, seed, Domain::source, "random");
            std::vector<bool> seen(S * A, false), state_seen(S, false);
            for (const auto& r : d.records) {
                seen[r.s * A + r.a] = true;
                state_seen[r.s] = true;
            }
            std::vector<double> best(S, -1e300);
            for (const auto& acts : test::all_deterministic(S, A)) {
                bool ok = true;
                for (std::size_t s = 0; s < S; ++s)
                    if (state_seen[s] && !seen[s * A + acts[s]]) ok = false;
                if (!ok) continue;
                const auto v = test::iterate_values(m, PolicyTable::deterministic(A, acts), 2000);
                for (std::size_t s = 0; s < S; ++s) best[s] = std::max(best[s], v[s]);
            }
            const auto ins = in_sample_optimal(m, d);
            const auto v_pi = test::iterate_values(m, ins.policy, 2000);
            for (std::size_t s = 0; s < S; ++s) {
                CHECK(ins.values.V(s) == doctest::Approx(best[s]).epsilon(1e-8));
                CHECK(v_pi[s] == doctest::Approx(best[s]).epsilon(1e-8));
                if (state_seen[s]) CHECK(seen[s * A + ins.policy.argmax(s)]);
            }
        }
    }
}

TEST_CASE("critic fixed points") {
    const auto m = make_gridworld(grid5(1.0, 0.1));
    BehaviorSpec spec;
    spec.quality = Quality::medium;
    const auto d = collect(m, make_behavior(m, spec), 4000, 9, Domain::source, "medium");
    const auto counts = pair_counts(d);

    // Bellman residual of Q against the raw records.
    auto q_residual = [&](const PretrainedCritic& c) {
        std::vector<double> sum(25 * kGridActions, 0.0);
        for (const auto& r : d.records)
            sum[r.s * kGridActions + r.a] += r.r + (r.done ? 0.0 : d.gamma * c.values.V(r.s_next));
        double worst = 0.0;
        for (std::size_t i = 0; i < sum.size(); ++i)
            if (counts[i] > 0) worst = std::max(worst, std::abs(sum[i] / counts[i] - c.values.q[i]));
        return worst;
    };

    SUBCASE("iql at tau 0.5 is the count-weighted mean") {
        IqlConfig cfg;
        cfg.tau = 0.5;
        const auto c = fit_iql(d, cfg);
        CHECK(c.converged);
        CHECK(q_residual(c) < 1e-8);
        for (std::size_t s = 0; s < 25; ++s) {
            double num = 0.0, den = 0.0;
            for (std::size_t a = 0; a < kGridActions; ++a) {
                num += counts[s * kGridActions + a] * c.values.Q(s, a);
                den += counts[s * kGridActions + a];
            }
            if (den > 0) CHECK(c.values.V(s) == doctest::Approx(num / den).epsilon(1e-9));
            else CHECK(c.values.V(s) == 0.0);
        }
    }
    SUBCASE("iql per-state expectile and sql per-state root") {
        const auto iql = fit_iql(d, IqlConfig{});
        const auto sql = fit_sql(d, SqlConfig{});
        CHECK(q_residual(iql) < 1e-8);
        CHECK(q_residual(sql) < 1e-8);
        for (std::size_t s = 0; s < 25; ++s) {
            std::vector<double> qi, qs, w;
            for (std::size_t a = 0; a < kGridActions; ++a)
                if (counts[s * kGridActions + a] > 0) {
                    qi.push_back(iql.values.Q(s, a));
                    qs.push_back(sql.values.Q(s, a));
                    w.push_back(counts[s * kGridActions + a]);
                }
            if (w.empty()) continue;
            CHECK(iql.values.V(s) == doctest::Approx(expectile_oracle(qi, w, 0.7)).epsilon(1e-8));
            CHECK(sql.values.V(s) == doctest::Approx(sparse_oracle(qs, w, 0.1)).epsilon(1e-8));
        }
    }
    SUBCASE("advantage table is consistent") {
        for (const auto& c : {fit_iql(d, IqlConfig{}), fit_sql(d, SqlConfig{})}) {
            CHECK(c.values.advantage_defect() <= 1e-12);
            for (std::size_t i = 0; i < c.values.q.size(); ++i)
                if (counts[i] == 0) CHECK(c.values.adv[i] == 0.0);
        }
    }
    SUBCASE("high expectile approaches the in-support max") {
        const auto full = collect(m, PolicyTable::uniform(25, kGridActions), 20000, 4, Domain::source, "random");
        IqlConfig cfg;
        cfg.tau = 0.99;
        const auto c = fit_iql(full, cfg);
        const auto star = in_sample_optimal(empirical_mdp(full), full);
        double lo = 1e300, hi = -1e300;
        for (double v : star.values.v) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        for (std::size_t s = 0; s < 25; ++s) CHECK(std::abs(c.values.V(s) - star.values.V(s)) <= 0.05 * (hi - lo));
    }
    SUBCASE("deterministic") {
        const auto a = fit_sql(d, SqlConfig{});
        const auto b = fit_sql(d, SqlConfig{});
        CHECK(a.values.q == b.values.q);
        CHECK(a.policy.probs().size() == b.policy.probs().size());
        CHECK(std::equal(a.policy.probs().begin(), a.policy.probs().end(), b.policy.probs().begin()));
    }
    SUBCASE("iteration cap is reported") {
        IqlConfig cfg;
        cfg.iters = 2;
        const auto c = fit_iql(d, cfg);
        CHECK_FALSE(c.converged);
        CHECK(c.iterations == 2);
        CHECK(c.residual > cfg.tol);
        CHECK(c.residuals.size() == 2);
    }
    SUBCASE("bad configs") {
        IqlConfig iql;
        iql.tau = 1.0;
        CHECK_THROWS_AS(fit_iql(d, iql), InvalidInput);
        SqlConfig sql;
        sql.alpha = 0.0;
        CHECK_THROWS_AS(fit_sql(d, sql), InvalidInput);
        CHECK_THROWS_AS(fit_sql(Dataset{}, SqlConfig{}), InvalidInput);
    }
}

TEST_CASE("small hand-built datasets") {
    SUBCASE("sql with one action per state has zero advantage") {
        const auto d = dataset_of({rec(0, 1, 1.0, 1), rec(1, 0, 0.0, 0)}, 2, 2, 0.5);
        const auto c = fit_sql(d, SqlConfig{});
        // V0 = 1 + 0.5 V1, V1 = 0.5 V0
        CHECK(c.values.V(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
        CHECK(c.values.V(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
        CHECK(c.values.A(0, 1) == doctest::Approx(0.0));
        CHECK(c.policy(0, 1) == 1.0);
    }
    SUBCASE("terminal records do not bootstrap") {
        const auto d = dataset_of({rec(0, 0, 2.0, 1, true), rec(1, 0, 5.0, 1)}, 2, 1, 0.5);
        const auto c = fit_iql(d, IqlConfig{});
        CHECK(c.values.Q(0, 0) == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(c.values.V(1) == doctest::Approx(10.0).epsilon(1e-8));
    }
}

TEST_CASE("awr extraction") {
    const auto d = dataset_of({rec(0, 0, 0, 1), rec(0, 0, 0, 1), rec(0, 1, 0, 1), rec(0, 2, 0, 1), rec(1, 2, 0, 0)}, 3,
                              3, 0.9);
    auto adv_of = [](std::vector<double> a) {
        std::vector<double> v(3, 0.0);
        return ValueTables::from_qv(3, 3, std::move(a), v);
    };
    SUBCASE("zero advantage gives the behavior frequencies") {
        const auto pi = awr_extract(d, adv_of(std::vector<double>(9, 0.0)), 3.0);
        CHECK(pi(0, 0) == doctest::Approx(0.5));
        CHECK(pi(0, 1) == doctest::Approx(0.25));
        CHECK(pi(0, 2) == doctest::Approx(0.25));
        CHECK(pi(1, 2) == 1.0);
        for (std::size_t a = 0; a < 3; ++a) CHECK(pi(2, a) == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("large beta concentrates on the best observed action") {
        const auto pi = awr_extract(d, adv_of({0.0, 0.2, -0.5, 0, 0, 0, 0, 0, 0}), 50.0);
        CHECK(pi(0, 1) > 0.99);
        // unobserved action at state 1 never gets mass
        const auto pi2 = awr_extract(d, adv_of({0, 0, 0, 100.0, 0, 0, 0, 0, 0}), 50.0);
        CHECK(pi2(1, 0) == 0.0);
    }
    SUBCASE("constant shift leaves the policy") {
        Rng rng(8);
        for (int t = 0; t < 50; ++t) {
            std::vector<double> a(9), b(9);
            for (std::size_t s = 0; s < 3; ++s) {
                const double c = uniform(rng, -100.0, 100.0);
                for (std::size_t k = 0; k < 3; ++k) {
                    a[s * 3 + k] = uniform(rng, -1.0, 1.0);
                    b[s * 3 + k] = a[s * 3 + k] + c;
                }
            }
            const auto pa = awr_extract(d, adv_of(a), 3.0);
            const auto pb = awr_extract(d, adv_of(b), 3.0);
            for (std::size_t s = 0; s < 3; ++s) {
                CHECK(pa.argmax(s) == pb.argmax(s));
                for (std::size_t k = 0; k < 3; ++k) CHECK(pa(s, k) == doctest::Approx(pb(s, k)).epsilon(1e-9));
            }
        }
    }
    SUBCASE("no overflow") {
        const auto pi = awr_extract(d, adv_of({1e6, 0, -1e6, 0, 0, 0, 0, 0, 0}), 3.0);
        CHECK(pi(0, 0) == 1.0);
        CHECK(std::isfinite(pi(0, 1)));
    }
    SUBCASE("bad beta") { CHECK_THROWS_AS(awr_extract(d, adv_of(std::vector<double>(9, 0.0)), 0.0), InvalidInput); }
}

TEST_CASE("one awr step improves on the empirical behavior") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const auto m = random_mdp(rng, 6, 3, 0.9);
        const auto d = collect(m, random_policy(rng, 6, 3), 600, seed, Domain::source, "random");
        const auto mu = empirical_behavior(d);
        const auto adv = policy_evaluation(empirical_mdp(d), mu);
        const auto pi = awr_extract(d, adv, 3.0);
        const auto counts = pair_counts(d);
        for (std::size_t s = 0; s < 6; ++s) {
            double seen = 0.0, gain = 0.0;
            for (std::size_t a = 0; a < 3; ++a) {
                seen += counts[s * 3 + a];
                gain += (pi(s, a) - mu(s, a)) * adv.A(s, a);
            }
            if (seen > 0) CHECK(gain >= -1e-9);
        }
    }
}

TEST_CASE("advantage error") {
    const auto d = dataset_of({rec(0, 0, 0, 1), rec(0, 1, 0, 1), rec(1, 0, 0, 0), rec(1, 1, 0, 0)}, 2, 2, 0.9);
    const auto truth = ValueTables::from_qv(2, 2, {1.0, -2.0, 1e-6, 4.0}, {0.0, 0.0});
    CHECK(advantage_error(truth, truth, d, 1e-3).value == 0.0);
    const auto twice = ValueTables::from_qv(2, 2, {2.0, -4.0, 5.0, 8.0}, {0.0, 0.0});
    const auto e = advantage_error(twice, truth, d, 1e-3);
    CHECK(e.value == doctest::Approx(1.0));
    CHECK(e.kept == 3);
    CHECK(e.excluded == 1);
    CHECK(default_eps_denom(truth, d) == doctest::Approx(4e-3));
    CHECK_THROWS_AS(advantage_error(truth, truth, d, 10.0), UndefinedMetric);
    CHECK_THROWS_AS(advantage_error(truth, truth, d, 0.0), InvalidInput);
}

TEST_CASE("sql estimates advantages closer than iql on a dominant-action dataset") {
    const auto m = make_gridworld(grid5(10.0, 0.1));
    const auto expert = value_iteration(m, 1e-12).policy;
    const auto mu = soften(expert, 0.8);
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = collect(m, mu, 2000, seed, Domain::source, "medium");
        const auto truth = policy_evaluation(m, in_sample_optimal(m, d).policy);
        const double eps = default_eps_denom(truth, d);
        const double e_sql = advantage_error(fit_sql(d, SqlConfig{}).values, truth, d, eps).value;
        const double e_iql = advantage_error(fit_iql(d, IqlConfig{}).values, truth, d, eps).value;
        wins += std::abs(e_sql) <= std::abs(e_iql);
    }
    CHECK(wins >= 8);
}

TEST_CASE("critic serialization") {
    const auto m = make_gridworld(grid5(1.0, 0.1));
    const auto d = collect(m, PolicyTable::uniform(25, kGridActions), 1000, 2, Domain::source, "random");
    const auto c = fit_sql(d, SqlConfig{});
    std::stringstream ss;
    write_critic(ss, c);
    const auto back = read_critic(ss);
    CHECK(back.learner == c.learner);
    CHECK(back.values.q == c.values.q);
    CHECK(back.values.v == c.values.v);
    CHECK(back.values.advantage_defect() <= 1e-12);
    CHECK(std::equal(back.policy.probs().begin(), back.policy.probs().end(), c.policy.probs().begin()));

    std::istringstream bad("pretrained-critic v0\n");
    CHECK_THROWS_AS(read_critic(bad), InvalidInput);
    std::string text = ss.str();
    std::istringstream cut(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(read_critic(cut), InvalidInput);
}
