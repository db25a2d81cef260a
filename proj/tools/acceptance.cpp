// Acceptance run: one PASS/FAIL line per criterion. Exit status is 0 when the
// failing set equals --expect-fail exactly, 2 otherwise.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dvdf/core/random_instances.hpp"
#include "dvdf/core/solve.hpp"
#include "dvdf/env/behavior.hpp"
#include "dvdf/env/dataset.hpp"
#include "dvdf/env/gridworld.hpp"
#include "dvdf/env/shift.hpp"
#include "dvdf/harness/experiment.hpp"
#include "dvdf/learners/critic.hpp"
#include "dvdf/learners/operators.hpp"
#include "dvdf/pipeline/dvdf.hpp"
#include "dvdf/score/score_table.hpp"
#include "dvdf/score/stats.hpp"
#include "dvdf/theory/checks.hpp"

using namespace dvdf;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
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

Outcome pdl_identity() {
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        Rng rng(derive_seed(1, i));
        const std::size_t S = 2 + uniform_index(rng, 5), A = 2 + uniform_index(rng, 2);
        const auto m = random_mdp(rng, S, A, 0.9);
        const auto mu = random_policy(rng, S, A);
        const auto ref = random_policy(rng, S, A);
        worst = std::max(worst, check_pdl_identity(m, mu, ref).slack);
    }
    return {worst <= 1e-6, "max |lhs - rhs| " + fmt("%.3e", worst)};
}

Outcome prop3_identity() {
    double worst = 0.0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        Rng rng(derive_seed(2, i));
        const std::size_t S = 2 + uniform_index(rng, 5), A = 2 + uniform_index(rng, 2);
        const auto m = random_mdp(rng, S, A, 0.9);
        const auto data = collect(m, random_policy(rng, S, A), 300, i, Domain::source, "random");
        const auto critic = i % 2 ? fit_sql(data, SqlConfig{}) : fit_iql(data, IqlConfig{});
        worst = std::max(worst, check_prop3_identity(m, data, critic).slack);
    }
    return {worst <= 1e-6, "max |lhs - rhs| " + fmt("%.3e", worst)};
}

Outcome bound_validity() {
    const auto summary = run_theory_suite(3, 200);
    double lemma = 0.0, prop1 = 0.0;
    bool ok = true;
    for (const auto& row : summary.rows) {
        if (row.name == "lemma1") lemma = row.worst_slack;
        if (row.name == "prop1") prop1 = row.worst_slack;
        if ((row.name == "lemma1" || row.name == "prop1") && row.holds != row.instances) ok = false;
    }
    const auto mutated = run_theory_suite(3, 200, TheoryOptions{.mutate_c1 = true});
    std::size_t caught = 0;
    for (const auto& row : mutated.rows)
        if (row.name == "lemma1") caught = row.instances - row.holds;
    ok = ok && lemma >= -1e-9 && prop1 >= -1e-9 && caught >= 1;
    return {ok, "min slack lemma " + fmt("%.3e", lemma) + ", prop1 " + fmt("%.3e", prop1) + "; halved C1 fails " +
                    std::to_string(caught) + "/200"};
}

Outcome degeneracy(const ExperimentConfig& recipe) {
    ExperimentConfig cfg = recipe;
    cfg.shift.magnitude = 0.0;
    const auto domains = build_domains(cfg);
    const auto data = generate_data(cfg, domains, 0);
    const auto critic = pretrain(cfg, data.d_src);
    const auto scorer = exact_bayes_score(domains.target, source_next_distribution(data.d_src), 1.0);

    const FilterConfig fcfg{.lambda = 1.0, .xi = 1.0, .weight_mode = WeightMode::indicator_only};
    const auto rep = train_dvdf(data.d_tar, data.d_src, critic, scorer, fcfg, cfg.iql);
    Dataset src = data.d_src;
    src.domain = Domain::target;
    for (auto& r : src.records) r.domain = Domain::target;
    const std::vector<Dataset> parts{data.d_tar, src};
    const auto uni = fit_iql(mix(parts), cfg.iql);
    const double gap = sup_diff(rep.values.q, uni.values.q);

    Dataset none = data.d_src;
    none.records.clear();
    const auto empty = train_dvdf(data.d_tar, none, critic, scorer, cfg.filter, cfg.iql);
    const auto tar = fit_iql(data.d_tar, cfg.iql);
    const bool exact = empty.values.q == tar.values.q && empty.values.v == tar.values.v &&
                       std::equal(empty.policy.probs().begin(), empty.policy.probs().end(), tar.policy.probs().begin());
    return {gap <= 1e-8 && exact,
            "sup |Q - Q_union| " + fmt("%.3e", gap) + "; empty source " + (exact ? "identical" : "DIFFERS")};
}

double expert_share(const ResultRow& row) {
    std::size_t expert = 0, total = 0;
    std::size_t pos = 0;
    while (pos < row.composition.size()) {
        const auto end = std::min(row.composition.find(';', pos), row.composition.size());
        const auto item = row.composition.substr(pos, end - pos);
        const auto eq = item.find('=');
        const auto n = std::stoul(item.substr(eq + 1));
        total += n;
        if (item.substr(0, eq) == "expert") expert += n;
        pos = end + 1;
    }
    return total ? static_cast<double>(expert) / total : 0.0;
}

Outcome motivating(const ExperimentConfig& recipe) {
    ExperimentConfig cfg = recipe;
    cfg.methods = {"dvdf", "value_only", "dynamics_only"};
    const auto rows = run_experiment(cfg);
    double j[3] = {0, 0, 0}, share_dvdf = 0, share_dyn = 0;
    int wins = 0;
    const auto n = static_cast<double>(cfg.seeds.size());
    for (std::size_t i = 0; i + 2 < rows.size(); i += 3) {
        for (int k = 0; k < 3; ++k) j[k] += rows[i + k].j_target / n;
        wins += rows[i].j_target > rows[i + 2].j_target;
        share_dvdf += expert_share(rows[i]) / n;
        share_dyn += expert_share(rows[i + 2]) / n;
    }
    const bool order = j[0] > j[1] && j[1] > j[2];
    const bool ok = order && wins >= 9 && share_dvdf >= 0.2 && share_dyn < 0.05;
    return {ok, "mean J dvdf " + fmt("%.3f", j[0]) + " > value_only " + fmt("%.3f", j[1]) + " > dynamics_only " +
                    fmt("%.3f", j[2]) + (order ? " (holds)" : " (violated)") + "; dvdf wins " +
                    std::to_string(wins) + "/10; expert share dvdf " + fmt("%.3f", share_dvdf) +
                    " (need >= 0.20), lambda=1 " + fmt("%.3f", share_dyn) + " (need < 0.05)"};
}

Outcome nce_fidelity() {
    const auto base = make_gridworld(grid5(1.0, 0.2));
    ShiftSpec sh;
    sh.kind = ShiftKind::kernel_perturb;
    sh.actions = {0, 1, 2, 3, 4};
    sh.magnitude = 0.5;
    sh.seed = 3;
    const auto shifted = apply_shift(base, sh);
    const auto mu = PolicyTable::uniform(25, kGridActions);
    double worst = 1.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto tar = collect(base, mu, 5000, 100 + seed, Domain::target, "random");
        const auto src = collect(shifted, mu, 20000, 200 + seed, Domain::source, "random");
        const auto model = train_nce(tar, src, NceConfig{.seed = seed});
        const auto oracle = exact_bayes_score(base, source_next_distribution(src), 1.0);
        Dataset head = src;
        head.records.resize(1000);
        const auto a = score_dataset(model, head), b = score_dataset(oracle, head);
        worst = std::min(worst, spearman(a.values, b.values));
    }
    const auto tar = collect(base, mu, 5000, 1, Domain::target, "random");
    const auto src = collect(base, mu, 20000, 2, Domain::source, "random");
    const double loss = train_nce(tar, src, NceConfig{}).final_loss;
    const double rel = std::abs(loss - std::log(2.0)) / std::log(2.0);
    return {worst >= 0.9 && rel <= 0.05, "min Spearman over 10 seeds " + fmt("%.3f", worst) +
                                             "; identical-domain loss " + fmt("%.4f", loss) + " (" +
                                             fmt("%.1f", 100 * rel) + "% from log 2)"};
}

Outcome sql_vs_iql() {
    const auto m = make_gridworld(grid5(10.0, 0.1));
    const auto mu = soften(value_iteration(m, 1e-12).policy, 0.8);
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = collect(m, mu, 2000, seed, Domain::source, "medium");
        const auto truth = policy_evaluation(m, in_sample_optimal(m, d).policy);
        const double eps = default_eps_denom(truth, d);
        const double e_sql = advantage_error(fit_sql(d, SqlConfig{}).values, truth, d, eps).value;
        const double e_iql = advantage_error(fit_iql(d, IqlConfig{}).values, truth, d, eps).value;
        wins += std::abs(e_sql) <= std::abs(e_iql);
    }
    return {wins >= 8, "|E_sql| <= |E_iql| in " + std::to_string(wins) + "/10 seeds"};
}

Outcome sweeps(const ExperimentConfig& recipe) {
    auto means = [](const std::vector<ResultRow>& rows, bool by_lambda) {
        std::vector<std::pair<double, double>> out;
        for (const auto& m : summarize(rows)) out.emplace_back(by_lambda ? m.lambda : m.xi, m.mean_j);
        return out;
    };
    const auto lam = means(run_sweep(recipe, SweepParam::lambda, {0.0, 0.3, 0.5, 0.7, 0.9, 1.0}), true);
    const auto best = *std::max_element(lam.begin(), lam.end(), [](auto& a, auto& b) { return a.second < b.second; });
    const bool interior = best.first > 0.0 && best.first < 1.0;
    const auto xi = means(run_sweep(recipe, SweepParam::xi, {0.25, 0.5, 0.75, 1.0}), false);
    double j_half = 0, j_one = 0;
    for (const auto& [x, j] : xi) {
        if (x == 0.5) j_half = j;
        if (x == 1.0) j_one = j;
    }
    std::string detail = "lambda sweep max at " + fmt("%.1f", best.first) + " (J";
    for (const auto& [l, j] : lam) detail += " " + fmt("%.3f", j);
    detail += "); xi=0.5 J " + fmt("%.3f", j_half) + " vs xi=1 J " + fmt("%.3f", j_one);
    return {interior && j_one <= j_half, detail};
}

Outcome expectile_check() {
    const std::vector<double> x{0.0, 1.0}, w{1.0, 1.0};
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double v = 0.5 * (lo + hi);
        (0.7 * (1.0 - v) > 0.3 * v ? lo : hi) = v;
    }
    const double err07 = std::abs(expectile(x, w, 0.7) - 0.5 * (lo + hi));
    Rng rng(9);
    double err05 = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + uniform_index(rng, 50);
        std::vector<double> xs(n), ws(n, 1.0);
        double mean = 0.0;
        for (double& v : xs) mean += (v = uniform(rng, -10.0, 10.0)) / n;
        err05 = std::max(err05, std::abs(expectile(xs, ws, 0.5) - mean));
    }
    return {err07 <= 1e-9 && err05 <= 1e-9,
            "tau 0.7 error " + fmt("%.2e", err07) + ", tau 0.5 vs mean " + fmt("%.2e", err05)};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria 1-9"};
    std::string config = std::string(DVDF_SOURCE_DIR) + "/configs/motivating.json";
    std::vector<int> expect_fail;
    app.add_option("--config", config, "motivating recipe");
    app.add_option("--expect-fail", expect_fail, "criteria known to fail")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const auto recipe = load_config(config);
    struct Criterion {
        int id;
        double limit_s;  // 0 = no runtime limit
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, 5, pdl_identity},
        {2, 5, prop3_identity},
        {3, 30, bound_validity},
        {4, 0, [&] { return degeneracy(recipe); }},
        {5, 120, [&] { return motivating(recipe); }},
        {6, 0, nce_fidelity},
        {7, 0, sql_vs_iql},
        {8, 600, [&] { return sweeps(recipe); }},
        {9, 0, expectile_check},
    };

    std::set<int> failed;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0 && secs >= c.limit_s) {
            o.pass = false;
            o.detail += "; over the " + fmt("%.0f", c.limit_s) + " s limit";
        }
        if (!o.pass) failed.insert(c.id);
        std::printf("criterion %d: %s  %s  [%.2f s]\n", c.id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    const std::set<int> expected(expect_fail.begin(), expect_fail.end());
    std::printf("%zu/%zu criteria pass", criteria.size() - failed.size(), criteria.size());
    if (!expected.empty()) std::printf("; expected failures:%s", expected == failed ? " as recorded" : " MISMATCH");
    std::printf("\n");
    return failed == expected ? 0 : 2;
}
