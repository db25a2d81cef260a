#include "dvdf/pipeline/dvdf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "dvdf/core/errors.hpp"
#include "dvdf/core/solve.hpp"
#include "dvdf/learners/transition_stats.hpp"
#include "dvdf/score/score_table.hpp"
#include "dvdf/score/stats.hpp"

namespace dvdf {

std::string to_string(WeightMode m) {
    return m == WeightMode::indicator_times_g ? "indicator_times_g" : "indicator_only";
}

WeightMode parse_weight_mode(const std::string& text) {
    if (text == "indicator_times_g") return WeightMode::indicator_times_g;
    if (text == "indicator_only") return WeightMode::indicator_only;
    throw InvalidInput("unknown weight mode '" + text + "'");
}

double combined_score(double h_norm, double a_norm, double lambda) {
    auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!unit(h_norm) || !unit(a_norm) || !unit(lambda)) throw InvalidInput("combined_score: input outside [0, 1]");
    return std::clamp(lambda * h_norm + (1.0 - lambda) * a_norm, 0.0, 1.0);
}

Selection select_top_quantile(std::span<const double> g, double xi, const Dataset* labels) {
    if (g.empty()) throw InvalidInput("select_top_quantile: no scores");
    if (!(xi > 0.0 && xi <= 1.0)) throw InvalidInput("select_top_quantile: xi outside (0, 1]");
    if (labels && labels->size() != g.size()) throw InvalidInput("select_top_quantile: label count mismatch");
    const std::size_t n = g.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return g[i] > g[j]; });
    // 1e-9 absorbs rounding in xi * n so that e.g. 0.3 * 10 selects 3
    const auto k = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(xi * static_cast<double>(n) - 1e-9)), 1, n);

    Selection sel;
    sel.mask.assign(n, false);
    double sum = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        const std::size_t i = order[r];
        sel.mask[i] = true;
        sum += g[i];
        if (labels) ++sel.report.composition[labels->records[i].quality];
    }
    sel.report.threshold = g[order[k - 1]];
    sel.report.selected_count = k;
    sel.report.total = n;
    sel.report.mean_g_selected = sum / static_cast<double>(k);
    return sel;
}

EvaluationContext make_evaluation_context(const TabularMDP& target) {
    EvaluationContext ctx;
    ctx.target = &target;
    ctx.j_random = expected_return(target, PolicyTable::uniform(target.n_states(), target.n_actions()));
    ctx.j_expert = expected_return(target, value_iteration(target, 1e-11).policy);
    return ctx;
}

double normalized_score(double j, double j_random, double j_expert) {
    if (j_expert == j_random) throw UndefinedMetric("normalized_score: expert and random returns coincide");
    return (j - j_random) / (j_expert - j_random) * 100.0;
}

std::vector<double> combined_scores(const Dataset& d_src, const PretrainedCritic& critic,
                                    const TransitionScorer& scorer, double lambda) {
    if (critic.values.n_states != d_src.n_states || critic.values.n_actions != d_src.n_actions)
        throw InvalidInput("dvdf: critic does not fit the source dataset");
    const auto h = score_dataset(scorer, d_src).normalized;
    std::vector<double> adv(d_src.size());
    for (std::size_t i = 0; i < d_src.size(); ++i) adv[i] = critic.values.A(d_src.records[i].s, d_src.records[i].a);
    const auto a = minmax_normalize(adv);
    std::vector<double> g(d_src.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = combined_score(h[i], a[i], lambda);
    return g;
}

namespace {

void check_inputs(const Dataset& d_tar, const Dataset& d_src) {
    if (d_tar.n_states != d_src.n_states || d_tar.n_actions != d_src.n_actions)
        throw InvalidInput("dvdf: source and target datasets differ in shape");
    if (d_tar.gamma != d_src.gamma) throw InvalidInput("dvdf: source and target datasets differ in discount");
    if (d_tar.empty() && d_src.empty()) throw InvalidInput("dvdf: no training data");
}

TrainReport finish(const std::string& method, const FilterConfig& fcfg, const TransitionStats& stats,
                   const IqlConfig& icfg, const EvaluationContext* eval) {
    auto critic = fit_iql(stats, icfg);
    TrainReport report;
    report.method = method;
    report.filter = fcfg;
    report.values = std::move(critic.values);
    report.policy = std::move(critic.policy);
    report.residuals = std::move(critic.residuals);
    report.iterations = critic.iterations;
    report.converged = critic.converged;
    for (std::size_t s = 0; s < stats.n_states; ++s) {
        bool any = false;
        for (std::size_t a = 0; a < stats.n_actions; ++a) any = any || stats.observed(s, a);
        if (!any) ++report.uniform_states;
    }
    if (eval && eval->target) {
        if (!report.policy.fits(*eval->target)) throw InvalidInput("dvdf: policy does not fit the evaluation MDP");
        report.j_tar = expected_return(*eval->target, report.policy);
        report.normalized = normalized_score(*report.j_tar, eval->j_random, eval->j_expert);
    }
    return report;
}

} // namespace

TrainReport train_dvdf(const Dataset& d_tar, const Dataset& d_src, const PretrainedCritic& critic,
                       const TransitionScorer& scorer, const FilterConfig& fcfg, const IqlConfig& icfg,
                       const EvaluationContext* eval) {
    check_inputs(d_tar, d_src);
    if (!(fcfg.lambda >= 0.0 && fcfg.lambda <= 1.0)) throw InvalidInput("dvdf: lambda outside [0, 1]");
    if (!(fcfg.xi > 0.0 && fcfg.xi <= 1.0)) throw InvalidInput("dvdf: xi outside (0, 1]");
    TransitionStats stats(d_tar.n_states, d_tar.n_actions, d_tar.gamma);
    stats.add(d_tar);
    if (d_src.empty()) return finish("dvdf", fcfg, stats, icfg, eval);

    const auto g = combined_scores(d_src, critic, scorer, fcfg.lambda);
    auto sel = select_top_quantile(g, fcfg.xi, &d_src);
    std::vector<double> w(d_src.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i)
        if (sel.mask[i]) w[i] = fcfg.weight_mode == WeightMode::indicator_times_g ? g[i] : 1.0;
    stats.add(d_src, w);
    auto report = finish("dvdf", fcfg, stats, icfg, eval);
    report.selection = std::move(sel.report);
    return report;
}

std::string to_string(BaselineKind k) {
    switch (k) {
    case BaselineKind::merge_all: return "merge_all";
    case BaselineKind::dynamics_only: return "dynamics_only";
    case BaselineKind::value_only: return "value_only";
    case BaselineKind::target_only: return "target_only";
    }
    return "unknown";
}

BaselineKind parse_baseline(const std::string& text) {
    if (text == "merge_all") return BaselineKind::merge_all;
    if (text == "dynamics_only") return BaselineKind::dynamics_only;
    if (text == "value_only") return BaselineKind::value_only;
    if (text == "target_only") return BaselineKind::target_only;
    throw InvalidInput("unknown baseline '" + text + "'");
}

TrainReport run_baseline(BaselineKind kind, const Dataset& d_tar, const Dataset& d_src,
                         const PretrainedCritic& critic, const TransitionScorer& scorer, const FilterConfig& fcfg,
                         const IqlConfig& icfg, const EvaluationContext* eval) {
    FilterConfig cfg = fcfg;
    TrainReport report;
    switch (kind) {
    case BaselineKind::merge_all:
        cfg.xi = 1.0;
        cfg.weight_mode = WeightMode::indicator_only;
        report = train_dvdf(d_tar, d_src, critic, scorer, cfg, icfg, eval);
        break;
    case BaselineKind::dynamics_only:
        cfg.lambda = 1.0;
        report = train_dvdf(d_tar, d_src, critic, scorer, cfg, icfg, eval);
        break;
    case BaselineKind::value_only:
        cfg.lambda = 0.0;
        report = train_dvdf(d_tar, d_src, critic, scorer, cfg, icfg, eval);
        break;
    case BaselineKind::target_only: {
        check_inputs(d_tar, d_src);
        if (d_tar.empty()) throw InvalidInput("target_only: target dataset is empty");
        report = finish("target_only", cfg, stats_of(d_tar), icfg, eval);
        break;
    }
    }
    report.method = to_string(kind);
    return report;
}

std::string report_json(const TrainReport& r) {
    nlohmann::ordered_json doc;
    doc["method"] = r.method;
    doc["config"] = {{"lambda", r.filter.lambda},
                     {"xi", r.filter.xi},
                     {"weight_mode", to_string(r.filter.weight_mode)}};
    doc["iterations"] = r.iterations;
    doc["converged"] = r.converged;
    doc["uniform_states"] = r.uniform_states;
    doc["residuals"] = r.residuals;
    doc["j_tar"] = r.j_tar ? nlohmann::ordered_json(*r.j_tar) : nlohmann::ordered_json(nullptr);
    doc["normalized_score"] = r.normalized ? nlohmann::ordered_json(*r.normalized) : nlohmann::ordered_json(nullptr);
    if (r.selection) {
        const auto& s = *r.selection;
        doc["selection"] = {{"threshold", s.threshold},
                            {"selected_count", s.selected_count},
                            {"total", s.total},
                            {"mean_g_selected", s.mean_g_selected},
                            {"composition", s.composition}};
    } else {
        doc["selection"] = nullptr;
    }
    doc["v"] = r.values.v;
    doc["q"] = r.values.q;
    doc["policy"] = std::vector<double>(r.policy.probs().begin(), r.policy.probs().end());
    return doc.dump(2);
}

} // namespace dvdf
