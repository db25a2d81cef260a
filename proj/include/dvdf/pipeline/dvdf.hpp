#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dvdf/core/policy.hpp"
#include "dvdf/core/tabular_mdp.hpp"
#include "dvdf/core/value_tables.hpp"
#include "dvdf/env/dataset.hpp"
#include "dvdf/learners/critic.hpp"
#include "dvdf/score/scorer.hpp"

namespace dvdf {

enum class WeightMode { indicator_times_g, indicator_only };

std::string to_string(WeightMode m);
WeightMode parse_weight_mode(const std::string& text);

struct FilterConfig {
    double lambda = 0.7;
    double xi = 0.5;
    WeightMode weight_mode = WeightMode::indicator_times_g;
};

struct SelectionReport {
    double threshold = 0.0;
    std::size_t selected_count = 0;
    std::size_t total = 0;
    std::map<std::string, std::size_t> composition;
    double mean_g_selected = 0.0;
};

struct Selection {
    std::vector<bool> mask;
    SelectionReport report;
};

/// g = lambda * h_norm + (1 - lambda) * a_norm, all three in [0, 1].
double combined_score(double h_norm, double a_norm, double lambda);

/// Top ceil(xi * N) records by g, ties broken by lower index; the threshold
/// is the g of the last selected record. Labels, when given, feed the
/// composition count.
Selection select_top_quantile(std::span<const double> g, double xi, const Dataset* labels = nullptr);

/// Ground truth the harness holds for evaluation only; the learner never reads it.
struct EvaluationContext {
    const TabularMDP* target = nullptr;
    double j_random = 0.0;
    double j_expert = 0.0;
};

EvaluationContext make_evaluation_context(const TabularMDP& target);

/// 100 * (J - J_random) / (J_expert - J_random).
double normalized_score(double j, double j_random, double j_expert);

struct TrainReport {
    std::string method;
    FilterConfig filter;
    ValueTables values;
    PolicyTable policy = PolicyTable::uniform(1, 1);
    std::vector<double> residuals;
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t uniform_states = 0;  // states left without any training weight
    std::optional<SelectionReport> selection;
    std::optional<double> j_tar;
    std::optional<double> normalized;
};

/// Per-record g over d_src from the normalized critic advantage and scorer output.
std::vector<double> combined_scores(const Dataset& d_src, const PretrainedCritic& critic,
                                    const TransitionScorer& scorer, double lambda);

/// Filtered weighted in-sample training on d_tar plus the selected part of d_src.
TrainReport train_dvdf(const Dataset& d_tar, const Dataset& d_src, const PretrainedCritic& critic,
                       const TransitionScorer& scorer, const FilterConfig& fcfg, const IqlConfig& icfg,
                       const EvaluationContext* eval = nullptr);

enum class BaselineKind { merge_all, dynamics_only, value_only, target_only };

std::string to_string(BaselineKind k);
BaselineKind parse_baseline(const std::string& text);

/// merge_all: every source record at weight 1; dynamics_only: lambda = 1;
/// value_only: lambda = 0; target_only: d_tar alone.
TrainReport run_baseline(BaselineKind kind, const Dataset& d_tar, const Dataset& d_src,
                         const PretrainedCritic& critic, const TransitionScorer& scorer, const FilterConfig& fcfg,
                         const IqlConfig& icfg, const EvaluationContext* eval = nullptr);

/// Structured JSON document of a report (config echo, residuals, returns, selection).
std::string report_json(const TrainReport& report);

} // namespace dvdf
