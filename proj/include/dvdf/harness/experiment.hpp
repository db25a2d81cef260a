#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dvdf/env/behavior.hpp"
#include "dvdf/env/dataset.hpp"
#include "dvdf/env/gridworld.hpp"
#include "dvdf/env/shift.hpp"
#include "dvdf/learners/critic.hpp"
#include "dvdf/pipeline/dvdf.hpp"
#include "dvdf/score/scorer.hpp"

namespace dvdf {

enum class KernelChoice { target, shifted };

struct SourceComponent {
    double fraction = 1.0;
    std::string label;
    KernelChoice kernel = KernelChoice::shifted;
    BehaviorSpec behavior;
};

enum class LearnerKind { sql, iql };
enum class ScorerKind { nce, bayes };

struct ExperimentConfig {
    GridSpec env;
    ShiftSpec shift;
    std::size_t n_tar = 5000;
    BehaviorSpec target_behavior;
    std::size_t n_src = 50000;
    std::vector<SourceComponent> source;
    LearnerKind learner = LearnerKind::sql;
    SqlConfig sql;
    IqlConfig pretrain_iql;  // used when learner is iql
    IqlConfig iql;           // downstream weighted training
    ScorerKind scorer = ScorerKind::nce;
    NceConfig nce;
    FilterConfig filter;
    std::vector<std::string> methods{"dvdf", "merge_all", "dynamics_only", "value_only", "target_only"};
    std::vector<std::uint64_t> seeds{0};
    std::string output_dir = "out";
};

/// Parses and validates a JSON config. Unknown keys, bad types and invalid
/// values raise ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON (sorted keys, every field explicit) of a config.
std::string canonical_json(const ExperimentConfig& cfg);

/// 16 hex digits of FNV-1a over canonical_json(cfg).
std::string config_hash(const ExperimentConfig& cfg);

/// Everything one seed needs before filtering and training.
struct SeedData {
    std::uint64_t seed = 0;
    Dataset d_tar;
    Dataset d_src;
};

struct Domains {
    TabularMDP target;
    TabularMDP shifted;
};

Domains build_domains(const ExperimentConfig& cfg);

/// Collects d_tar and the labelled source mixture for one seed.
SeedData generate_data(const ExperimentConfig& cfg, const Domains& domains, std::uint64_t seed);

PretrainedCritic pretrain(const ExperimentConfig& cfg, const Dataset& d_src);

/// Trained NCE model or the exact-Bayes oracle, as configured.
std::unique_ptr<TransitionScorer> build_scorer(const ExperimentConfig& cfg, const Domains& domains,
                                               const SeedData& data, std::uint64_t seed);

struct ResultRow {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string method;
    double lambda = 0.0;
    double xi = 0.0;
    double j_target = 0.0;
    double normalized_score = 0.0;
    double j_random = 0.0;
    double j_expert = 0.0;
    std::size_t selected_count = 0;
    std::string composition;
    std::string status = "ok";
    double wall_seconds = 0.0;  // written to the timings file only
};

/// All configured methods for every seed. Seeds run concurrently; rows come
/// back in (seed, method) order.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

enum class SweepParam { lambda, xi };
SweepParam parse_sweep_param(const std::string& text);

/// DVDF at every value of the parameter; data, critic and scorer are shared
/// across values of one seed.
std::vector<ResultRow> run_sweep(const ExperimentConfig& base, SweepParam param, const std::vector<double>& values);

/// "# dvdf-results v1" followed by the column header and one line per row.
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_timings_csv(std::ostream& out, const std::vector<ResultRow>& rows);

struct MethodSummary {
    std::string method;
    double lambda = 0.0;
    double xi = 0.0;
    std::size_t runs = 0;
    double mean_j = 0.0;
    double mean_normalized = 0.0;
};

/// Mean returns per (method, lambda, xi) over rows with status ok, in first-seen order.
std::vector<MethodSummary> summarize(const std::vector<ResultRow>& rows);

} // namespace dvdf
