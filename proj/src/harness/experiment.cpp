#include "dvdf/harness/experiment.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <ostream>

#include "dvdf/core/errors.hpp"
#include "dvdf/core/rng.hpp"
#include "dvdf/core/text_format.hpp"

namespace dvdf {

namespace {

std::string clean(std::string text) {
    for (char& c : text)
        if (c == ',' || c == '\n' || c == '\r') c = ' ';
    return text;
}

std::string composition_text(const std::optional<SelectionReport>& sel) {
    if (!sel) return "";
    std::string out;
    for (const auto& [label, count] : sel->composition) {
        if (!out.empty()) out += ';';
        out += label + "=" + std::to_string(count);
    }
    return out;
}

ResultRow make_row(const std::string& hash, std::uint64_t seed, const TrainReport& report, const EvaluationContext& ctx,
                   double seconds) {
    ResultRow row;
    row.config_hash = hash;
    row.seed = seed;
    row.method = report.method;
    row.lambda = report.filter.lambda;
    row.xi = report.filter.xi;
    row.j_target = report.j_tar.value_or(std::nan(""));
    row.normalized_score = report.normalized.value_or(std::nan(""));
    row.j_random = ctx.j_random;
    row.j_expert = ctx.j_expert;
    row.selected_count = report.selection ? report.selection->selected_count : 0;
    row.composition = composition_text(report.selection);
    row.wall_seconds = seconds;
    return row;
}

ResultRow error_row(const std::string& hash, std::uint64_t seed, const std::string& method, const std::string& what) {
    ResultRow row;
    row.config_hash = hash;
    row.seed = seed;
    row.method = method;
    row.j_target = std::nan("");
    row.normalized_score = std::nan("");
    row.j_random = std::nan("");
    row.j_expert = std::nan("");
    row.status = "error: " + clean(what);
    return row;
}

TrainReport run_method(const std::string& method, const SeedData& data, const PretrainedCritic& critic,
                       const TransitionScorer& scorer, const ExperimentConfig& cfg, const EvaluationContext& ctx) {
    if (method == "dvdf") return train_dvdf(data.d_tar, data.d_src, critic, scorer, cfg.filter, cfg.iql, &ctx);
    return run_baseline(parse_baseline(method), data.d_tar, data.d_src, critic, scorer, cfg.filter, cfg.iql, &ctx);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Runs body(seed_index) for every seed concurrently and concatenates the rows in seed order.
template <class Body>
std::vector<ResultRow> for_each_seed(const ExperimentConfig& cfg, const std::string& hash, Body body) {
    std::vector<std::vector<ResultRow>> per_seed(cfg.seeds.size());
    const auto n = static_cast<std::ptrdiff_t>(cfg.seeds.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            per_seed[idx] = body(cfg.seeds[idx]);
        } catch (const std::exception& e) {
            per_seed[idx] = {error_row(hash, cfg.seeds[idx], "pipeline", e.what())};
        }
    }
    std::vector<ResultRow> rows;
    for (auto& chunk : per_seed) rows.insert(rows.end(), chunk.begin(), chunk.end());
    return rows;
}

} // namespace

Domains build_domains(const ExperimentConfig& cfg) {
    try {
        auto target = make_gridworld(cfg.env);
        auto shifted = apply_shift(target, cfg.shift);
        return {std::move(target), std::move(shifted)};
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
}

SeedData generate_data(const ExperimentConfig& cfg, const Domains& domains, std::uint64_t seed) {
    SeedData out;
    out.seed = seed;
    const auto mu_tar = make_behavior(domains.target, cfg.target_behavior);
    out.d_tar = collect(domains.target, mu_tar, cfg.n_tar, derive_seed(seed, 1), Domain::target,
                        to_string(cfg.target_behavior.quality), "target");
    std::vector<Dataset> parts;
    std::size_t used = 0;
    for (std::size_t j = 0; j < cfg.source.size(); ++j) {
        const auto& comp = cfg.source[j];
        const std::size_t n = j + 1 == cfg.source.size()
                                  ? cfg.n_src - used
                                  : static_cast<std::size_t>(std::llround(comp.fraction * static_cast<double>(cfg.n_src)));
        used += n;
        const bool on_target = comp.kernel == KernelChoice::target;
        const TabularMDP& mdp = on_target ? domains.target : domains.shifted;
        parts.push_back(collect(mdp, make_behavior(mdp, comp.behavior), n, derive_seed(seed, 10 + j), Domain::source,
                                comp.label, on_target ? "target" : "shifted"));
    }
    out.d_src = mix(parts);
    return out;
}

PretrainedCritic pretrain(const ExperimentConfig& cfg, const Dataset& d_src) {
    return cfg.learner == LearnerKind::sql ? fit_sql(d_src, cfg.sql) : fit_iql(d_src, cfg.pretrain_iql);
}

std::unique_ptr<TransitionScorer> build_scorer(const ExperimentConfig& cfg, const Domains& domains,
                                               const SeedData& data, std::uint64_t seed) {
    if (cfg.scorer == ScorerKind::bayes)
        return std::make_unique<BayesScorer>(exact_bayes_score(domains.target, source_next_distribution(data.d_src),
                                                               static_cast<double>(cfg.nce.negatives_per_positive)));
    NceConfig nce = cfg.nce;
    nce.seed = derive_seed(seed, 2);
    return std::make_unique<ScoreModel>(train_nce(data.d_tar, data.d_src, nce));
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
    const auto domains = build_domains(cfg);
    const auto ctx = make_evaluation_context(domains.target);
    const auto hash = config_hash(cfg);
    return for_each_seed(cfg, hash, [&](std::uint64_t seed) {
        const auto data = generate_data(cfg, domains, seed);
        const auto critic = pretrain(cfg, data.d_src);
        const auto scorer = build_scorer(cfg, domains, data, seed);
        std::vector<ResultRow> rows;
        for (const auto& method : cfg.methods) {
            const auto start = std::chrono::steady_clock::now();
            try {
                const auto report = run_method(method, data, critic, *scorer, cfg, ctx);
                rows.push_back(make_row(hash, seed, report, ctx, seconds_since(start)));
            } catch (const std::exception& e) {
                rows.push_back(error_row(hash, seed, method, e.what()));
            }
        }
        return rows;
    });
}

SweepParam parse_sweep_param(const std::string& text) {
    if (text == "lambda") return SweepParam::lambda;
    if (text == "xi") return SweepParam::xi;
    throw ConfigError("unknown sweep parameter '" + text + "' (expected lambda or xi)");
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& base, SweepParam param, const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("sweep: no values");
    std::vector<ExperimentConfig> points;
    std::vector<std::string> hashes;
    for (double v : values) {
        ExperimentConfig cfg = base;
        if (param == SweepParam::lambda) {
            if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("sweep: lambda value outside [0, 1]");
            cfg.filter.lambda = v;
        } else {
            if (!(v > 0.0 && v <= 1.0)) throw ConfigError("sweep: xi value outside (0, 1]");
            cfg.filter.xi = v;
        }
        cfg.methods = {"dvdf"};
        hashes.push_back(config_hash(cfg));
        points.push_back(std::move(cfg));
    }
    const auto domains = build_domains(base);
    const auto ctx = make_evaluation_context(domains.target);
    return for_each_seed(base, config_hash(base), [&](std::uint64_t seed) {
        const auto data = generate_data(base, domains, seed);
        const auto critic = pretrain(base, data.d_src);
        const auto scorer = build_scorer(base, domains, data, seed);
        std::vector<ResultRow> rows;
        for (std::size_t p = 0; p < points.size(); ++p) {
            const auto start = std::chrono::steady_clock::now();
            try {
                const auto report = run_method("dvdf", data, critic, *scorer, points[p], ctx);
                rows.push_back(make_row(hashes[p], seed, report, ctx, seconds_since(start)));
            } catch (const std::exception& e) {
                rows.push_back(error_row(hashes[p], seed, "dvdf", e.what()));
            }
        }
        return rows;
    });
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << "# dvdf-results v1\n"
        << "config_hash,seed,method,lambda,xi,j_target,normalized_score,j_random,j_expert,selected_count,"
           "composition,status\n";
    for (const auto& r : rows)
        out << r.config_hash << ',' << r.seed << ',' << r.method << ',' << format_double(r.lambda) << ','
            << format_double(r.xi) << ',' << format_double(r.j_target) << ',' << format_double(r.normalized_score)
            << ',' << format_double(r.j_random) << ',' << format_double(r.j_expert) << ',' << r.selected_count << ','
            << r.composition << ',' << r.status << '\n';
}

void write_timings_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << "config_hash,seed,method,lambda,xi,wall_seconds\n";
    for (const auto& r : rows)
        out << r.config_hash << ',' << r.seed << ',' << r.method << ',' << format_double(r.lambda) << ','
            << format_double(r.xi) << ',' << format_double(r.wall_seconds) << '\n';
}

std::vector<MethodSummary> summarize(const std::vector<ResultRow>& rows) {
    std::vector<MethodSummary> out;
    for (const auto& r : rows) {
        if (r.status != "ok") continue;
        auto it = std::find_if(out.begin(), out.end(), [&](const MethodSummary& m) {
            return m.method == r.method && m.lambda == r.lambda && m.xi == r.xi;
        });
        if (it == out.end()) {
            out.push_back({r.method, r.lambda, r.xi, 0, 0.0, 0.0});
            it = out.end() - 1;
        }
        ++it->runs;
        it->mean_j += r.j_target;
        it->mean_normalized += r.normalized_score;
    }
    for (auto& m : out) {
        m.mean_j /= static_cast<double>(m.runs);
        m.mean_normalized /= static_cast<double>(m.runs);
    }
    return out;
}

} // namespace dvdf
