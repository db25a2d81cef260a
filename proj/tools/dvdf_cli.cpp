// Command-line front end for the experiment harness.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dvdf/core/errors.hpp"
#include "dvdf/core/mdp_io.hpp"
#include "dvdf/core/text_format.hpp"
#include "dvdf/harness/experiment.hpp"
#include "dvdf/score/score_table.hpp"
#include "dvdf/theory/checks.hpp"

namespace fs = std::filesystem;
using namespace dvdf;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kCheckFailure = 2;
constexpr int kRuntimeFailure = 3;

struct Options {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out;
    std::string method = "dvdf";
    std::string param;
    std::string values;
    std::size_t instances = 200;
    bool mutate_c1 = false;
    bool identical = false;
};

ExperimentConfig config_for(const Options& o) {
    if (o.config.empty()) throw ConfigError("--config is required");
    auto cfg = load_config(o.config);
    if (!o.out.empty()) cfg.output_dir = o.out;
    return cfg;
}

std::uint64_t seed_for(const Options& o, const ExperimentConfig& cfg) {
    return o.seed_given ? o.seed : cfg.seeds.front();
}

fs::path out_dir(const ExperimentConfig& cfg) {
    fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

template <class Fn>
void write_with(const fs::path& path, Fn fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    fn(out);
}

// Stage inputs come from earlier stages in the output directory when present,
// otherwise they are regenerated from the config.
SeedData stage_data(const ExperimentConfig& cfg, const Domains& domains, std::uint64_t seed, const fs::path& dir) {
    if (fs::exists(dir / "d_tar.csv") && fs::exists(dir / "d_src.csv")) {
        SeedData data;
        data.seed = seed;
        data.d_tar = load_dataset(dir / "d_tar.csv");
        data.d_src = load_dataset(dir / "d_src.csv");
        return data;
    }
    return generate_data(cfg, domains, seed);
}

PretrainedCritic stage_critic(const ExperimentConfig& cfg, const SeedData& data, const fs::path& dir) {
    if (fs::exists(dir / "critic.txt")) return load_critic((dir / "critic.txt").string());
    return pretrain(cfg, data.d_src);
}

std::unique_ptr<TransitionScorer> stage_scorer(const ExperimentConfig& cfg, const Domains& domains,
                                               const SeedData& data, std::uint64_t seed, const fs::path& dir) {
    if (cfg.scorer == ScorerKind::nce && fs::exists(dir / "score_model.txt"))
        return std::make_unique<ScoreModel>(load_score_model((dir / "score_model.txt").string()));
    return build_scorer(cfg, domains, data, seed);
}

void print_summary(const std::vector<ResultRow>& rows) {
    std::printf("%-14s %7s %6s %5s %12s %10s\n", "method", "lambda", "xi", "runs", "mean_J", "mean_NS");
    for (const auto& m : summarize(rows))
        std::printf("%-14s %7.3f %6.3f %5zu %12.6f %10.3f\n", m.method.c_str(), m.lambda, m.xi, m.runs, m.mean_j,
                    m.mean_normalized);
    std::size_t errors = 0;
    for (const auto& r : rows)
        if (r.status != "ok") ++errors;
    if (errors) std::printf("%zu row(s) carry an error status\n", errors);
}

int cmd_gen(const Options& o) {
    const auto cfg = config_for(o);
    const auto dir = out_dir(cfg);
    const auto domains = build_domains(cfg);
    const auto data = generate_data(cfg, domains, seed_for(o, cfg));
    save_mdp((dir / "target.mdp").string(), domains.target);
    save_mdp((dir / "shifted.mdp").string(), domains.shifted);
    save_dataset(dir / "d_tar.csv", data.d_tar);
    save_dataset(dir / "d_src.csv", data.d_src);
    std::printf("wrote %zu target and %zu source records to %s\n", data.d_tar.size(), data.d_src.size(),
                dir.string().c_str());
    return kOk;
}

int cmd_pretrain(const Options& o) {
    const auto cfg = config_for(o);
    const auto dir = out_dir(cfg);
    const auto domains = build_domains(cfg);
    const auto data = stage_data(cfg, domains, seed_for(o, cfg), dir);
    const auto critic = pretrain(cfg, data.d_src);
    save_critic((dir / "critic.txt").string(), critic);
    std::printf("%s critic: %zu iterations, residual %.3e, %s\n", critic.learner.c_str(), critic.iterations,
                critic.residual, critic.converged ? "converged" : "NOT converged");
    return kOk;
}

int cmd_score(const Options& o) {
    const auto cfg = config_for(o);
    const auto dir = out_dir(cfg);
    const auto domains = build_domains(cfg);
    const auto seed = seed_for(o, cfg);
    const auto data = stage_data(cfg, domains, seed, dir);
    const auto scorer = build_scorer(cfg, domains, data, seed);
    if (const auto* model = dynamic_cast<const ScoreModel*>(scorer.get())) {
        save_score_model((dir / "score_model.txt").string(), *model);
        std::printf("nce loss %.6f after %zu epochs\n", model->final_loss, model->loss_history.size() - 1);
    }
    const auto table = score_dataset(*scorer, data.d_src);
    write_with(dir / "scores.csv", [&](std::ostream& out) {
        out << "index,quality,h,h_norm\n";
        for (std::size_t i = 0; i < table.values.size(); ++i)
            out << i << ',' << data.d_src.records[i].quality << ',' << format_double(table.values[i]) << ','
                << format_double(table.normalized[i]) << '\n';
    });
    return kOk;
}

int cmd_train(const Options& o, bool baseline) {
    const auto cfg = config_for(o);
    const auto dir = out_dir(cfg);
    const auto domains = build_domains(cfg);
    const auto seed = seed_for(o, cfg);
    const auto ctx = make_evaluation_context(domains.target);
    const auto data = stage_data(cfg, domains, seed, dir);
    const auto critic = stage_critic(cfg, data, dir);
    const auto scorer = stage_scorer(cfg, domains, data, seed, dir);
    TrainReport report;
    if (!baseline) {
        report = train_dvdf(data.d_tar, data.d_src, critic, *scorer, cfg.filter, cfg.iql, &ctx);
    } else {
        BaselineKind kind;
        try {
            kind = parse_baseline(o.method);
        } catch (const InvalidInput& e) {
            throw ConfigError(e.what());
        }
        report = run_baseline(kind, data.d_tar, data.d_src, critic, *scorer, cfg.filter, cfg.iql, &ctx);
    }
    const auto name = baseline ? "baseline_" + report.method + ".json" : std::string("train_report.json");
    write_file(dir / name, report_json(report) + "\n");
    std::printf("%s: J_tar %.6f, normalized %.3f\n", report.method.c_str(), *report.j_tar, *report.normalized);
    return kOk;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> values;
    for (auto tok : split(text, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            values.push_back(parse_double(tok));
        } catch (const InvalidInput&) {
            throw ConfigError("--values: '" + std::string(tok) + "' is not a number");
        }
    }
    if (values.empty()) throw ConfigError("--values: expected a nonempty comma-separated list");
    return values;
}

int cmd_sweep(const Options& o) {
    const auto cfg = config_for(o);
    if (o.param.empty()) throw ConfigError("--param is required");
    const auto param = parse_sweep_param(o.param);
    const auto values = parse_values(o.values);
    const auto rows = run_sweep(cfg, param, values);
    const auto dir = out_dir(cfg);
    write_with(dir / ("sweep_" + o.param + ".csv"), [&](std::ostream& out) { write_results_csv(out, rows); });
    write_with(dir / ("sweep_" + o.param + "_timings.csv"), [&](std::ostream& out) { write_timings_csv(out, rows); });
    print_summary(rows);
    return kOk;
}

int cmd_report(const Options& o) {
    auto cfg = config_for(o);
    if (o.seed_given) cfg.seeds = {o.seed};
    const auto rows = run_experiment(cfg);
    const auto dir = out_dir(cfg);
    write_with(dir / "results.csv", [&](std::ostream& out) { write_results_csv(out, rows); });
    write_with(dir / "timings.csv", [&](std::ostream& out) { write_timings_csv(out, rows); });
    print_summary(rows);
    return kOk;
}

int cmd_bench(const Options& o) {
    if (o.instances == 0) throw ConfigError("--instances must be at least 1");
    TheoryOptions options;
    options.mutate_c1 = o.mutate_c1;
    options.identical_domains = o.identical;
    const auto summary = run_theory_suite(o.seed, o.instances, options);
    const auto text = format_summary(summary);
    std::fputs(text.c_str(), stdout);
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        write_file(fs::path(o.out) / "theory.txt", text);
    }
    return summary.all_hold() ? kOk : kCheckFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular cross-domain offline RL lab: data generation, filtering, training and theory checks"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* cfg = sub->add_option("--config", o.config, "experiment config (JSON)");
        if (needs_config) cfg->required();
        sub->add_option("--seed", o.seed, "seed (defaults to the first configured seed)")
            ->each([&](const std::string&) { o.seed_given = true; });
        sub->add_option("--out", o.out, "output directory (overrides output.dir)");
    };
    auto* gen = app.add_subcommand("gen", "build the MDPs and collect both datasets");
    add_common(gen, true);
    auto* pre = app.add_subcommand("pretrain", "pre-train the value critic on the source data");
    add_common(pre, true);
    auto* score = app.add_subcommand("score", "train the dynamics scorer and score the source data");
    add_common(score, true);
    auto* train = app.add_subcommand("train", "run filtered training and evaluate on the target MDP");
    add_common(train, true);
    auto* base = app.add_subcommand("baseline", "run one baseline method");
    add_common(base, true);
    base->add_option("--method", o.method, "merge_all | dynamics_only | value_only | target_only")->required();
    auto* sweep = app.add_subcommand("sweep", "sweep lambda or xi over all configured seeds");
    add_common(sweep, true);
    sweep->add_option("--param", o.param, "lambda | xi")->required();
    sweep->add_option("--values", o.values, "comma-separated values")->required();
    auto* bench = app.add_subcommand("bench", "randomized verification of the bounds and identities");
    add_common(bench, false);
    bench->add_option("--instances", o.instances, "instances per check");
    bench->add_flag("--mutate-c1", o.mutate_c1, "halve C1 (self-test: the lemma check must fail)");
    bench->add_flag("--identical", o.identical, "use identical source and target kernels");
    auto* report = app.add_subcommand("report", "run every configured method and seed, write results.csv");
    add_common(report, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try {
        if (*gen) return cmd_gen(o);
        if (*pre) return cmd_pretrain(o);
        if (*score) return cmd_score(o);
        if (*train) return cmd_train(o, false);
        if (*base) return cmd_train(o, true);
        if (*sweep) return cmd_sweep(o);
        if (*bench) return cmd_bench(o);
        if (*report) return cmd_report(o);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntimeFailure;
    }
    return kOk;
}
