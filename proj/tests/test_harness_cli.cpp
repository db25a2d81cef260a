#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "dvdf/core/errors.hpp"
#include "dvdf/harness/experiment.hpp"

using namespace dvdf;
namespace fs = std::filesystem;

namespace {

// Small shifted-mixture experiment; magnitude and methods vary per test.
nlohmann::json small_config(double magnitude) {
    auto j = nlohmann::json::parse(R"({
      "env": {"width": 4, "height": 4, "terminal_cells": [15], "reward_map": {"15": 1.0},
              "slip_prob": 0.1, "gamma": 0.9},
      "shift": {"kind": "action_block", "actions": [1, 2], "magnitude": 0.5},
      "target": {"size": 300, "behavior": {"quality": "medium"}},
      "source": {"size": 1200, "components": [
        {"fraction": 0.5, "label": "random", "kernel": "target", "behavior": {"quality": "random"}},
        {"fraction": 0.5, "label": "expert", "kernel": "shifted", "behavior": {"quality": "expert"}}]},
      "learner": {"kind": "sql"},
      "score": {"kind": "nce", "epochs": 40},
      "filter": {"lambda": 0.7, "xi": 0.5},
      "seeds": [0, 1],
      "output": {"dir": "unused"}
    })");
    j["shift"]["magnitude"] = magnitude;
    return j;
}

std::string csv_of(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    write_results_csv(out, rows);
    return out.str();
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DVDF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("config parsing") {
    SUBCASE("valid config") {
        const auto cfg = parse_config(small_config(0.5).dump());
        CHECK(cfg.env.width == 4);
        CHECK(cfg.n_tar == 300);
        CHECK(cfg.n_src == 1200);
        CHECK(cfg.source.size() == 2);
        CHECK(cfg.nce.epochs == 40);
        CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1});
    }
    SUBCASE("canonical form round trips") {
        const auto cfg = parse_config(small_config(0.5).dump());
        const auto again = parse_config(canonical_json(cfg));
        CHECK(canonical_json(again) == canonical_json(cfg));
        CHECK(config_hash(again) == config_hash(cfg));
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_json(cfg))));
        CHECK(config_hash(cfg) == hex);
        CHECK(config_hash(parse_config(small_config(0.4).dump())) != config_hash(cfg));
    }
    SUBCASE("shipped recipe loads") {
        const auto cfg = load_config(fs::path(DVDF_SOURCE_DIR) / "configs" / "motivating.json");
        CHECK(cfg.env.width == 6);
        CHECK(cfg.seeds.size() == 10);
        CHECK(cfg.shift.magnitude == 0.6);
    }
    SUBCASE("rejections") {
        auto j = small_config(0.5);
        j["env"]["colour"] = 1;
        CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
        j = small_config(0.5);
        j["seeds"] = nlohmann::json::array();
        CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
        j = small_config(0.5);
        j["target"]["size"] = 5000;
        CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
        j = small_config(0.5);
        j["filter"]["lambda"] = "high";
        CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
        j = small_config(0.5);
        j["filter"]["xi"] = 0.0;
        CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
        j = small_config(0.5);
        j["methods"] = {"dvdf", "oracle"};
        CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
        CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
        CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
    }
}

TEST_CASE("experiment runs") {
    SUBCASE("deterministic rows and bytes") {
        const auto cfg = parse_config(small_config(0.5).dump());
        const auto a = run_experiment(cfg);
        const auto b = run_experiment(cfg);
        REQUIRE(a.size() == 2 * cfg.methods.size());
        CHECK(csv_of(a) == csv_of(b));
        const auto text = csv_of(a);
        CHECK(text.rfind("# dvdf-results v1\n", 0) == 0);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].seed == cfg.seeds[i / cfg.methods.size()]);
            CHECK(a[i].method == cfg.methods[i % cfg.methods.size()]);
            CHECK(a[i].status == "ok");
            CHECK(a[i].config_hash == config_hash(cfg));
            CHECK(a[i].normalized_score ==
                  doctest::Approx(100.0 * (a[i].j_target - a[i].j_random) / (a[i].j_expert - a[i].j_random)));
        }
        std::ostringstream timings;
        write_timings_csv(timings, a);
        CHECK(timings.str().find("wall") != std::string::npos);
    }
    SUBCASE("identical domains make filtering harmless") {
        auto j = small_config(0.0);
        j["filter"] = {{"lambda", 1.0}, {"xi", 1.0}, {"weight_mode", "indicator_only"}};
        j["methods"] = {"dvdf", "merge_all"};
        j["seeds"] = {3};
        const auto rows = run_experiment(parse_config(j.dump()));
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].j_target == doctest::Approx(rows[1].j_target).epsilon(1e-6));
    }
    SUBCASE("sweeps") {
        auto j = small_config(0.5);
        j["seeds"] = {0};
        const auto cfg = parse_config(j.dump());
        const auto rows = run_sweep(cfg, SweepParam::lambda, {0.0, 0.5, 1.0});
        REQUIRE(rows.size() == 3);
        CHECK(rows[0].lambda == 0.0);
        CHECK(rows[2].lambda == 1.0);
        const auto summary = summarize(rows);
        CHECK(summary.size() == 3);
        CHECK(summary[1].mean_j == rows[1].j_target);
        CHECK_THROWS_AS(run_sweep(cfg, SweepParam::xi, {}), ConfigError);
        CHECK_THROWS_AS(parse_sweep_param("gamma"), ConfigError);
    }
}

TEST_CASE("command line") {
    TempDir tmp("dvdf_cli_test");
    const auto cfg_path = tmp.path / "cfg.json";
    {
        auto j = small_config(0.5);
        j["seeds"] = {0};
        j["output"]["dir"] = (tmp.path / "out").string();
        std::ofstream(cfg_path) << j.dump(2);
    }
    const std::string cfg = "--config " + cfg_path.string();

    SUBCASE("report is byte-reproducible") {
        CHECK(run_cli("report " + cfg) == 0);
        const auto first = slurp(tmp.path / "out" / "results.csv");
        CHECK(run_cli("report " + cfg) == 0);
        CHECK(slurp(tmp.path / "out" / "results.csv") == first);
        CHECK(fs::exists(tmp.path / "out" / "timings.csv"));
    }
    SUBCASE("staged pipeline") {
        CHECK(run_cli("gen " + cfg) == 0);
        CHECK(fs::exists(tmp.path / "out" / "d_src.csv"));
        CHECK(run_cli("pretrain " + cfg) == 0);
        CHECK(run_cli("score " + cfg) == 0);
        CHECK(fs::exists(tmp.path / "out" / "scores.csv"));
        CHECK(run_cli("train " + cfg) == 0);
        CHECK(fs::exists(tmp.path / "out" / "train_report.json"));
        CHECK(run_cli("baseline --method value_only " + cfg) == 0);
        CHECK(run_cli("baseline --method oracle " + cfg) == 1);
        // corrupted stage output is a runtime failure
        std::ofstream(tmp.path / "out" / "critic.txt") << "garbage\n";
        CHECK(run_cli("train " + cfg) == 3);
    }
    SUBCASE("sweep") {
        CHECK(run_cli("sweep --param xi --values 0.5,1.0 " + cfg) == 0);
        CHECK(fs::exists(tmp.path / "out" / "sweep_xi.csv"));
        CHECK(run_cli("sweep --param xi --values , " + cfg) == 1);
    }
    SUBCASE("theory bench exit codes") {
        CHECK(run_cli("bench --instances 20") == 0);
        CHECK(run_cli("bench --instances 1 --identical") == 0);
        CHECK(run_cli("bench --instances 200 --mutate-c1") == 2);
        CHECK(run_cli("bench --instances 0") == 1);
    }
    SUBCASE("config errors") {
        CHECK(run_cli("report --config " + (tmp.path / "missing.json").string()) == 1);
        std::ofstream(tmp.path / "bad.json") << R"({"env": {"width": 4}, "bogus": 1})";
        CHECK(run_cli("report --config " + (tmp.path / "bad.json").string()) == 1);
        CHECK(run_cli("frobnicate") == 1);
    }
}
