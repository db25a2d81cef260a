#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dvdf/core/errors.hpp"
#include "dvdf/harness/experiment.hpp"

namespace dvdf {

using json = nlohmann::json;

namespace {

const std::set<std::string> kMethods{"dvdf", "merge_all", "dynamics_only", "value_only", "target_only"};

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    require_object(j, where);
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <class T>
void read_opt(const json& j, const std::string& key, const std::string& where, T& out) {
    if (j.contains(key)) out = get<T>(j, key, where);
}

BehaviorSpec parse_behavior(const json& j, const std::string& where) {
    check_keys(j, {"quality", "epsilon", "calibrate", "mixture_weights"}, where);
    BehaviorSpec b;
    try {
        b.quality = parse_quality(get<std::string>(j, "quality", where));
    } catch (const InvalidInput& e) {
        throw ConfigError(where + ": " + e.what());
    }
    if (j.contains("epsilon") && !j["epsilon"].is_null()) b.epsilon = get<double>(j, "epsilon", where);
    read_opt(j, "calibrate", where, b.calibrate);
    if (j.contains("mixture_weights")) {
        const auto w = get<std::vector<double>>(j, "mixture_weights", where);
        if (w.size() != 3) throw ConfigError(where + ".mixture_weights: expected 3 weights (random, medium, expert)");
        std::copy(w.begin(), w.end(), b.mixture_weights.begin());
    }
    if (b.epsilon && !(*b.epsilon >= 0.0 && *b.epsilon <= 1.0)) throw ConfigError(where + ".epsilon outside [0, 1]");
    return b;
}

json behavior_json(const BehaviorSpec& b) {
    json j;
    j["quality"] = to_string(b.quality);
    j["epsilon"] = b.epsilon ? json(*b.epsilon) : json(nullptr);
    j["calibrate"] = b.calibrate;
    j["mixture_weights"] = std::vector<double>(b.mixture_weights.begin(), b.mixture_weights.end());
    return j;
}

void parse_env(const json& j, GridSpec& g) {
    const std::string where = "env";
    check_keys(j, {"width", "height", "terminal_cells", "reward_map", "start_cells", "slip_prob", "gamma", "seed"},
               where);
    g.width = get<std::size_t>(j, "width", where);
    g.height = get<std::size_t>(j, "height", where);
    read_opt(j, "terminal_cells", where, g.terminal_cells);
    read_opt(j, "start_cells", where, g.start_cells);
    read_opt(j, "slip_prob", where, g.slip_prob);
    read_opt(j, "gamma", where, g.gamma);
    read_opt(j, "seed", where, g.seed);
    if (j.contains("reward_map")) {
        require_object(j.at("reward_map"), "env.reward_map");
        for (const auto& [key, value] : j.at("reward_map").items()) {
            std::size_t cell = 0;
            try {
                std::size_t used = 0;
                cell = std::stoul(key, &used);
                if (used != key.size()) throw std::invalid_argument(key);
            } catch (const std::exception&) {
                throw ConfigError("env.reward_map: key '" + key + "' is not a cell index");
            }
            if (!value.is_number()) throw ConfigError("env.reward_map: value for cell " + key + " is not a number");
            g.reward_map[cell] = value.get<double>();
        }
    }
    if (!(g.gamma > 0.0 && g.gamma < 1.0)) throw ConfigError("env.gamma outside (0, 1)");
}

void parse_shift(const json& j, ShiftSpec& s) {
    const std::string where = "shift";
    check_keys(j, {"kind", "pairs", "actions", "magnitude", "stay_action", "seed"}, where);
    const auto kind = get<std::string>(j, "kind", where);
    if (kind == "action_block") s.kind = ShiftKind::action_block;
    else if (kind == "kernel_perturb") s.kind = ShiftKind::kernel_perturb;
    else throw ConfigError("shift.kind: unknown kind '" + kind + "'");
    if (j.contains("pairs")) {
        for (const auto& p : get<std::vector<std::vector<std::size_t>>>(j, "pairs", where)) {
            if (p.size() != 2) throw ConfigError("shift.pairs: each pair needs [state, action]");
            s.pairs.emplace_back(p[0], p[1]);
        }
    }
    read_opt(j, "actions", where, s.actions);
    s.magnitude = get<double>(j, "magnitude", where);
    if (j.contains("stay_action") && !j["stay_action"].is_null()) s.stay_action = get<std::size_t>(j, "stay_action", where);
    read_opt(j, "seed", where, s.seed);
    if (!(s.magnitude >= 0.0 && s.magnitude <= 1.0)) throw ConfigError("shift.magnitude outside [0, 1]");
}

void parse_iql(const json& j, IqlConfig& c, const std::string& where) {
    check_keys(j, {"tau", "beta", "iters", "tol"}, where);
    read_opt(j, "tau", where, c.tau);
    read_opt(j, "beta", where, c.beta);
    read_opt(j, "iters", where, c.iters);
    read_opt(j, "tol", where, c.tol);
    if (!(c.tau > 0.0 && c.tau < 1.0)) throw ConfigError(where + ".tau outside (0, 1)");
    if (!(c.beta > 0.0)) throw ConfigError(where + ".beta must be positive");
    if (c.iters == 0) throw ConfigError(where + ".iters must be positive");
}

json iql_json(const IqlConfig& c) { return {{"tau", c.tau}, {"beta", c.beta}, {"iters", c.iters}, {"tol", c.tol}}; }

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(root, {"env", "shift", "target", "source", "learner", "iql", "score", "filter", "methods", "seeds",
                      "output"},
               "config");
    ExperimentConfig cfg;
    if (!root.contains("env")) throw ConfigError("config: missing section 'env'");
    parse_env(root.at("env"), cfg.env);
    if (root.contains("shift")) parse_shift(root.at("shift"), cfg.shift);

    if (root.contains("target")) {
        const auto& t = root.at("target");
        check_keys(t, {"size", "behavior"}, "target");
        read_opt(t, "size", "target", cfg.n_tar);
        if (t.contains("behavior")) cfg.target_behavior = parse_behavior(t.at("behavior"), "target.behavior");
    }
    if (!root.contains("source")) throw ConfigError("config: missing section 'source'");
    {
        const auto& s = root.at("source");
        check_keys(s, {"size", "components"}, "source");
        read_opt(s, "size", "source", cfg.n_src);
        if (!s.contains("components") || !s.at("components").is_array() || s.at("components").empty())
            throw ConfigError("source.components: expected a nonempty list");
        double total = 0.0;
        std::size_t idx = 0;
        for (const auto& c : s.at("components")) {
            const std::string where = "source.components[" + std::to_string(idx++) + "]";
            check_keys(c, {"fraction", "label", "kernel", "behavior"}, where);
            SourceComponent comp;
            comp.fraction = get<double>(c, "fraction", where);
            comp.label = get<std::string>(c, "label", where);
            const auto kernel = get<std::string>(c, "kernel", where);
            if (kernel == "target") comp.kernel = KernelChoice::target;
            else if (kernel == "shifted") comp.kernel = KernelChoice::shifted;
            else throw ConfigError(where + ".kernel must be 'target' or 'shifted'");
            comp.behavior = parse_behavior(c.at("behavior"), where + ".behavior");
            if (!(comp.fraction > 0.0)) throw ConfigError(where + ".fraction must be positive");
            if (comp.label.empty() || comp.label.find_first_of(",;=\n\r") != std::string::npos)
                throw ConfigError(where + ".label must be nonempty without , ; = or newlines");
            total += comp.fraction;
            cfg.source.push_back(std::move(comp));
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("source.components: fractions must sum to 1");
    }
    if (root.contains("learner")) {
        const auto& l = root.at("learner");
        check_keys(l, {"kind", "alpha", "tau", "beta", "iters", "tol"}, "learner");
        const auto kind = get<std::string>(l, "kind", "learner");
        if (kind == "sql") cfg.learner = LearnerKind::sql;
        else if (kind == "iql") cfg.learner = LearnerKind::iql;
        else throw ConfigError("learner.kind must be 'sql' or 'iql'");
        read_opt(l, "alpha", "learner", cfg.sql.alpha);
        read_opt(l, "beta", "learner", cfg.sql.beta);
        read_opt(l, "iters", "learner", cfg.sql.iters);
        read_opt(l, "tol", "learner", cfg.sql.tol);
        read_opt(l, "tau", "learner", cfg.pretrain_iql.tau);
        cfg.pretrain_iql.beta = cfg.sql.beta;
        cfg.pretrain_iql.iters = cfg.sql.iters;
        cfg.pretrain_iql.tol = cfg.sql.tol;
        if (!(cfg.sql.alpha > 0.0)) throw ConfigError("learner.alpha must be positive");
        if (!(cfg.sql.beta > 0.0)) throw ConfigError("learner.beta must be positive");
        if (!(cfg.pretrain_iql.tau > 0.0 && cfg.pretrain_iql.tau < 1.0)) throw ConfigError("learner.tau outside (0, 1)");
    }
    if (root.contains("iql")) parse_iql(root.at("iql"), cfg.iql, "iql");
    if (root.contains("score")) {
        const auto& s = root.at("score");
        check_keys(s, {"kind", "k", "negatives_per_positive", "epochs", "step_size", "init_scale", "l2"}, "score");
        if (s.contains("kind")) {
            const auto kind = get<std::string>(s, "kind", "score");
            if (kind == "nce") cfg.scorer = ScorerKind::nce;
            else if (kind == "bayes") cfg.scorer = ScorerKind::bayes;
            else throw ConfigError("score.kind must be 'nce' or 'bayes'");
        }
        read_opt(s, "k", "score", cfg.nce.k);
        read_opt(s, "negatives_per_positive", "score", cfg.nce.negatives_per_positive);
        read_opt(s, "epochs", "score", cfg.nce.epochs);
        read_opt(s, "step_size", "score", cfg.nce.step_size);
        read_opt(s, "init_scale", "score", cfg.nce.init_scale);
        read_opt(s, "l2", "score", cfg.nce.l2);
        if (cfg.nce.k == 0) throw ConfigError("score.k must be positive");
        if (cfg.nce.negatives_per_positive == 0) throw ConfigError("score.negatives_per_positive must be at least 1");
        if (!(cfg.nce.step_size > 0.0)) throw ConfigError("score.step_size must be positive");
    }
    if (root.contains("filter")) {
        const auto& f = root.at("filter");
        check_keys(f, {"lambda", "xi", "weight_mode"}, "filter");
        read_opt(f, "lambda", "filter", cfg.filter.lambda);
        read_opt(f, "xi", "filter", cfg.filter.xi);
        if (f.contains("weight_mode")) {
            try {
                cfg.filter.weight_mode = parse_weight_mode(get<std::string>(f, "weight_mode", "filter"));
            } catch (const InvalidInput& e) {
                throw ConfigError(std::string("filter.weight_mode: ") + e.what());
            }
        }
        if (!(cfg.filter.lambda >= 0.0 && cfg.filter.lambda <= 1.0)) throw ConfigError("filter.lambda outside [0, 1]");
        if (!(cfg.filter.xi > 0.0 && cfg.filter.xi <= 1.0)) throw ConfigError("filter.xi outside (0, 1]");
    }
    if (root.contains("methods")) {
        cfg.methods = get<std::vector<std::string>>(root, "methods", "config");
        if (cfg.methods.empty()) throw ConfigError("methods: expected a nonempty list");
        for (const auto& m : cfg.methods)
            if (!kMethods.count(m)) throw ConfigError("methods: unknown method '" + m + "'");
    }
    if (root.contains("seeds")) cfg.seeds = get<std::vector<std::uint64_t>>(root, "seeds", "config");
    if (cfg.seeds.empty()) throw ConfigError("seeds: expected a nonempty list");
    if (root.contains("output")) {
        const auto& o = root.at("output");
        check_keys(o, {"dir"}, "output");
        read_opt(o, "dir", "output", cfg.output_dir);
    }
    if (cfg.n_tar == 0) throw ConfigError("target.size must be positive");
    if (!(cfg.n_tar < cfg.n_src)) throw ConfigError("target.size must be smaller than source.size");
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string canonical_json(const ExperimentConfig& cfg) {
    json j;
    json rewards = json::object();
    for (const auto& [cell, r] : cfg.env.reward_map) rewards[std::to_string(cell)] = r;
    j["env"] = {{"width", cfg.env.width},
                {"height", cfg.env.height},
                {"terminal_cells", cfg.env.terminal_cells},
                {"reward_map", rewards},
                {"start_cells", cfg.env.start_cells},
                {"slip_prob", cfg.env.slip_prob},
                {"gamma", cfg.env.gamma},
                {"seed", cfg.env.seed}};
    json pairs = json::array();
    for (const auto& [s, a] : cfg.shift.pairs) pairs.push_back({s, a});
    j["shift"] = {{"kind", cfg.shift.kind == ShiftKind::action_block ? "action_block" : "kernel_perturb"},
                  {"pairs", pairs},
                  {"actions", cfg.shift.actions},
                  {"magnitude", cfg.shift.magnitude},
                  {"stay_action", cfg.shift.stay_action ? json(*cfg.shift.stay_action) : json(nullptr)},
                  {"seed", cfg.shift.seed}};
    j["target"] = {{"size", cfg.n_tar}, {"behavior", behavior_json(cfg.target_behavior)}};
    json comps = json::array();
    for (const auto& c : cfg.source)
        comps.push_back({{"fraction", c.fraction},
                         {"label", c.label},
                         {"kernel", c.kernel == KernelChoice::target ? "target" : "shifted"},
                         {"behavior", behavior_json(c.behavior)}});
    j["source"] = {{"size", cfg.n_src}, {"components", comps}};
    j["learner"] = {{"kind", cfg.learner == LearnerKind::sql ? "sql" : "iql"},
                    {"alpha", cfg.sql.alpha},
                    {"tau", cfg.pretrain_iql.tau},
                    {"beta", cfg.sql.beta},
                    {"iters", cfg.sql.iters},
                    {"tol", cfg.sql.tol}};
    j["iql"] = iql_json(cfg.iql);
    j["score"] = {{"kind", cfg.scorer == ScorerKind::nce ? "nce" : "bayes"},
                  {"k", cfg.nce.k},
                  {"negatives_per_positive", cfg.nce.negatives_per_positive},
                  {"epochs", cfg.nce.epochs},
                  {"step_size", cfg.nce.step_size},
                  {"init_scale", cfg.nce.init_scale},
                  {"l2", cfg.nce.l2}};
    j["filter"] = {{"lambda", cfg.filter.lambda},
                   {"xi", cfg.filter.xi},
                   {"weight_mode", to_string(cfg.filter.weight_mode)}};
    j["methods"] = cfg.methods;
    j["seeds"] = cfg.seeds;
    return j.dump();
}

std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_json(cfg)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace dvdf
