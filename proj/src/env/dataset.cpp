#include "dvdf/env/dataset.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "dvdf/core/errors.hpp"
#include "dvdf/core/mdp_io.hpp"
#include "dvdf/core/rng.hpp"
#include "dvdf/core/text_format.hpp"

namespace dvdf {

namespace {

void check_label(const std::string& label, const char* what) {
    if (label.find_first_of(",\n\r") != std::string::npos)
        throw InvalidInput(std::string("dataset: ") + what + " must not contain commas or newlines");
}

std::filesystem::path behavior_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".behavior";
    return p;
}

} // namespace

std::string to_string(Domain d) { return d == Domain::source ? "source" : "target"; }

Domain parse_domain(const std::string& text) {
    if (text == "source") return Domain::source;
    if (text == "target") return Domain::target;
    throw InvalidInput("unknown domain '" + text + "'");
}

std::size_t episode_horizon(double gamma) {
    return static_cast<std::size_t>(std::ceil(std::log(1e-6) / std::log(gamma)));
}

Dataset collect(const TabularMDP& mdp, const PolicyTable& mu, std::size_t n, std::uint64_t seed, Domain domain,
                const std::string& quality, const std::string& mdp_id) {
    if (!mu.fits(mdp)) throw InvalidInput("collect: behavior does not fit the MDP");
    check_label(quality, "quality");
    check_label(mdp_id, "mdp_id");
    Dataset data;
    data.behavior = mu;
    data.mdp_id = mdp_id;
    data.seed = seed;
    data.domain = domain;
    data.quality = quality;
    data.n_states = mdp.n_states();
    data.n_actions = mdp.n_actions();
    data.gamma = mdp.gamma();
    data.records.reserve(n);

    const auto absorbing = mdp.absorbing_states();
    const std::size_t horizon = episode_horizon(mdp.gamma());
    Rng rng(seed);
    std::size_t s = sample_categorical(rng, mdp.initial());
    std::size_t t = 0;
    while (data.records.size() < n) {
        const std::size_t a = sample_categorical(rng, mu.row(s));
        const std::size_t next = sample_categorical(rng, mdp.row(s, a));
        const bool done = absorbing[next];
        data.records.push_back({s, a, mdp.reward(s, a), next, done, domain, quality});
        ++t;
        if (done || t >= horizon) {
            s = sample_categorical(rng, mdp.initial());
            t = 0;
        } else {
            s = next;
        }
    }
    return data;
}

std::vector<double> pair_counts(const Dataset& data) {
    std::vector<double> counts(data.n_states * data.n_actions, 0.0);
    for (const auto& rec : data.records) counts[rec.s * data.n_actions + rec.a] += 1.0;
    return counts;
}

PolicyTable empirical_behavior(const Dataset& data) {
    const std::size_t S = data.n_states;
    const std::size_t A = data.n_actions;
    auto probs = pair_counts(data);
    for (std::size_t s = 0; s < S; ++s) {
        double total = 0.0;
        for (std::size_t a = 0; a < A; ++a) total += probs[s * A + a];
        for (std::size_t a = 0; a < A; ++a)
            probs[s * A + a] = total > 0.0 ? probs[s * A + a] / total : 1.0 / static_cast<double>(A);
    }
    return PolicyTable(S, A, std::move(probs));
}

Dataset mix(std::span<const Dataset> datasets) {
    if (datasets.empty()) throw InvalidInput("mix: no datasets");
    const Dataset& first = datasets.front();
    const std::size_t S = first.n_states;
    const std::size_t A = first.n_actions;
    Dataset out;
    out.n_states = S;
    out.n_actions = A;
    out.gamma = first.gamma;
    out.seed = first.seed;
    out.domain = first.domain;
    out.mdp_id = first.mdp_id;
    out.quality = first.quality;
    std::size_t total = 0;
    for (const auto& d : datasets) {
        if (d.n_states != S || d.n_actions != A) throw InvalidInput("mix: incompatible MDP shapes");
        if (d.gamma != first.gamma) throw InvalidInput("mix: incompatible discounts");
        if (d.domain != first.domain) throw InvalidInput("mix: datasets from different domains");
        if (d.quality != out.quality) out.quality = "mixture";
        if (d.mdp_id != out.mdp_id && out.mdp_id.find(d.mdp_id) == std::string::npos) out.mdp_id += "+" + d.mdp_id;
        total += d.size();
    }
    out.records.reserve(total);
    for (const auto& d : datasets) out.records.insert(out.records.end(), d.records.begin(), d.records.end());

    // per-state weights c_i(s) / sum_j c_j(s); dataset sizes on unvisited states
    std::vector<double> state_counts(datasets.size() * S, 0.0);
    for (std::size_t i = 0; i < datasets.size(); ++i)
        for (const auto& rec : datasets[i].records) state_counts[i * S + rec.s] += 1.0;
    std::vector<double> probs(S * A, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<double> w(datasets.size());
        double z = 0.0;
        for (std::size_t i = 0; i < datasets.size(); ++i) z += state_counts[i * S + s];
        for (std::size_t i = 0; i < datasets.size(); ++i) {
            if (z > 0.0) w[i] = state_counts[i * S + s] / z;
            else if (total > 0) w[i] = static_cast<double>(datasets[i].size()) / static_cast<double>(total);
            else w[i] = 1.0 / static_cast<double>(datasets.size());
        }
        for (std::size_t a = 0; a < A; ++a) {
            double p = 0.0;
            for (std::size_t i = 0; i < datasets.size(); ++i)
                if (w[i] > 0.0) p += w[i] * datasets[i].behavior(s, a);
            probs[s * A + a] = p;
        }
    }
    out.behavior = PolicyTable(S, A, std::move(probs));
    return out;
}

void validate(const Dataset& data) {
    if (data.behavior.n_states() != data.n_states || data.behavior.n_actions() != data.n_actions)
        throw InvalidInput("dataset: behavior shape does not match the header");
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const auto& rec = data.records[i];
        if (rec.s >= data.n_states || rec.s_next >= data.n_states || rec.a >= data.n_actions)
            throw InvalidInput("dataset: record " + std::to_string(i) + " out of range");
        if (!(data.behavior(rec.s, rec.a) > 0.0))
            throw InvalidInput("dataset: record " + std::to_string(i) + " has zero behavior probability");
        if (!std::isfinite(rec.r)) throw InvalidInput("dataset: non-finite reward in record " + std::to_string(i));
    }
}

void write_dataset(std::ostream& out, const Dataset& data) {
    check_label(data.mdp_id, "mdp_id");
    check_label(data.quality, "quality");
    out << data.records.size() << ',' << data.mdp_id << ',' << to_string(data.domain) << ',' << data.quality << ','
        << data.seed << ',' << data.n_states << ',' << data.n_actions << ',' << format_double(data.gamma) << '\n';
    for (const auto& rec : data.records) {
        check_label(rec.quality, "quality");
        out << rec.s << ',' << rec.a << ',' << format_double(rec.r) << ',' << rec.s_next << ',' << (rec.done ? 1 : 0)
            << ',' << to_string(rec.domain) << ',' << rec.quality << '\n';
    }
    if (!out) throw InvalidInput("dataset: write failed");
}

Dataset read_dataset(std::istream& in, std::optional<PolicyTable> behavior) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("dataset: missing header");
    const auto head = split(line, ',');
    if (head.size() != 8) throw InvalidInput("dataset: header needs 8 fields");
    Dataset data;
    const auto count = parse_unsigned(head[0]);
    data.mdp_id = std::string(head[1]);
    data.domain = parse_domain(std::string(head[2]));
    data.quality = std::string(head[3]);
    data.seed = parse_unsigned(head[4]);
    data.n_states = parse_unsigned(head[5]);
    data.n_actions = parse_unsigned(head[6]);
    data.gamma = parse_double(head[7]);
    if (data.n_states == 0 || data.n_actions == 0) throw InvalidInput("dataset: empty shape");
    data.records.reserve(count);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 7) throw InvalidInput("dataset: record needs 7 fields");
        const auto done = parse_unsigned(f[4]);
        if (done > 1) throw InvalidInput("dataset: done flag must be 0 or 1");
        data.records.push_back({parse_unsigned(f[0]), parse_unsigned(f[1]), parse_double(f[2]),
                                parse_unsigned(f[3]), done == 1, parse_domain(std::string(f[5])), std::string(f[6])});
    }
    if (data.records.size() != count)
        throw InvalidInput("dataset: header announces " + std::to_string(count) + " records, found " +
                           std::to_string(data.records.size()));
    for (const auto& rec : data.records)
        if (rec.s >= data.n_states || rec.s_next >= data.n_states || rec.a >= data.n_actions)
            throw InvalidInput("dataset: record out of range");
    data.behavior = behavior ? std::move(*behavior) : empirical_behavior(data);
    validate(data);
    return data;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw InvalidInput("dataset: cannot open " + path.string());
        write_dataset(out, data);
    }
    std::ofstream out(behavior_path(path), std::ios::binary);
    if (!out) throw InvalidInput("dataset: cannot open " + behavior_path(path).string());
    write_policy(out, data.behavior);
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("dataset: cannot open " + path.string());
    std::optional<PolicyTable> behavior;
    if (std::ifstream side(behavior_path(path), std::ios::binary); side) behavior = read_policy(side);
    return read_dataset(in, std::move(behavior));
}

} // namespace dvdf
