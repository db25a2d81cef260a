#include "dvdf/learners/critic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "dvdf/core/errors.hpp"
#include "dvdf/core/mdp_io.hpp"
#include "dvdf/core/solve.hpp"
#include "dvdf/core/text_format.hpp"
#include "dvdf/learners/operators.hpp"

namespace dvdf {

PretrainedCritic fit_critic(const TransitionStats& stats, const StateOperator& op, double beta,
                            std::size_t iters, double tol, const std::string& label) {
    if (!stats.any_observed()) throw InvalidInput(label + ": dataset is empty");
    if (!(beta > 0.0)) throw InvalidInput(label + ": beta must be positive");
    const std::size_t S = stats.n_states;
    const std::size_t A = stats.n_actions;
    const double gamma = stats.gamma;

    std::vector<double> q(S * A, 0.0), v(S, 0.0), q_next(S * A, 0.0);
    std::vector<double> qs, ws;
    PretrainedCritic out;
    out.learner = label;
    for (std::size_t it = 1; it <= iters; ++it) {
        double residual = 0.0;
        for (std::size_t sa = 0; sa < S * A; ++sa) {
            const double w = stats.weight[sa];
            if (w <= 0.0) continue;
            const double* nx = stats.next.data() + sa * S;
            double future = 0.0;
            for (std::size_t t = 0; t < S; ++t)
                if (nx[t] != 0.0) future += nx[t] * v[t];
            q_next[sa] = (stats.reward[sa] + gamma * future) / w;
            residual = std::max(residual, std::abs(q_next[sa] - q[sa]));
        }
        q.swap(q_next);
        for (std::size_t s = 0; s < S; ++s) {
            qs.clear();
            ws.clear();
            for (std::size_t a = 0; a < A; ++a) {
                if (stats.weight[s * A + a] <= 0.0) continue;
                qs.push_back(q[s * A + a]);
                ws.push_back(stats.weight[s * A + a]);
            }
            v[s] = qs.empty() ? 0.0 : op(qs, ws);
        }
        out.iterations = it;
        out.residual = residual;
        out.residuals.push_back(residual);
        if (residual <= tol) {
            out.converged = true;
            break;
        }
    }
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            if (stats.weight[s * A + a] <= 0.0) q[s * A + a] = v[s];
    out.values = ValueTables::from_qv(S, A, std::move(q), std::move(v));
    out.policy = awr_extract(S, A, stats.weight, out.values, beta);
    return out;
}

PretrainedCritic fit_iql(const TransitionStats& stats, const IqlConfig& cfg) {
    if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) throw InvalidInput("iql: tau outside (0, 1)");
    const double tau = cfg.tau;
    return fit_critic(
        stats, [tau](std::span<const double> q, std::span<const double> w) { return expectile(q, w, tau); },
        cfg.beta, cfg.iters, cfg.tol, "iql");
}

PretrainedCritic fit_sql(const TransitionStats& stats, const SqlConfig& cfg) {
    if (!(cfg.alpha > 0.0)) throw InvalidInput("sql: alpha must be positive");
    const double alpha = cfg.alpha;
    return fit_critic(
        stats, [alpha](std::span<const double> q, std::span<const double> w) { return sparse_value(q, w, alpha); },
        cfg.beta, cfg.iters, cfg.tol, "sql");
}

PretrainedCritic fit_iql(const Dataset& data, const IqlConfig& cfg) {
    if (data.empty()) throw InvalidInput("iql: dataset is empty");
    return fit_iql(stats_of(data), cfg);
}

PretrainedCritic fit_sql(const Dataset& data, const SqlConfig& cfg) {
    if (data.empty()) throw InvalidInput("sql: dataset is empty");
    return fit_sql(stats_of(data), cfg);
}

PolicyTable awr_extract(std::size_t S, std::size_t A, std::span<const double> weight, const ValueTables& adv,
                        double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidInput("awr: beta must be positive");
    if (weight.size() != S * A || adv.n_states != S || adv.n_actions != A)
        throw InvalidInput("awr: shape mismatch");
    std::vector<double> probs(S * A, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < A; ++a)
            if (weight[s * A + a] > 0.0) top = std::max(top, adv.A(s, a));
        double* row = probs.data() + s * A;
        if (top == -std::numeric_limits<double>::infinity()) {
            std::fill(row, row + A, 1.0 / static_cast<double>(A));
            continue;
        }
        double z = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            if (weight[s * A + a] <= 0.0) continue;
            row[a] = weight[s * A + a] * std::exp(beta * (adv.A(s, a) - top));
            z += row[a];
        }
        for (std::size_t a = 0; a < A; ++a) row[a] /= z;
    }
    return PolicyTable(S, A, std::move(probs));
}

PolicyTable awr_extract(const Dataset& data, const ValueTables& adv, double beta) {
    return awr_extract(data.n_states, data.n_actions, pair_counts(data), adv, beta);
}

std::vector<bool> support_mask(const Dataset& data) {
    std::vector<bool> mask(data.n_states * data.n_actions, false);
    for (const auto& rec : data.records) mask[rec.s * data.n_actions + rec.a] = true;
    return mask;
}

InSampleOptimal in_sample_optimal(const TabularMDP& mdp, const Dataset& data) {
    if (data.empty()) throw InvalidInput("in_sample_optimal: dataset is empty");
    if (data.n_states != mdp.n_states() || data.n_actions != mdp.n_actions())
        throw InvalidInput("in_sample_optimal: dataset does not fit the MDP");
    auto sol = value_iteration(mdp, 1e-11, support_mask(data));
    return {std::move(sol.policy), std::move(sol.values)};
}

AdvantageError advantage_error(const ValueTables& est, const ValueTables& truth, const Dataset& data,
                               double eps_denom) {
    if (!(eps_denom > 0.0)) throw InvalidInput("advantage_error: eps_denom must be positive");
    if (est.n_states != data.n_states || truth.n_states != data.n_states || est.n_actions != data.n_actions ||
        truth.n_actions != data.n_actions)
        throw InvalidInput("advantage_error: shape mismatch");
    AdvantageError out;
    double sum = 0.0;
    for (const auto& rec : data.records) {
        const double a_true = truth.A(rec.s, rec.a);
        if (std::abs(a_true) < eps_denom) {
            ++out.excluded;
            continue;
        }
        sum += (est.A(rec.s, rec.a) - a_true) / a_true;
        ++out.kept;
    }
    if (out.kept == 0) throw UndefinedMetric("advantage_error: every pair is below the denominator guard");
    out.value = sum / static_cast<double>(out.kept);
    return out;
}

double default_eps_denom(const ValueTables& truth, const Dataset& data) {
    double top = 0.0;
    for (const auto& rec : data.records) top = std::max(top, std::abs(truth.A(rec.s, rec.a)));
    if (top == 0.0) throw UndefinedMetric("advantage_error: true advantage vanishes on the dataset");
    return 1e-3 * top;
}

TabularMDP empirical_mdp(const Dataset& data) {
    if (data.empty()) throw InvalidInput("empirical_mdp: dataset is empty");
    const std::size_t S = data.n_states;
    const std::size_t A = data.n_actions;
    std::vector<double> counts(S * A, 0.0), kernel(S * A * S, 0.0), rewards(S * A, 0.0), initial(S, 0.0);
    double r_max = 0.0;
    for (const auto& rec : data.records) {
        const std::size_t sa = rec.s * A + rec.a;
        counts[sa] += 1.0;
        rewards[sa] += rec.r;
        kernel[sa * S + rec.s_next] += 1.0;
        initial[rec.s] += 1.0;
        r_max = std::max(r_max, std::abs(rec.r));
    }
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const std::size_t sa = s * A + a;
            double* row = kernel.data() + sa * S;
            if (counts[sa] == 0.0) {
                row[s] = 1.0;
                continue;
            }
            rewards[sa] = std::clamp(rewards[sa] / counts[sa], -r_max, r_max);
            for (std::size_t t = 0; t < S; ++t) row[t] /= counts[sa];
        }
        initial[s] /= static_cast<double>(data.size());
    }
    return TabularMDP(S, A, std::move(kernel), std::move(rewards), std::move(initial), data.gamma, r_max);
}

void write_critic(std::ostream& out, const PretrainedCritic& c) {
    const auto& t = c.values;
    if (c.learner.empty() || c.learner.find_first_of(" \n\r") != std::string::npos)
        throw InvalidInput("critic: learner label must be a single token");
    out << "pretrained-critic v1\n" << c.learner << '\n';
    out << t.n_states << ' ' << t.n_actions << ' ' << c.iterations << ' ' << format_double(c.residual) << ' '
        << (c.converged ? 1 : 0) << '\n';
    for (std::size_t s = 0; s < t.n_states; ++s) {
        for (std::size_t a = 0; a < t.n_actions; ++a) out << (a ? " " : "") << format_double(t.Q(s, a));
        out << '\n';
    }
    for (std::size_t s = 0; s < t.n_states; ++s) out << (s ? " " : "") << format_double(t.V(s));
    out << '\n';
    write_policy(out, c.policy);
    if (!out) throw InvalidInput("critic: write failed");
}

namespace {

std::vector<double> read_row(std::istream& in, std::size_t n, const char* what) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput(std::string("critic: missing ") + what);
    std::vector<double> row;
    for (auto tok : split(trim(line), ' ')) {
        if (tok.empty()) continue;
        row.push_back(parse_double(tok));
    }
    if (row.size() != n) throw InvalidInput(std::string("critic: wrong length in ") + what);
    return row;
}

} // namespace

PretrainedCritic read_critic(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != "pretrained-critic v1") throw InvalidInput("critic: bad magic");
    PretrainedCritic c;
    if (!std::getline(in, line)) throw InvalidInput("critic: missing label");
    c.learner = std::string(trim(line));
    const auto head = read_row(in, 5, "shape line");
    const auto S = static_cast<std::size_t>(head[0]);
    const auto A = static_cast<std::size_t>(head[1]);
    if (S == 0 || A == 0 || head[0] != static_cast<double>(S) || head[1] != static_cast<double>(A))
        throw InvalidInput("critic: bad shape");
    c.iterations = static_cast<std::size_t>(head[2]);
    c.residual = head[3];
    c.converged = head[4] != 0.0;
    std::vector<double> q;
    q.reserve(S * A);
    for (std::size_t s = 0; s < S; ++s) {
        const auto row = read_row(in, A, "Q row");
        q.insert(q.end(), row.begin(), row.end());
    }
    auto v = read_row(in, S, "V row");
    c.values = ValueTables::from_qv(S, A, std::move(q), std::move(v));
    if (c.values.advantage_defect() > 1e-12) throw InvalidInput("critic: advantage check failed");
    c.policy = read_policy(in);
    if (c.policy.n_states() != S || c.policy.n_actions() != A) throw InvalidInput("critic: policy shape mismatch");
    return c;
}

void save_critic(const std::string& path, const PretrainedCritic& critic) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("critic: cannot open " + path);
    write_critic(out, critic);
}

PretrainedCritic load_critic(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("critic: cannot open " + path);
    return read_critic(in);
}

} // namespace dvdf
