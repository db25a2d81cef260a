#include "dvdf/score/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>

#include "dvdf/core/errors.hpp"
#include "dvdf/core/rng.hpp"
#include "dvdf/core/text_format.hpp"

namespace dvdf {

ScoreModel::ScoreModel(std::size_t n_states, std::size_t n_actions, std::size_t k)
    : n_states_(n_states), n_actions_(n_actions), k_(k), phi_(n_states * n_actions * k, 0.0),
      psi_(n_states * k, 0.0) {
    if (n_states == 0 || n_actions == 0 || k == 0) throw InvalidInput("score model: empty shape");
}

double ScoreModel::log_score(std::size_t s, std::size_t a, std::size_t next) const {
    if (s >= n_states_ || a >= n_actions_ || next >= n_states_) throw InvalidInput("score model: id out of range");
    const double* f = phi_.data() + (s * n_actions_ + a) * k_;
    const double* g = psi_.data() + next * k_;
    double dot = 0.0;
    for (std::size_t i = 0; i < k_; ++i) dot += f[i] * g[i];
    return dot;
}

double ScoreModel::score(std::size_t s, std::size_t a, std::size_t next) const {
    return std::exp(log_score(s, a, next));
}

namespace {

// Objective (mean loss plus l2 penalty) and its gradient into grad_phi/grad_psi.
double objective(const ScoreModel& m, const std::vector<NceSample>& samples, double total, double l2,
                 std::vector<double>* grad_phi, std::vector<double>* grad_psi) {
    const std::size_t k = m.k();
    const std::size_t A = m.n_actions();
    if (grad_phi) std::fill(grad_phi->begin(), grad_phi->end(), 0.0);
    if (grad_psi) std::fill(grad_psi->begin(), grad_psi->end(), 0.0);
    double loss = 0.0;
    std::vector<double> logits;
    for (const auto& smp : samples) {
        const std::size_t n = smp.next.size();
        logits.resize(n);
        double top = -INFINITY;
        for (std::size_t j = 0; j < n; ++j) {
            logits[j] = m.log_score(smp.s, smp.a, smp.next[j]);
            top = std::max(top, logits[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += std::exp(logits[j] - top);
        const double w = smp.count / total;
        loss += w * (top + std::log(z) - logits[0]);
        if (!grad_phi) continue;
        const std::size_t row = (smp.s * A + smp.a) * k;
        const double* f = m.phi().data() + row;
        for (std::size_t j = 0; j < n; ++j) {
            const double coef = w * (std::exp(logits[j] - top) / z - (j == 0 ? 1.0 : 0.0));
            if (coef == 0.0) continue;
            const double* g = m.psi().data() + smp.next[j] * k;
            double* gf = grad_phi->data() + row;
            double* gg = grad_psi->data() + smp.next[j] * k;
            for (std::size_t i = 0; i < k; ++i) {
                gf[i] += coef * g[i];
                gg[i] += coef * f[i];
            }
        }
    }
    // The last coordinate is the gauge column (psi fixed at 1, phi set after
    // training); it carries no gradient and no penalty.
    const auto free_coord = [k](std::size_t i) { return i % k != k - 1; };
    if (l2 > 0.0) {
        double norm = 0.0;
        for (std::size_t i = 0; i < m.phi().size(); ++i)
            if (free_coord(i)) norm += m.phi()[i] * m.phi()[i];
        for (std::size_t i = 0; i < m.psi().size(); ++i)
            if (free_coord(i)) norm += m.psi()[i] * m.psi()[i];
        loss += 0.5 * l2 * norm;
        if (grad_phi) {
            for (std::size_t i = 0; i < grad_phi->size(); ++i) (*grad_phi)[i] += l2 * m.phi()[i];
            for (std::size_t i = 0; i < grad_psi->size(); ++i) (*grad_psi)[i] += l2 * m.psi()[i];
        }
    }
    if (grad_phi) {
        for (std::size_t i = k - 1; i < grad_phi->size(); i += k) (*grad_phi)[i] = 0.0;
        for (std::size_t i = k - 1; i < grad_psi->size(); i += k) (*grad_psi)[i] = 0.0;
    }
    return loss;
}

void check_pair(const Dataset& d_tar, const Dataset& d_src) {
    if (d_tar.empty() || d_src.empty()) throw InvalidInput("train_nce: both datasets must be nonempty");
    if (d_tar.n_states != d_src.n_states || d_tar.n_actions != d_src.n_actions)
        throw InvalidInput("train_nce: datasets differ in shape");
}

// The contrastive loss only sees logit differences within one (s, a), so a
// per-pair offset is free. Fix it so that E_{s'~q}[h(s, a, s')] = 1, which
// makes h an estimate of P_tar(s'|s,a) / q(s'|s,a).
void fix_gauge(ScoreModel& m, const std::vector<double>& q_all) {
    const std::size_t k = m.k();
    for (std::size_t sa = 0; sa < m.n_states() * m.n_actions(); ++sa) {
        const double* q = q_all.data() + sa * m.n_states();
        double* f = m.phi().data() + sa * k;
        f[k - 1] = 0.0;
        std::vector<double> logits(m.n_states(), -INFINITY);
        double top = -INFINITY;
        for (std::size_t next = 0; next < m.n_states(); ++next) {
            if (q[next] == 0.0) continue;
            logits[next] = m.log_score(sa / m.n_actions(), sa % m.n_actions(), next);
            top = std::max(top, logits[next]);
        }
        double z = 0.0;
        for (std::size_t next = 0; next < m.n_states(); ++next)
            if (q[next] > 0.0) z += q[next] * std::exp(logits[next] - top);
        f[k - 1] = -(top + std::log(z));
    }
}

constexpr int kMaxDivergenceRetries = 5;
constexpr int kMaxBacktracks = 60;

} // namespace

double nce_loss(const ScoreModel& model, const std::vector<NceSample>& samples) {
    double total = 0.0;
    for (const auto& s : samples) total += s.count;
    if (!(total > 0.0)) throw InvalidInput("nce_loss: no samples");
    return objective(model, samples, total, 0.0, nullptr, nullptr);
}

ScoreModel train_nce(const Dataset& d_tar, const Dataset& d_src, const NceConfig& cfg) {
    check_pair(d_tar, d_src);
    if (cfg.negatives_per_positive < 1) throw InvalidInput("train_nce: negatives_per_positive must be at least 1");
    if (cfg.k < 2) throw InvalidInput("train_nce: k must be at least 2");
    if (!(cfg.step_size > 0.0)) throw InvalidInput("train_nce: step_size must be positive");
    if (!(cfg.l2 >= 0.0)) throw InvalidInput("train_nce: l2 must be nonnegative");
    const std::size_t S = d_tar.n_states;
    const std::size_t A = d_tar.n_actions;

    const std::vector<double> q = source_next_distribution(d_src);

    Rng rng(cfg.seed);
    ScoreModel model(S, A, cfg.k);
    for (double& x : model.phi()) x = uniform(rng, -cfg.init_scale, cfg.init_scale);
    for (double& x : model.psi()) x = uniform(rng, -cfg.init_scale, cfg.init_scale);
    for (std::size_t i = cfg.k - 1; i < model.phi().size(); i += cfg.k) model.phi()[i] = 0.0;
    for (std::size_t i = cfg.k - 1; i < model.psi().size(); i += cfg.k) model.psi()[i] = 1.0;

    // Negatives are drawn once; identical tuples are merged with counts.
    std::map<std::vector<std::size_t>, double> tuples;
    std::vector<std::size_t> key(3 + cfg.negatives_per_positive);
    for (const auto& rec : d_tar.records) {
        key[0] = rec.s;
        key[1] = rec.a;
        key[2] = rec.s_next;
        const std::span<const double> row(q.data() + (rec.s * A + rec.a) * S, S);
        for (std::size_t j = 0; j < cfg.negatives_per_positive; ++j) key[3 + j] = sample_categorical(rng, row);
        tuples[key] += 1.0;
    }
    std::vector<NceSample> samples;
    samples.reserve(tuples.size());
    for (const auto& [k, count] : tuples) samples.push_back({k[0], k[1], {k.begin() + 2, k.end()}, count});
    const double total = static_cast<double>(d_tar.size());

    std::vector<double> gphi(model.phi().size()), gpsi(model.psi().size());
    std::vector<double> tphi(gphi.size()), tpsi(gpsi.size());
    double loss = objective(model, samples, total, cfg.l2, &gphi, &gpsi);
    if (!std::isfinite(loss)) throw TrainingFailure("train_nce: initial loss is not finite");
    model.loss_history.push_back(loss);

    ScoreModel trial = model;
    double eta = cfg.step_size;
    int divergences = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        bool accepted = false;
        for (int attempt = 0; attempt < kMaxBacktracks; ++attempt) {
            for (std::size_t i = 0; i < gphi.size(); ++i) trial.phi()[i] = model.phi()[i] - eta * gphi[i];
            for (std::size_t i = 0; i < gpsi.size(); ++i) trial.psi()[i] = model.psi()[i] - eta * gpsi[i];
            const double trial_loss = objective(trial, samples, total, cfg.l2, &tphi, &tpsi);
            if (!std::isfinite(trial_loss)) {
                if (++divergences > kMaxDivergenceRetries)
                    throw TrainingFailure("train_nce: loss diverged after repeated step halving");
                eta *= 0.5;
                continue;
            }
            if (trial_loss > loss) {
                eta *= 0.5;
                continue;
            }
            std::swap(model.phi(), trial.phi());
            std::swap(model.psi(), trial.psi());
            gphi.swap(tphi);
            gpsi.swap(tpsi);
            loss = trial_loss;
            eta *= 1.2;
            accepted = true;
            break;
        }
        if (!accepted) break;
        model.loss_history.push_back(loss);
    }
    fix_gauge(model, q);
    model.trained = true;
    model.final_loss = loss;
    return model;
}

BayesScorer::BayesScorer(const TabularMDP& tar, std::vector<double> q, double c)
    : n_states_(tar.n_states()), n_actions_(tar.n_actions()),
      p_tar_(tar.transitions().begin(), tar.transitions().end()), q_(std::move(q)), c_(c) {
    if (q_.size() != p_tar_.size()) throw InvalidInput("bayes scorer: negative distribution has wrong size");
    if (!(c_ > 0.0)) throw InvalidInput("bayes scorer: ratio must be positive");
    for (double x : q_)
        if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidInput("bayes scorer: negative distribution entry invalid");
}

double BayesScorer::score(std::size_t s, std::size_t a, std::size_t next) const {
    if (s >= n_states_ || a >= n_actions_ || next >= n_states_) throw InvalidInput("bayes scorer: id out of range");
    const std::size_t i = (s * n_actions_ + a) * n_states_ + next;
    const double p = p_tar_[i];
    const double denom = p + c_ * q_[i];
    if (denom == 0.0) return 0.0;
    return p / denom;
}

BayesScorer exact_bayes_score(const TabularMDP& tar, std::vector<double> src_next, double c) {
    return BayesScorer(tar, std::move(src_next), c);
}

std::vector<double> source_next_distribution(const Dataset& d_src) {
    if (d_src.empty()) throw InvalidInput("source_next_distribution: dataset is empty");
    const std::size_t S = d_src.n_states;
    const std::size_t SA = S * d_src.n_actions;
    std::vector<double> marginal(S, 0.0);
    std::vector<double> out(SA * S, 0.0);
    std::vector<double> rows(SA, 0.0);
    for (const auto& rec : d_src.records) {
        if (rec.s >= S || rec.a >= d_src.n_actions || rec.s_next >= S)
            throw InvalidInput("source_next_distribution: record out of range");
        marginal[rec.s_next] += 1.0;
        out[(rec.s * d_src.n_actions + rec.a) * S + rec.s_next] += 1.0;
        rows[rec.s * d_src.n_actions + rec.a] += 1.0;
    }
    for (double& x : marginal) x /= static_cast<double>(d_src.size());
    for (std::size_t sa = 0; sa < SA; ++sa) {
        double* row = out.data() + sa * S;
        if (rows[sa] > 0.0) {
            for (std::size_t i = 0; i < S; ++i) row[i] /= rows[sa];
        } else {
            std::copy(marginal.begin(), marginal.end(), row);
        }
    }
    return out;
}

void write_score_model(std::ostream& out, const ScoreModel& m) {
    out << "score-model v1\n"
        << m.n_states() << ' ' << m.n_actions() << ' ' << m.k() << ' ' << (m.trained ? 1 : 0) << ' '
        << format_double(m.final_loss) << '\n';
    auto rows = [&](const std::vector<double>& table) {
        for (std::size_t r = 0; r < table.size() / m.k(); ++r) {
            for (std::size_t i = 0; i < m.k(); ++i) out << (i ? " " : "") << format_double(table[r * m.k() + i]);
            out << '\n';
        }
    };
    rows(m.phi());
    rows(m.psi());
    if (!out) throw InvalidInput("score model: write failed");
}

ScoreModel read_score_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != "score-model v1") throw InvalidInput("score model: bad magic");
    if (!std::getline(in, line)) throw InvalidInput("score model: missing shape line");
    const auto head = split(trim(line), ' ');
    if (head.size() != 5) throw InvalidInput("score model: shape line needs 5 fields");
    ScoreModel m(parse_unsigned(head[0]), parse_unsigned(head[1]), parse_unsigned(head[2]));
    const auto trained = parse_unsigned(head[3]);
    if (trained > 1) throw InvalidInput("score model: trained flag must be 0 or 1");
    m.trained = trained == 1;
    m.final_loss = parse_double(head[4]);
    auto rows = [&](std::vector<double>& table, const char* what) {
        for (std::size_t r = 0; r < table.size() / m.k(); ++r) {
            if (!std::getline(in, line)) throw InvalidInput(std::string("score model: missing ") + what + " row");
            const auto f = split(trim(line), ' ');
            if (f.size() != m.k()) throw InvalidInput(std::string("score model: wrong width in ") + what);
            for (std::size_t i = 0; i < m.k(); ++i) table[r * m.k() + i] = parse_double(f[i]);
        }
    };
    rows(m.phi(), "phi");
    rows(m.psi(), "psi");
    return m;
}

void save_score_model(const std::string& path, const ScoreModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("score model: cannot open " + path);
    write_score_model(out, model);
}

ScoreModel load_score_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("score model: cannot open " + path);
    return read_score_model(in);
}

} // namespace dvdf
