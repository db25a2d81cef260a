#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dvdf/core/tabular_mdp.hpp"
#include "dvdf/env/dataset.hpp"

namespace dvdf {

/// Anything that rates how well a transition fits the target dynamics.
class TransitionScorer {
public:
    virtual ~TransitionScorer() = default;
    virtual std::size_t n_states() const noexcept = 0;
    virtual std::size_t n_actions() const noexcept = 0;
    virtual double score(std::size_t s, std::size_t a, std::size_t next) const = 0;
};

struct NceConfig {
    std::size_t k = 16;
    std::size_t negatives_per_positive = 1;
    std::size_t epochs = 500;
    double step_size = 1.0;
    double init_scale = 0.1;
    double l2 = 1e-3;
    std::uint64_t seed = 0;
};

/// h(s, a, s') = exp(<phi(s, a), psi(s')>) with dense embedding tables.
class ScoreModel final : public TransitionScorer {
public:
    ScoreModel(std::size_t n_states, std::size_t n_actions, std::size_t k);

    std::size_t n_states() const noexcept override { return n_states_; }
    std::size_t n_actions() const noexcept override { return n_actions_; }
    std::size_t k() const noexcept { return k_; }

    double log_score(std::size_t s, std::size_t a, std::size_t next) const;
    double score(std::size_t s, std::size_t a, std::size_t next) const override;

    std::vector<double>& phi() noexcept { return phi_; }  // (s, a) rows of length k
    std::vector<double>& psi() noexcept { return psi_; }  // s' rows of length k
    const std::vector<double>& phi() const noexcept { return phi_; }
    const std::vector<double>& psi() const noexcept { return psi_; }

    bool trained = false;
    double final_loss = 0.0;
    std::vector<double> loss_history;  // loss after each accepted epoch, initial loss first

private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::size_t k_;
    std::vector<double> phi_;
    std::vector<double> psi_;
};

/// Full-batch gradient descent on the softmax contrastive loss
///   -log h(s,a,s'+) / (h(s,a,s'+) + sum_j h(s,a,s'_j))
/// with positives from d_tar and negatives s'_j drawn from
/// source_next_distribution(d_src) at the same (s, a). A step that raises the loss is retried at half size,
/// so the loss history is nonincreasing. The last embedding coordinate is a
/// gauge column: psi is pinned to 1 there and phi is chosen after training so
/// that E_{s'~q(.|s,a)}[h(s,a,s')] = 1 for every (s, a). Requires k >= 2.
ScoreModel train_nce(const Dataset& d_tar, const Dataset& d_src, const NceConfig& cfg);

/// Mean contrastive loss of a model on fixed (s, a, positive, negatives) tuples.
struct NceSample {
    std::size_t s = 0;
    std::size_t a = 0;
    std::vector<std::size_t> next;  // positive first
    double count = 1.0;
};
double nce_loss(const ScoreModel& model, const std::vector<NceSample>& samples);

/// The population optimum of the contrastive loss, normalized to a posterior:
///   h*(s,a,s') = P_tar(s'|s,a) / (P_tar(s'|s,a) + c q(s'|s,a)).
class BayesScorer final : public TransitionScorer {
public:
    /// q holds one negative-sampling distribution per (s, a), row-major (s, a, s').
    BayesScorer(const TabularMDP& tar, std::vector<double> q, double c);

    std::size_t n_states() const noexcept override { return n_states_; }
    std::size_t n_actions() const noexcept override { return n_actions_; }
    double score(std::size_t s, std::size_t a, std::size_t next) const override;

private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<double> p_tar_;
    std::vector<double> q_;
    double c_;
};

BayesScorer exact_bayes_score(const TabularMDP& tar, std::vector<double> src_next, double c);

/// Empirical next-state distribution of the source data per (s, a), row-major
/// (s, a, s'); pairs absent from the data get the next-state marginal. This is
/// the negative distribution used by train_nce.
std::vector<double> source_next_distribution(const Dataset& d_src);

// "score-model v1", "<S> <A> <k> <trained> <final_loss>", S*A phi rows, S psi rows.
void write_score_model(std::ostream& out, const ScoreModel& model);
ScoreModel read_score_model(std::istream& in);
void save_score_model(const std::string& path, const ScoreModel& model);
ScoreModel load_score_model(const std::string& path);

} // namespace dvdf
