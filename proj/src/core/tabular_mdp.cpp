#include "dvdf/core/tabular_mdp.hpp"

#include <cmath>
#include <string>

#include "dvdf/core/errors.hpp"

namespace dvdf {

namespace {

constexpr double kSumTol = 1e-12;

void check_distribution(std::span<const double> row, const std::string& what) {
    double total = 0.0;
    for (double x : row) {
        if (!std::isfinite(x)) throw InvalidInput(what + ": non-finite entry");
        if (x < 0.0 || x > 1.0) throw InvalidInput(what + ": entry outside [0, 1]");
        total += x;
    }
    if (std::abs(total - 1.0) > kSumTol) throw InvalidInput(what + ": does not sum to 1");
}

} // namespace

TabularMDP::TabularMDP(std::size_t n_states, std::size_t n_actions,
                       std::vector<double> transitions, std::vector<double> rewards,
                       std::vector<double> initial, double gamma, double r_max)
    : n_states_(n_states),
      n_actions_(n_actions),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      initial_(std::move(initial)),
      gamma_(gamma),
      r_max_(r_max) {
    if (n_states_ == 0 || n_actions_ == 0) throw InvalidInput("mdp: empty state or action set");
    if (transitions_.size() != n_states_ * n_actions_ * n_states_)
        throw InvalidInput("mdp: kernel has wrong size");
    if (rewards_.size() != n_states_ * n_actions_) throw InvalidInput("mdp: reward table has wrong size");
    if (initial_.size() != n_states_) throw InvalidInput("mdp: initial distribution has wrong size");
    if (!std::isfinite(gamma_) || gamma_ <= 0.0 || gamma_ >= 1.0)
        throw InvalidInput("mdp: gamma must lie in (0, 1)");
    if (!std::isfinite(r_max_) || r_max_ < 0.0) throw InvalidInput("mdp: r_max must be finite and >= 0");

    for (std::size_t s = 0; s < n_states_; ++s)
        for (std::size_t a = 0; a < n_actions_; ++a)
            check_distribution(row(s, a),
                               "mdp: kernel row (" + std::to_string(s) + "," + std::to_string(a) + ")");
    check_distribution(initial_, "mdp: initial distribution");
    for (double r : rewards_) {
        if (!std::isfinite(r)) throw InvalidInput("mdp: non-finite reward");
        if (std::abs(r) > r_max_) throw InvalidInput("mdp: |reward| exceeds r_max");
    }
}

TabularMDP TabularMDP::with_transitions(std::vector<double> transitions) const {
    return TabularMDP(n_states_, n_actions_, std::move(transitions), rewards_, initial_, gamma_, r_max_);
}

std::vector<bool> TabularMDP::absorbing_states() const {
    std::vector<bool> out(n_states_, true);
    for (std::size_t s = 0; s < n_states_; ++s)
        for (std::size_t a = 0; a < n_actions_ && out[s]; ++a)
            out[s] = p(s, a, s) == 1.0 && reward(s, a) == 0.0;
    return out;
}

void require_same_domain(const TabularMDP& src, const TabularMDP& tar) {
    if (!src.same_shape(tar)) throw DomainMismatch("domains differ in state/action counts");
    if (src.gamma() != tar.gamma()) throw DomainMismatch("domains differ in discount");
    if (src.r_max() != tar.r_max()) throw DomainMismatch("domains differ in r_max");
    const auto ra = src.rewards();
    const auto rb = tar.rewards();
    for (std::size_t i = 0; i < ra.size(); ++i)
        if (ra[i] != rb[i]) throw DomainMismatch("domains differ in rewards");
    const auto ia = src.initial();
    const auto ib = tar.initial();
    for (std::size_t i = 0; i < ia.size(); ++i)
        if (ia[i] != ib[i]) throw DomainMismatch("domains differ in initial distribution");
}

} // namespace dvdf
