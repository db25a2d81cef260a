#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dvdf {

class TabularMDP;

/// Stochastic policy pi(a|s) as a dense (s, a) table.
class PolicyTable {
public:
    PolicyTable(std::size_t n_states, std::size_t n_actions, std::vector<double> probs);

    static PolicyTable uniform(std::size_t n_states, std::size_t n_actions);
    static PolicyTable deterministic(std::size_t n_actions, std::span<const std::size_t> actions);

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }

    double operator()(std::size_t s, std::size_t a) const noexcept {
        return probs_[s * n_actions_ + a];
    }
    std::span<const double> row(std::size_t s) const noexcept {
        return {probs_.data() + s * n_actions_, n_actions_};
    }
    std::span<const double> probs() const noexcept { return probs_; }

    /// Index of the most probable action; lowest index on ties.
    std::size_t argmax(std::size_t s) const noexcept;

    bool fits(const TabularMDP& mdp) const noexcept;

private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<double> probs_;
};

/// (1 - epsilon) * pi + epsilon * uniform.
PolicyTable soften(const PolicyTable& pi, double epsilon);

/// Convex combination sum_i w_i * pi_i with weights that need not be normalized.
PolicyTable mix_policies(std::span<const PolicyTable> policies, std::span<const double> weights);

} // namespace dvdf
