#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dvdf {

/// Finite MDP (S, A, P, r, rho0, gamma) with a dense kernel stored row-major
/// in (s, a, s') order. Validated on construction and immutable afterwards.
class TabularMDP {
public:
    TabularMDP(std::size_t n_states, std::size_t n_actions,
               std::vector<double> transitions, std::vector<double> rewards,
               std::vector<double> initial, double gamma, double r_max);

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    double gamma() const noexcept { return gamma_; }
    double r_max() const noexcept { return r_max_; }

    double p(std::size_t s, std::size_t a, std::size_t next) const noexcept {
        return transitions_[(s * n_actions_ + a) * n_states_ + next];
    }
    std::span<const double> row(std::size_t s, std::size_t a) const noexcept {
        return {transitions_.data() + (s * n_actions_ + a) * n_states_, n_states_};
    }
    double reward(std::size_t s, std::size_t a) const noexcept {
        return rewards_[s * n_actions_ + a];
    }

    std::span<const double> transitions() const noexcept { return transitions_; }
    std::span<const double> rewards() const noexcept { return rewards_; }
    std::span<const double> initial() const noexcept { return initial_; }

    /// Same rewards, initial distribution and discount over a new kernel.
    TabularMDP with_transitions(std::vector<double> transitions) const;

    /// States whose every action self-loops with zero reward.
    std::vector<bool> absorbing_states() const;

    bool same_shape(const TabularMDP& other) const noexcept {
        return n_states_ == other.n_states_ && n_actions_ == other.n_actions_;
    }

private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<double> transitions_;
    std::vector<double> rewards_;
    std::vector<double> initial_;
    double gamma_;
    double r_max_;
};

/// Throws DomainMismatch unless the two MDPs share shapes, rewards, initial
/// distribution and discount, i.e. differ at most in the kernel.
void require_same_domain(const TabularMDP& src, const TabularMDP& tar);

} // namespace dvdf
