#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dvdf/env/dataset.hpp"

namespace dvdf {

/// Weighted transition sums per (s, a), the sufficient statistics of every
/// tabular in-sample learner here.
///   weight(s, a)        = sum of w
///   reward(s, a)        = sum of w * r
///   next(s, a, s')      = sum of w * (1 - done) over records landing in s'
struct TransitionStats {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    double gamma = 0.0;
    std::vector<double> weight;
    std::vector<double> reward;
    std::vector<double> next;

    TransitionStats(std::size_t n_states, std::size_t n_actions, double gamma);

    /// Adds the records of data; weights empty means unit weights.
    void add(const Dataset& data, std::span<const double> weights = {});

    bool observed(std::size_t s, std::size_t a) const noexcept { return weight[s * n_actions + a] > 0.0; }
    bool any_observed() const noexcept;
};

TransitionStats stats_of(const Dataset& data);

} // namespace dvdf
