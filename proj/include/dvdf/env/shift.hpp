#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "dvdf/core/tabular_mdp.hpp"

namespace dvdf {

enum class ShiftKind { action_block, kernel_perturb };

/// Kernel shift over a set of (s, a) pairs. Listing action ids affects that
/// action in every non-absorbing state; explicit pairs are taken as given.
struct ShiftSpec {
    ShiftKind kind = ShiftKind::action_block;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::size_t> actions;
    double magnitude = 0.0;
    std::optional<std::size_t> stay_action;  // defaults to the last action
    std::uint64_t seed = 0;                   // kernel_perturb only
};

/// action_block: P'(s,a) = (1 - m) P(s,a) + m P(s,stay).
/// kernel_perturb: P'(s,a) = (1 - m) P(s,a) + m q, q a seeded random row over
/// the cells reachable from s under any action, renormalized.
/// Magnitude 0 returns the base kernel unchanged.
TabularMDP apply_shift(const TabularMDP& base, const ShiftSpec& shift);

} // namespace dvdf
