#pragma once

#include <array>
#include <optional>
#include <string>

#include "dvdf/core/policy.hpp"
#include "dvdf/core/tabular_mdp.hpp"

namespace dvdf {

enum class Quality { random, medium, expert, mixture };

std::string to_string(Quality q);
Quality parse_quality(const std::string& text);

struct BehaviorSpec {
    Quality quality = Quality::random;
    std::optional<double> epsilon;  // expert: 0, medium and the medium part of a mixture: 0.5
    bool calibrate = false;         // medium: choose epsilon so that J is half the expert's
    std::array<double, 3> mixture_weights{1.0, 1.0, 1.0};  // random, medium, expert
};

inline constexpr double kMediumEpsilon = 0.5;

/// Softening epsilon at which the medium policy's return reaches the target.
/// The target is half the expert return when the uniform policy stays below
/// it, and the midpoint between the uniform and expert returns otherwise.
double calibrate_medium_epsilon(const TabularMDP& mdp);

PolicyTable make_behavior(const TabularMDP& mdp, const BehaviorSpec& spec);

} // namespace dvdf
