#pragma once

#include <span>
#include <vector>

namespace dvdf {

/// Min-max scaling to [0, 1]; a constant (or single-element) input maps to 0.5.
std::vector<double> minmax_normalize(std::span<const double> x);

/// Ranks starting at 1, ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> x);

/// Pearson correlation of average ranks. Throws UndefinedMetric when either
/// side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
double auc(std::span<const double> positives, std::span<const double> negatives);

} // namespace dvdf
