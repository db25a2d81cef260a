#pragma once

#include <span>

namespace dvdf {

/// Weighted tau-expectile: the root v of
///   tau * sum_{x > v} w (x - v) = (1 - tau) * sum_{x < v} w (v - x).
/// Solved exactly on the bracketing segment between sorted values.
double expectile(std::span<const double> values, std::span<const double> weights, double tau);

/// Per-state value of the sparsity-regularized objective
///   mean_w[ (1 + (q - v) / (2 alpha))_+^2 ] + v / alpha,
/// i.e. the root of mean_w[ (1 + (q - v) / (2 alpha))_+ ] = 1. Only actions
/// with q > v - 2 alpha stay active; the root lies in [mean q, max q].
double sparse_value(std::span<const double> values, std::span<const double> weights, double alpha);

} // namespace dvdf
