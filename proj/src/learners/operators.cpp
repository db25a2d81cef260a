#include "dvdf/learners/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dvdf/core/errors.hpp"

namespace dvdf {

namespace {

struct Weighted {
    std::vector<double> x;
    std::vector<double> w;
};

// Validates and drops zero-weight entries, which do not affect either root.
Weighted positive_part(std::span<const double> values, std::span<const double> weights) {
    if (values.empty()) throw InvalidInput("value operator: no values");
    if (values.size() != weights.size()) throw InvalidInput("value operator: weights and values differ in size");
    Weighted out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw InvalidInput("value operator: non-finite value");
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw InvalidInput("value operator: bad weight");
        if (weights[i] == 0.0) continue;
        out.x.push_back(values[i]);
        out.w.push_back(weights[i]);
    }
    if (out.x.empty()) throw InvalidInput("value operator: weights sum to zero");
    return out;
}

std::vector<std::size_t> order_by_value(std::span<const double> values, bool descending) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
        return descending ? values[i] > values[j] : values[i] < values[j];
    });
    return idx;
}

} // namespace

double expectile(std::span<const double> values_in, std::span<const double> weights_in, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidInput("expectile: tau outside (0, 1)");
    const auto [values, weights] = positive_part(values_in, weights_in);
    const auto idx = order_by_value(values, false);
    const std::size_t n = idx.size();
    // Walk the split point k: lo = first k sorted entries (x <= v), hi = the rest.
    double lo_w = 0.0, lo_wx = 0.0;
    double hi_w = 0.0, hi_wx = 0.0;
    for (auto i : idx) {
        hi_w += weights[i];
        hi_wx += weights[i] * values[i];
    }
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = idx[k];
        lo_w += weights[i];
        lo_wx += weights[i] * values[i];
        hi_w -= weights[i];
        hi_wx -= weights[i] * values[i];
        if (k + 1 < n && values[idx[k + 1]] == values[i]) continue;
        if (k + 1 == n) return values[i];
        const double v = (tau * hi_wx + (1.0 - tau) * lo_wx) / (tau * hi_w + (1.0 - tau) * lo_w);
        const double next = values[idx[k + 1]];
        if (v <= next) return std::clamp(v, values[i], next);
    }
    return values[idx.back()];
}

double sparse_value(std::span<const double> values_in, std::span<const double> weights_in, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidInput("sparse_value: alpha must be positive");
    const auto [values, weights] = positive_part(values_in, weights_in);
    const auto idx = order_by_value(values, true);
    const std::size_t n = idx.size();
    double total = 0.0;
    for (double w : weights) total += w;
    // Active set = top-k values; on it sum_act w (1 + (q - v)/(2 alpha)) = total.
    double act_w = 0.0, act_wq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = idx[k];
        act_w += weights[i];
        act_wq += weights[i] * values[i];
        if (k + 1 < n && values[idx[k + 1]] == values[i]) continue;
        const double v = (act_wq - 2.0 * alpha * (total - act_w)) / act_w;
        if (k + 1 == n || values[idx[k + 1]] <= v - 2.0 * alpha) return std::min(v, values[idx.front()]);
    }
    return values[idx.front()];
}

} // namespace dvdf
