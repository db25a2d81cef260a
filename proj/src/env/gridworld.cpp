#include "dvdf/env/gridworld.hpp"

#include <algorithm>
#include <cmath>

#include "dvdf/core/errors.hpp"

namespace dvdf {

namespace {

std::size_t move(const GridSpec& g, std::size_t cell, std::size_t action) {
    const std::size_t row = cell / g.width;
    const std::size_t col = cell % g.width;
    switch (action) {
    case kUp: return row > 0 ? cell - g.width : cell;
    case kRight: return col + 1 < g.width ? cell + 1 : cell;
    case kDown: return row + 1 < g.height ? cell + g.width : cell;
    case kLeft: return col > 0 ? cell - 1 : cell;
    default: return cell;
    }
}

} // namespace

TabularMDP make_gridworld(const GridSpec& spec) {
    const std::size_t n = spec.width * spec.height;
    if (n == 0) throw InvalidInput("gridworld: grid has no cells");
    if (!(spec.slip_prob >= 0.0 && spec.slip_prob < 1.0)) throw InvalidInput("gridworld: slip_prob outside [0, 1)");
    for (auto c : spec.terminal_cells)
        if (c >= n) throw InvalidInput("gridworld: terminal cell out of range");
    for (auto c : spec.start_cells)
        if (c >= n) throw InvalidInput("gridworld: start cell out of range");
    double r_max = 0.0;
    for (const auto& [c, r] : spec.reward_map) {
        if (c >= n) throw InvalidInput("gridworld: reward cell out of range");
        if (!std::isfinite(r)) throw InvalidInput("gridworld: non-finite reward");
        r_max = std::max(r_max, std::abs(r));
    }

    std::vector<bool> terminal(n, false);
    for (auto c : spec.terminal_cells) terminal[c] = true;
    auto arrival = [&](std::size_t c) {
        const auto it = spec.reward_map.find(c);
        return it == spec.reward_map.end() ? 0.0 : it->second;
    };

    std::vector<double> transitions(n * kGridActions * n, 0.0);
    std::vector<double> rewards(n * kGridActions, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < kGridActions; ++a) {
            double* row = transitions.data() + (s * kGridActions + a) * n;
            if (terminal[s]) {
                row[s] = 1.0;
                continue;
            }
            if (a == kStay || spec.slip_prob == 0.0) {
                row[move(spec, s, a)] += 1.0;
            } else {
                // lateral directions of a move are the two actions at distance 1 mod 4
                row[move(spec, s, a)] += 1.0 - spec.slip_prob;
                row[move(spec, s, (a + 1) % 4)] += 0.5 * spec.slip_prob;
                row[move(spec, s, (a + 3) % 4)] += 0.5 * spec.slip_prob;
            }
            double r = 0.0;
            for (std::size_t t = 0; t < n; ++t)
                if (row[t] > 0.0) r += row[t] * arrival(t);
            rewards[s * kGridActions + a] = r;
        }
    }

    std::vector<double> initial(n, 0.0);
    if (!spec.start_cells.empty()) {
        for (auto c : spec.start_cells) initial[c] += 1.0 / static_cast<double>(spec.start_cells.size());
    } else {
        const auto free = static_cast<double>(std::count(terminal.begin(), terminal.end(), false));
        if (free == 0.0) throw InvalidInput("gridworld: every cell is terminal");
        for (std::size_t s = 0; s < n; ++s)
            if (!terminal[s]) initial[s] = 1.0 / free;
    }
    // Expected arrival rewards are convex combinations of map entries, so they
    // stay within r_max up to rounding; clamp that rounding away.
    for (double& r : rewards) r = std::clamp(r, -r_max, r_max);
    return TabularMDP(n, kGridActions, std::move(transitions), std::move(rewards), std::move(initial), spec.gamma,
                      r_max);
}

} // namespace dvdf
