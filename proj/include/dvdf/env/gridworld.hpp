#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "dvdf/core/tabular_mdp.hpp"

namespace dvdf {

/// Action ids of every gridworld. Moves into the border leave the agent in place.
enum GridAction : std::size_t { kUp = 0, kRight = 1, kDown = 2, kLeft = 3, kStay = 4 };
inline constexpr std::size_t kGridActions = 5;

/// Cells are indexed row * width + col, row 0 at the top.
struct GridSpec {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::size_t> terminal_cells;
    std::map<std::size_t, double> reward_map;  // paid on arrival in the cell
    std::vector<std::size_t> start_cells;      // empty: uniform over non-terminal cells
    double slip_prob = 0.0;                    // split evenly over the two lateral moves
    double gamma = 0.9;
    std::uint64_t seed = 0;

    std::size_t cell(std::size_t row, std::size_t col) const { return row * width + col; }
};

/// Deterministic build of the gridworld MDP. r(s, a) is the expected arrival
/// reward under the kernel; terminal cells self-loop with zero reward.
TabularMDP make_gridworld(const GridSpec& spec);

} // namespace dvdf
