#pragma once

#include <iosfwd>
#include <string>

#include "dvdf/core/policy.hpp"
#include "dvdf/core/tabular_mdp.hpp"

namespace dvdf {

// Text layout:
//   tabular-mdp v1
//   <n_states> <n_actions> <gamma> <r_max>
//   <rho0 row>
//   S*A kernel rows, (s, a) row-major
//   S reward rows, one value per action
// Values use shortest round-trip formatting, so reading back is bit-exact.
void write_mdp(std::ostream& out, const TabularMDP& mdp);
TabularMDP read_mdp(std::istream& in);

void save_mdp(const std::string& path, const TabularMDP& mdp);
TabularMDP load_mdp(const std::string& path);

// "policy-table v1", "<n_states> <n_actions>", then one row per state.
void write_policy(std::ostream& out, const PolicyTable& pi);
PolicyTable read_policy(std::istream& in);

} // namespace dvdf
