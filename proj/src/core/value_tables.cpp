#include "dvdf/core/value_tables.hpp"

#include <algorithm>
#include <cmath>

#include "dvdf/core/errors.hpp"

namespace dvdf {

ValueTables ValueTables::from_qv(std::size_t n_states, std::size_t n_actions, std::vector<double> q,
                                 std::vector<double> v) {
    if (q.size() != n_states * n_actions || v.size() != n_states)
        throw InvalidInput("value tables: shape mismatch");
    ValueTables out;
    out.n_states = n_states;
    out.n_actions = n_actions;
    out.adv.resize(q.size());
    for (std::size_t s = 0; s < n_states; ++s)
        for (std::size_t a = 0; a < n_actions; ++a)
            out.adv[s * n_actions + a] = q[s * n_actions + a] - v[s];
    out.q = std::move(q);
    out.v = std::move(v);
    return out;
}

double ValueTables::advantage_defect() const noexcept {
    double worst = 0.0;
    for (std::size_t s = 0; s < n_states; ++s)
        for (std::size_t a = 0; a < n_actions; ++a)
            worst = std::max(worst, std::abs(A(s, a) - (Q(s, a) - V(s))));
    return worst;
}

} // namespace dvdf
