#include "dvdf/env/shift.hpp"

#include <cmath>

#include "dvdf/core/errors.hpp"
#include "dvdf/core/rng.hpp"

namespace dvdf {

namespace {

std::vector<bool> affected_pairs(const TabularMDP& mdp, const ShiftSpec& shift) {
    const std::size_t S = mdp.n_states();
    const std::size_t A = mdp.n_actions();
    std::vector<bool> mask(S * A, false);
    for (const auto& [s, a] : shift.pairs) {
        if (s >= S || a >= A) throw InvalidInput("apply_shift: affected pair out of range");
        mask[s * A + a] = true;
    }
    const auto absorbing = mdp.absorbing_states();
    for (auto a : shift.actions) {
        if (a >= A) throw InvalidInput("apply_shift: affected action out of range");
        for (std::size_t s = 0; s < S; ++s)
            if (!absorbing[s]) mask[s * A + a] = true;
    }
    return mask;
}

} // namespace

TabularMDP apply_shift(const TabularMDP& base, const ShiftSpec& shift) {
    if (!(shift.magnitude >= 0.0 && shift.magnitude <= 1.0))
        throw InvalidInput("apply_shift: magnitude outside [0, 1]");
    const std::size_t S = base.n_states();
    const std::size_t A = base.n_actions();
    const auto mask = affected_pairs(base, shift);
    const std::size_t stay = shift.stay_action.value_or(A - 1);
    if (stay >= A) throw InvalidInput("apply_shift: stay action out of range");

    std::vector<double> kernel(base.transitions().begin(), base.transitions().end());
    if (shift.magnitude == 0.0) return base.with_transitions(std::move(kernel));
    const double m = shift.magnitude;

    for (std::size_t s = 0; s < S; ++s) {
        std::vector<double> reach;
        if (shift.kind == ShiftKind::kernel_perturb) {
            reach.assign(S, 0.0);
            for (std::size_t a = 0; a < A; ++a) {
                const auto r = base.row(s, a);
                for (std::size_t t = 0; t < S; ++t)
                    if (r[t] > 0.0) reach[t] = 1.0;
            }
        }
        for (std::size_t a = 0; a < A; ++a) {
            if (!mask[s * A + a]) continue;
            double* out = kernel.data() + (s * A + a) * S;
            const auto p = base.row(s, a);
            if (shift.kind == ShiftKind::action_block) {
                const auto q = base.row(s, stay);
                for (std::size_t t = 0; t < S; ++t) out[t] = (1.0 - m) * p[t] + m * q[t];
            } else {
                Rng rng(derive_seed(shift.seed, s * A + a));
                std::vector<double> q(S, 0.0);
                double total = 0.0;
                for (std::size_t t = 0; t < S; ++t) {
                    if (reach[t] == 0.0) continue;
                    q[t] = -std::log(1.0 - uniform01(rng));
                    total += q[t];
                }
                for (std::size_t t = 0; t < S; ++t) out[t] = (1.0 - m) * p[t] + m * q[t] / total;
            }
            double sum = 0.0;
            for (std::size_t t = 0; t < S; ++t) sum += out[t];
            for (std::size_t t = 0; t < S; ++t) out[t] /= sum;
        }
    }
    return base.with_transitions(std::move(kernel));
}

} // namespace dvdf
