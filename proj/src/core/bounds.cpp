#include "dvdf/core/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "dvdf/core/errors.hpp"
#include "dvdf/core/solve.hpp"

namespace dvdf {

namespace {
constexpr double kOptimalTol = 1e-11;
}

BoundConstants BoundConstants::from(double gamma, double r_max) {
    const double denom = (1.0 - gamma) * (1.0 - gamma);
    return BoundConstants{2.0 * gamma * r_max / denom, (2.0 * gamma + 2.0) * r_max / denom};
}

BoundReport BoundReport::bound(std::string name, double lhs, double rhs, double tol) {
    BoundReport r;
    r.name = std::move(name);
    r.kind = Kind::bound;
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = rhs - lhs;
    r.tol = tol;
    r.holds = r.slack >= -tol;
    return r;
}

BoundReport BoundReport::lower_bound(std::string name, double lhs, double rhs, double tol) {
    auto r = bound(std::move(name), lhs, rhs, tol);
    r.slack = lhs - rhs;
    r.holds = r.slack >= -tol;
    return r;
}

BoundReport BoundReport::identity(std::string name, double lhs, double rhs, double tol) {
    BoundReport r;
    r.name = std::move(name);
    r.kind = Kind::identity;
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = std::abs(lhs - rhs);
    r.tol = tol;
    r.holds = r.slack <= tol;
    return r;
}

double tv_sup(const TabularMDP& src, const TabularMDP& tar) {
    require_same_domain(src, tar);
    double worst = 0.0;
    for (std::size_t s = 0; s < src.n_states(); ++s) {
        for (std::size_t a = 0; a < src.n_actions(); ++a) {
            const auto p = src.row(s, a);
            const auto q = tar.row(s, a);
            double l1 = 0.0;
            for (std::size_t t = 0; t < p.size(); ++t) l1 += std::abs(p[t] - q[t]);
            worst = std::max(worst, 0.5 * l1);
        }
    }
    return std::min(worst, 1.0);
}

BoundReport lemma1_bound(const TabularMDP& src, const TabularMDP& tar, const PolicyTable& pi,
                         double tol, double c1_scale) {
    const double tv = tv_sup(src, tar);
    const auto constants = BoundConstants::from(src.gamma(), src.r_max());
    const double j_src = expected_return(src, pi);
    const double j_tar = expected_return(tar, pi);
    auto report = BoundReport::bound("lemma1", std::abs(j_tar - j_src), c1_scale * constants.c1 * tv, tol);
    report.components = {{"J_src", j_src}, {"J_tar", j_tar}, {"tv_sup", tv}, {"C1", c1_scale * constants.c1}};
    return report;
}

BoundReport prop1_bound(const TabularMDP& src, const TabularMDP& tar, const PolicyTable& pi,
                        const PolicyTable& pi_insrc, double tol) {
    const double tv = tv_sup(src, tar);
    const auto constants = BoundConstants::from(src.gamma(), src.r_max());

    const auto opt_tar = value_iteration(tar, kOptimalTol);
    const auto opt_src = value_iteration(src, kOptimalTol);
    const double j_tar_pi = expected_return(tar, pi);
    const double j_tar_opt = expected_return(tar, opt_tar.policy);
    const double j_src_pi = expected_return(src, pi);
    const double j_src_insrc = expected_return(src, pi_insrc);
    const double j_src_opt = expected_return(src, opt_src.policy);

    const double sub_opt = std::abs(j_tar_pi - j_tar_opt);
    const double value_misalignment = std::abs(j_src_pi - j_src_insrc);
    const double dyn_term = constants.c2 * tv;
    const double eps_opt = j_src_opt - j_src_insrc;

    auto report = BoundReport::bound("prop1", sub_opt, value_misalignment + dyn_term + eps_opt, tol);
    report.components = {{"SubOpt", sub_opt},
                         {"value_misalignment", value_misalignment},
                         {"dyn_term", dyn_term},
                         {"eps_opt", eps_opt},
                         {"tv_sup", tv},
                         {"C2", constants.c2}};
    return report;
}

} // namespace dvdf
