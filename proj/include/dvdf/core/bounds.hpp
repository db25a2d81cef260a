#pragma once

#include <map>
#include <string>

#include "dvdf/core/policy.hpp"
#include "dvdf/core/tabular_mdp.hpp"

namespace dvdf {

/// C1 = 2 gamma r_max / (1 - gamma)^2, C2 = (2 gamma + 2) r_max / (1 - gamma)^2.
struct BoundConstants {
    double c1 = 0.0;
    double c2 = 0.0;

    static BoundConstants from(double gamma, double r_max);
};

/// Left/right sides of one inequality or identity. For bounds slack is the
/// margin by which the inequality holds (rhs - lhs for lhs <= rhs, lhs - rhs
/// for lower bounds) and the check holds when slack >= -tol; for identities slack = |lhs - rhs|
/// and it holds when slack <= tol.
struct BoundReport {
    enum class Kind { bound, identity };

    std::string name;
    Kind kind = Kind::bound;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double tol = 0.0;
    bool holds = false;
    std::map<std::string, double> components;

    static BoundReport bound(std::string name, double lhs, double rhs, double tol);
    /// lhs >= rhs form: slack = lhs - rhs.
    static BoundReport lower_bound(std::string name, double lhs, double rhs, double tol);
    static BoundReport identity(std::string name, double lhs, double rhs, double tol);
};

/// max over (s, a) of half the L1 distance between the two kernel rows.
double tv_sup(const TabularMDP& src, const TabularMDP& tar);

/// |J_tar(pi) - J_src(pi)| <= C1 * tv_sup. c1_scale exists only for the
/// mutation self-test of the theory suite.
BoundReport lemma1_bound(const TabularMDP& src, const TabularMDP& tar, const PolicyTable& pi,
                         double tol = 1e-9, double c1_scale = 1.0);

/// SubOpt <= |J_src(pi) - J_src(pi_insrc)| + C2 * tv_sup + eps_opt.
BoundReport prop1_bound(const TabularMDP& src, const TabularMDP& tar, const PolicyTable& pi,
                        const PolicyTable& pi_insrc, double tol = 1e-9);

} // namespace dvdf
