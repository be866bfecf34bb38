#pragma once

#include <span>
#include <vector>

namespace kexp {

/// Curvature kappa and per-pair complexities c(s,a) defining U_kappa.
struct ObjectiveSpec {
    double kappa = 2.0;
    std::vector<double> complexities;

    void validate() const;
};

/// U_kappa(d) = sum c log d (kappa = 1) or sum c^kappa / (1 - kappa) d^(1 - kappa).
/// Pairs with c = 0 contribute nothing. Throws DomainError on d <= 0 where c > 0.
double u_kappa(std::span<const double> d, const ObjectiveSpec& spec);

/// Entrywise (c / d)^kappa; zero where c = 0.
std::vector<double> grad_u_kappa(std::span<const double> d, const ObjectiveSpec& spec);

/// -(1 / SA) sum c / d.
double v_avg(std::span<const double> c, std::span<const double> d);
/// -max c / d over pairs with c > 0; 0 if every c is 0.
double v_worst(std::span<const double> c, std::span<const double> d);

/// Gradient Lipschitz constant of U_kappa on occupancies bounded below by 2 eta:
/// kappa c_max^kappa / (2^(kappa+1) eta^(kappa+1)).
double smoothness_constant(double c_max, double kappa, double eta);

}  // namespace kexp
