#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "kexp/mdp.hpp"
#include "kexp/random.hpp"

namespace kexp::testing {

inline std::vector<double> random_simplex(std::size_t n, Rng& rng, double floor = 0.0) {
    std::vector<double> v(n);
    double total = 0.0;
    for (auto& x : v) {
        x = rng.exponential();
        total += x;
    }
    for (auto& x : v) x = floor + (1.0 - floor * static_cast<double>(n)) * x / total;
    return v;
}

/// Full-support random kernel; rows normalized so the last entry absorbs rounding.
inline TransitionKernel random_kernel(std::size_t S, std::size_t A, Rng& rng) {
    std::vector<double> probs;
    for (std::size_t p = 0; p < S * A; ++p) {
        auto row = random_simplex(S, rng);
        double head = 0.0;
        for (std::size_t i = 0; i + 1 < S; ++i) head += row[i];
        row[S - 1] = 1.0 - head;
        probs.insert(probs.end(), row.begin(), row.end());
    }
    return TransitionKernel(S, A, std::move(probs));
}

inline Policy random_policy(std::size_t S, std::size_t A, Rng& rng) {
    std::vector<double> probs;
    for (std::size_t s = 0; s < S; ++s) {
        auto row = random_simplex(A, rng);
        double head = 0.0;
        for (std::size_t i = 0; i + 1 < A; ++i) head += row[i];
        row[A - 1] = 1.0 - head;
        probs.insert(probs.end(), row.begin(), row.end());
    }
    return Policy(S, A, std::move(probs));
}

/// Stationary state-action distribution from a dense null-space solve of the
/// state-action chain M((s,a),(s',a')) = P(s'|s,a) pi(a'|s').
inline std::vector<double> stationary_by_linear_solve(const TransitionKernel& P, const Policy& pi) {
    const std::size_t S = P.n_states(), A = P.n_actions(), n = S * A;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t t = 0; t < S; ++t)
                for (std::size_t b = 0; b < A; ++b) M(s * A + a, t * A + b) = P(s, a, t) * pi(t, b);
    // x^T (M - I) = 0 with sum(x) = 1, replacing the last equation.
    Eigen::MatrixXd lhs = (M - Eigen::MatrixXd::Identity(n, n)).transpose();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    lhs.row(n - 1).setOnes();
    rhs(n - 1) = 1.0;
    Eigen::VectorXd x = lhs.fullPivLu().solve(rhs);
    return std::vector<double>(x.data(), x.data() + n);
}

inline double max_abs_diff(const std::vector<double>& a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace kexp::testing
