#include "kexp/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "kexp/errors.hpp"

namespace kexp {

namespace {

void check_eta(double eta, std::size_t n_pairs) {
    const double upper = 1.0 / (2.0 * static_cast<double>(n_pairs));
    if (!(eta > 0.0 && eta < upper)) {
        throw InputError(fmt::format("eta = {} outside (0, 1/(2SA)) = (0, {})", eta, upper));
    }
}

// Clips roundoff negatives and renormalizes to unit mass.
std::vector<double> normalized(std::vector<double> v) {
    double total = 0.0;
    for (double& x : v) {
        x = std::max(0.0, x);
        total += x;
    }
    for (double& x : v) x /= total;
    return v;
}

}  // namespace

void ExtendedLpInstance::validate() const {
    const std::size_t pairs = empirical_kernel.n_pairs();
    if (weights.size() != pairs || radii.size() != pairs) {
        throw InputError("extended LP: weights and radii need one entry per pair");
    }
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("extended LP: weights must be finite and >= 0");
    }
    for (double b : radii) {
        if (!(b >= 0.0 && b <= 2.0)) throw InputError("extended LP: radii must lie in [0, 2]");
    }
    check_eta(eta, pairs);
}

LinearProgram build_extended_lp(const ExtendedLpInstance& inst) {
    inst.validate();
    const auto& phat = inst.empirical_kernel;
    const std::size_t S = phat.n_states();
    const std::size_t A = phat.n_actions();
    const ExtendedLpLayout layout{S, A};
    LinearProgram lp(layout.n_vars());

    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) {
            const double w = inst.weights[phat.pair_index(s, a)];
            for (State next = 0; next < S; ++next) lp.objective[layout.q(s, a, next)] = w;
        }
    }

    // Total mass.
    {
        std::vector<std::pair<std::size_t, double>> terms;
        terms.reserve(layout.n_triples());
        for (std::size_t i = 0; i < layout.n_triples(); ++i) terms.emplace_back(i, 1.0);
        lp.add_row(std::move(terms), Sense::Equal, 1.0);
    }
    // Flow: mass leaving s equals mass arriving at s.
    for (State s = 0; s < S; ++s) {
        std::vector<std::pair<std::size_t, double>> terms;
        for (Action a = 0; a < A; ++a) {
            for (State next = 0; next < S; ++next) terms.emplace_back(layout.q(s, a, next), 1.0);
        }
        for (State prev = 0; prev < S; ++prev) {
            for (Action a = 0; a < A; ++a) terms.emplace_back(layout.q(prev, a, s), -1.0);
        }
        lp.add_row(std::move(terms), Sense::Equal, 0.0);
    }
    // Interior floor on d(s,a).
    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) {
            std::vector<std::pair<std::size_t, double>> terms;
            for (State next = 0; next < S; ++next) terms.emplace_back(layout.q(s, a, next), 1.0);
            lp.add_row(std::move(terms), Sense::GreaterEqual, 2.0 * inst.eta);
        }
    }
    // |q(s,a,s') - phat(s'|s,a) d(s,a)| <= u(s,a,s').
    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) {
            const auto row = phat.row(s, a);
            for (State next = 0; next < S; ++next) {
                for (const double sign : {1.0, -1.0}) {
                    std::vector<std::pair<std::size_t, double>> terms;
                    terms.reserve(S + 2);
                    terms.emplace_back(layout.q(s, a, next), sign);
                    for (State k = 0; k < S; ++k) {
                        if (row[next] != 0.0) terms.emplace_back(layout.q(s, a, k), -sign * row[next]);
                    }
                    terms.emplace_back(layout.u(s, a, next), -1.0);
                    lp.add_row(std::move(terms), Sense::LessEqual, 0.0);
                }
            }
        }
    }
    // sum_s' u(s,a,s') <= b(s,a) d(s,a).
    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) {
            const double b = inst.radii[phat.pair_index(s, a)];
            std::vector<std::pair<std::size_t, double>> terms;
            for (State next = 0; next < S; ++next) {
                terms.emplace_back(layout.u(s, a, next), 1.0);
                if (b != 0.0) terms.emplace_back(layout.q(s, a, next), -b);
            }
            lp.add_row(std::move(terms), Sense::LessEqual, 0.0);
        }
    }
    return lp;
}

LpSolution solve_extended_lp(const ExtendedLpInstance& inst, const SimplexOptions& options) {
    const LinearProgram lp = build_extended_lp(inst);
    const LpResult result = solve_lp(lp, options);
    LpSolution solution;
    solution.status = result.status;
    if (result.status != LpStatus::Optimal) return solution;

    const std::size_t S = inst.empirical_kernel.n_states();
    const std::size_t A = inst.empirical_kernel.n_actions();
    const ExtendedLpLayout layout{S, A};
    solution.joint_mass.assign(result.x.begin(), result.x.begin() + layout.n_triples());
    solution.objective_value = result.objective;

    std::vector<double> d(S * A, 0.0);
    std::vector<double> ptilde(layout.n_triples(), 0.0);
    for (std::size_t pair = 0; pair < S * A; ++pair) {
        double mass = 0.0;
        for (State next = 0; next < S; ++next) mass += std::max(0.0, solution.joint_mass[pair * S + next]);
        d[pair] = mass;
        for (State next = 0; next < S; ++next) {
            ptilde[pair * S + next] = std::max(0.0, solution.joint_mass[pair * S + next]) / mass;
        }
        // Renormalize so the row passes the kernel's exact row-sum check.
        double row_sum = 0.0;
        for (State next = 0; next < S; ++next) row_sum += ptilde[pair * S + next];
        for (State next = 0; next < S; ++next) ptilde[pair * S + next] /= row_sum;
    }
    solution.occupancy.emplace(S, A, normalized(std::move(d)));
    solution.optimistic_kernel.emplace(S, A, std::move(ptilde));
    return solution;
}

std::optional<OccupancyMeasure> exact_direction(std::span<const double> weights,
                                                const TransitionKernel& kernel, double eta,
                                                double* objective_value) {
    const std::size_t S = kernel.n_states();
    const std::size_t A = kernel.n_actions();
    const std::size_t pairs = S * A;
    check_eta(eta, pairs);
    if (weights.size() != pairs) throw InputError("exact_direction: one weight per pair required");

    LinearProgram lp(pairs);
    std::copy(weights.begin(), weights.end(), lp.objective.begin());
    {
        std::vector<std::pair<std::size_t, double>> terms;
        for (std::size_t p = 0; p < pairs; ++p) terms.emplace_back(p, 1.0);
        lp.add_row(std::move(terms), Sense::Equal, 1.0);
    }
    for (State s = 0; s < S; ++s) {
        std::vector<std::pair<std::size_t, double>> terms;
        for (Action a = 0; a < A; ++a) terms.emplace_back(s * A + a, 1.0);
        for (std::size_t p = 0; p < pairs; ++p) {
            const double prob = kernel.row(p)[s];
            if (prob != 0.0) terms.emplace_back(p, -prob);
        }
        lp.add_row(std::move(terms), Sense::Equal, 0.0);
    }
    for (std::size_t p = 0; p < pairs; ++p) lp.add_row({{p, 1.0}}, Sense::GreaterEqual, 2.0 * eta);

    const LpResult result = solve_lp(lp);
    if (result.status == LpStatus::Infeasible) return std::nullopt;
    if (result.status != LpStatus::Optimal) {
        throw ConvergenceError(fmt::format("occupancy LP ended with status {}", to_string(result.status)),
                               0.0);
    }
    if (objective_value) *objective_value = result.objective;
    return OccupancyMeasure(S, A, normalized(result.x));
}

namespace {

double directional_derivative(const std::vector<double>& d, const std::vector<double>& dir,
                              double step, const ObjectiveSpec& spec) {
    std::vector<double> point(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) point[i] = d[i] + step * dir[i];
    const auto grad = grad_u_kappa(point, spec);
    return std::inner_product(grad.begin(), grad.end(), dir.begin(), 0.0);
}

std::vector<double> scaled_to_unit_max(std::vector<double> w) {
    const double top = *std::max_element(w.begin(), w.end());
    if (top > 0.0) {
        for (double& x : w) x /= top;
    }
    return w;
}

}  // namespace

OptimumResult optimal_occupancy(const ObjectiveSpec& spec, const TransitionKernel& kernel,
                                double eta, std::size_t max_iterations, double tol,
                                bool line_search) {
    spec.validate();
    const std::size_t pairs = kernel.n_pairs();
    if (spec.complexities.size() != pairs) throw InputError("one complexity per pair required");
    const std::vector<double> flat(pairs, 1.0);
    auto start = exact_direction(flat, kernel, eta);
    if (!start) throw InputError("the eta-restricted occupancy set of this kernel is empty");

    std::vector<double> d(start->data().begin(), start->data().end());
    double gap = std::numeric_limits<double>::infinity();
    std::size_t k = 0;
    for (; k < max_iterations; ++k) {
        const auto grad = grad_u_kappa(d, spec);
        const auto psi = exact_direction(scaled_to_unit_max(grad), kernel, eta);
        if (!psi) throw InputError("linear oracle became infeasible");
        std::vector<double> dir(pairs);
        for (std::size_t i = 0; i < pairs; ++i) dir[i] = (*psi)[i] - d[i];
        gap = std::inner_product(grad.begin(), grad.end(), dir.begin(), 0.0);
        if (gap <= tol) break;

        double step = 2.0 / (static_cast<double>(k) + 2.0);
        if (line_search) {
            // The objective is concave along the segment, so its derivative is
            // decreasing and bisection finds the maximizer.
            if (directional_derivative(d, dir, 1.0, spec) >= 0.0) {
                step = 1.0;
            } else {
                double lo = 0.0, hi = 1.0;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (directional_derivative(d, dir, mid, spec) > 0.0 ? lo : hi) = mid;
                }
                step = 0.5 * (lo + hi);
            }
        }
        for (std::size_t i = 0; i < pairs; ++i) d[i] += step * dir[i];
    }
    OccupancyMeasure occ(kernel.n_states(), kernel.n_actions(), normalized(d));
    const double value = u_kappa(occ.data(), spec);
    return OptimumResult{std::move(occ), value, gap, k};
}

namespace {

double backup(std::span<const double> values, std::span<const double> reward,
              const TransitionKernel& kernel, State s, Action a, double gamma) {
    const auto row = kernel.row(s, a);
    double expected = 0.0;
    for (State next = 0; next < kernel.n_states(); ++next) expected += row[next] * values[next];
    return reward[kernel.pair_index(s, a)] + gamma * expected;
}

void check_reward(std::span<const double> reward, const TransitionKernel& kernel) {
    if (reward.size() != kernel.n_pairs()) throw InputError("reward needs one entry per pair");
}

}  // namespace

std::vector<double> value_iteration(std::span<const double> reward, const TransitionKernel& kernel,
                                    double gamma, double tol, std::span<const double> initial) {
    check_reward(reward, kernel);
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("gamma must lie in [0, 1)");
    if (!(tol > 0.0)) throw InputError("tolerance must be positive");
    const std::size_t S = kernel.n_states();
    const std::size_t A = kernel.n_actions();
    std::vector<double> values(S, 0.0);
    if (!initial.empty()) {
        if (initial.size() != S) throw InputError("initial values need one entry per state");
        std::copy(initial.begin(), initial.end(), values.begin());
    }
    const double threshold =
        gamma > 0.0 ? tol * (1.0 - gamma) / (2.0 * gamma) : std::numeric_limits<double>::infinity();
    std::vector<double> next(S);
    while (true) {
        double change = 0.0;
        for (State s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (Action a = 0; a < A; ++a) best = std::max(best, backup(values, reward, kernel, s, a, gamma));
            next[s] = best;
            change = std::max(change, std::abs(best - values[s]));
        }
        values.swap(next);
        if (change <= threshold) return values;
    }
}

double bellman_residual(std::span<const double> values, std::span<const double> reward,
                        const TransitionKernel& kernel, double gamma) {
    check_reward(reward, kernel);
    double residual = 0.0;
    for (State s = 0; s < kernel.n_states(); ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (Action a = 0; a < kernel.n_actions(); ++a) {
            best = std::max(best, backup(values, reward, kernel, s, a, gamma));
        }
        residual = std::max(residual, std::abs(best - values[s]));
    }
    return residual;
}

Action greedy_action(std::span<const double> values, std::span<const double> reward,
                     const TransitionKernel& kernel, State state, double gamma) {
    check_reward(reward, kernel);
    if (values.size() != kernel.n_states()) throw InputError("values need one entry per state");
    Action best_action = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (Action a = 0; a < kernel.n_actions(); ++a) {
        const double q = backup(values, reward, kernel, state, a, gamma);
        if (q > best) {
            best = q;
            best_action = a;
        }
    }
    return best_action;
}

Action truncated_action(std::span<const double> reward, const TransitionKernel& kernel,
                        State state, int horizon, double gamma) {
    check_reward(reward, kernel);
    if (horizon != 1 && horizon != 2) throw InputError("truncated planning supports horizon 1 or 2");
    if (state >= kernel.n_states()) throw InputError("state out of range");
    const std::size_t S = kernel.n_states();
    const std::size_t A = kernel.n_actions();
    std::vector<double> best_next;
    if (horizon == 2) {
        best_next.resize(S);
        for (State s = 0; s < S; ++s) {
            best_next[s] = *std::max_element(reward.begin() + static_cast<std::ptrdiff_t>(s * A),
                                             reward.begin() + static_cast<std::ptrdiff_t>((s + 1) * A));
        }
    }
    Action best_action = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (Action a = 0; a < A; ++a) {
        double q = reward[state * A + a];
        if (horizon == 2) {
            const auto row = kernel.row(state, a);
            double lookahead = 0.0;
            for (State next = 0; next < S; ++next) lookahead += row[next] * best_next[next];
            q += gamma * lookahead;
        }
        if (q > best) {
            best = q;
            best_action = a;
        }
    }
    return best_action;
}

}  // namespace kexp
