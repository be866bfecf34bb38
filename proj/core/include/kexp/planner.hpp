#pragma once

#include <optional>
#include <span>
#include <vector>

#include "kexp/mdp.hpp"
#include "kexp/objectives.hpp"
#include "kexp/simplex.hpp"

namespace kexp {

/// Inputs of the optimistic direction-finding LP.
struct ExtendedLpInstance {
    std::vector<double> weights;  ///< linear objective w(s,a) >= 0
    TransitionKernel empirical_kernel;
    std::vector<double> radii;  ///< l1 radius per pair, in [0, 2]
    double eta = 0.0;

    void validate() const;
};

/// Variable layout of the extended LP: q(s,a,s') first, then the slacks
/// u(s,a,s'), both in state-major order.
struct ExtendedLpLayout {
    std::size_t n_states;
    std::size_t n_actions;

    std::size_t n_triples() const { return n_states * n_actions * n_states; }
    std::size_t n_vars() const { return 2 * n_triples(); }
    std::size_t q(State s, Action a, State next) const { return (s * n_actions + a) * n_states + next; }
    std::size_t u(State s, Action a, State next) const { return n_triples() + q(s, a, next); }
};

/// LP over joint masses q(s,a,s') whose marginals d(s,a) are stationary, bounded
/// below by 2 eta, and whose conditionals q/d lie in the l1 ball of radius
/// b(s,a) around the empirical row (the ball constraint scaled by d(s,a)).
/// Objective: maximize sum w(s,a) d(s,a).
LinearProgram build_extended_lp(const ExtendedLpInstance& inst);

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> joint_mass;
    std::optional<OccupancyMeasure> occupancy;
    std::optional<TransitionKernel> optimistic_kernel;
    double objective_value = 0.0;
};

/// Builds and solves the extended LP, then recovers d = sum_s' q and the
/// optimistic kernel q / d.
LpSolution solve_extended_lp(const ExtendedLpInstance& inst, const SimplexOptions& options = {});

/// Maximizes <weights, d> over stationary occupancies of the known `kernel` with
/// every entry at least 2 eta. Formulated directly over d. Returns nullopt when
/// that set is empty. Throws InputError unless 0 < eta < 1/(2SA).
std::optional<OccupancyMeasure> exact_direction(std::span<const double> weights,
                                                const TransitionKernel& kernel, double eta,
                                                double* objective_value = nullptr);

struct OptimumResult {
    OccupancyMeasure occupancy;
    double value;
    /// Final duality gap <grad U(d), psi - d>, an upper bound on U(d*) - U(d).
    double fw_gap;
    std::size_t iterations;
};

/// Maximizes U_kappa over the eta-restricted occupancy set of a known kernel by
/// Frank-Wolfe with exact_direction as linear oracle. Uses the 2/(k+2) step
/// rule, or an exact line search when `line_search` is set, and stops once the
/// duality gap drops below `tol`.
OptimumResult optimal_occupancy(const ObjectiveSpec& spec, const TransitionKernel& kernel,
                                double eta, std::size_t max_iterations = 500, double tol = 1e-6,
                                bool line_search = true);

/// Optimal state values of the discounted problem with per-pair `reward`.
/// Sweeps until successive iterates differ by at most tol (1 - gamma) / (2 gamma),
/// which leaves the result within tol of the fixed point. `initial` warm-starts.
std::vector<double> value_iteration(std::span<const double> reward, const TransitionKernel& kernel,
                                    double gamma, double tol,
                                    std::span<const double> initial = {});

/// max over a of the Bellman backup residual |V - TV|.
double bellman_residual(std::span<const double> values, std::span<const double> reward,
                        const TransitionKernel& kernel, double gamma);

/// argmax_a reward(s,a) + gamma sum_s' P(s'|s,a) V(s'); lowest index on ties.
Action greedy_action(std::span<const double> values, std::span<const double> reward,
                     const TransitionKernel& kernel, State state, double gamma);

/// Depth-limited lookahead. horizon 1: argmax reward(s,a). horizon 2: adds
/// gamma sum_s' P(s'|s,a) max_a' reward(s',a'). Lowest index on ties.
Action truncated_action(std::span<const double> reward, const TransitionKernel& kernel,
                        State state, int horizon, double gamma);

}  // namespace kexp
