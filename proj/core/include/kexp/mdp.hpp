#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kexp/random.hpp"

namespace kexp {

using State = std::size_t;
using Action = std::size_t;

/// Tolerance on the row sums of kernels and policies.
inline constexpr double kRowSumTolerance = 1e-12;
/// Tolerance on the total mass of an occupancy measure.
inline constexpr double kOccupancySumTolerance = 1e-10;

/// Ground-truth or estimated transition kernel P(s' | s, a).
///
/// Storage is flat, state-major then action then next state:
/// probs[(s * A + a) * S + s']. The same (s, a) ordering is used for every
/// per-pair table in the library.
class TransitionKernel {
public:
    /// Validates that every row is a probability distribution.
    TransitionKernel(std::size_t n_states, std::size_t n_actions, std::vector<double> probs);

    static TransitionKernel uniform(std::size_t n_states, std::size_t n_actions);

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    std::size_t n_pairs() const noexcept { return n_states_ * n_actions_; }
    std::size_t pair_index(State s, Action a) const noexcept { return s * n_actions_ + a; }

    std::span<const double> row(State s, Action a) const;
    std::span<const double> row(std::size_t pair) const;
    double operator()(State s, Action a, State next) const { return row(s, a)[next]; }
    std::span<const double> data() const noexcept { return probs_; }

    friend bool operator==(const TransitionKernel&, const TransitionKernel&) = default;

private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<double> probs_;
};

/// Stationary randomized policy pi(a | s), stored state-major.
class Policy {
public:
    Policy(std::size_t n_states, std::size_t n_actions, std::vector<double> probs);

    static Policy uniform(std::size_t n_states, std::size_t n_actions);

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    std::span<const double> row(State s) const;
    double operator()(State s, Action a) const { return row(s)[a]; }
    std::span<const double> data() const noexcept { return probs_; }

private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<double> probs_;
};

/// Distribution d over state-action pairs.
class OccupancyMeasure {
public:
    OccupancyMeasure(std::size_t n_states, std::size_t n_actions, std::vector<double> mass);

    static OccupancyMeasure uniform(std::size_t n_states, std::size_t n_actions);

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    std::size_t n_pairs() const noexcept { return mass_.size(); }
    double operator()(State s, Action a) const { return mass_[s * n_actions_ + a]; }
    double operator[](std::size_t pair) const { return mass_[pair]; }
    std::span<const double> data() const noexcept { return mass_; }

    /// Marginal mass of state s.
    double state_mass(State s) const;

private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<double> mass_;
};

struct Trajectory {
    std::vector<State> states;
    std::vector<Action> actions;

    std::size_t length() const noexcept { return actions.size(); }
};

/// Draws the successor of (state, action) from the kernel row.
State sample_step(const TransitionKernel& kernel, State state, Action action, Rng& rng);

/// Draws an index from a probability row by inverse CDF.
std::size_t sample_index(std::span<const double> probs, Rng& rng);

/// Rolls out `policy` for `steps` transitions starting at `start`.
Trajectory sample_trajectory(const TransitionKernel& kernel, const Policy& policy, State start,
                             std::size_t steps, Rng& rng);

inline constexpr std::size_t kPowerIterationCap = 100000;

/// Stationary state-action occupancy of the chain induced by (kernel, policy),
/// by power iteration on the state-action chain. Throws ConvergenceError when the
/// flow residual is still above `tol` after `max_sweeps` sweeps (periodic or
/// reducible chains).
OccupancyMeasure stationary_occupancy(const TransitionKernel& kernel, const Policy& policy,
                                      double tol = 1e-10,
                                      std::size_t max_sweeps = kPowerIterationCap);

/// pi(a|s) = d(s,a) / sum_b d(s,b); zero-marginal states get uniform actions.
Policy policy_from_occupancy(const OccupancyMeasure& d);

/// Max over states of |sum_a d(s,a) - sum_{s',a} P(s|s',a) d(s',a)|.
double flow_residual(std::span<const double> d, const TransitionKernel& kernel);

struct FeasibilityReport {
    bool feasible = false;
    double flow_residual = 0.0;
    double min_mass = 0.0;
    /// First pair (state-major order) whose mass is below 2 * eta.
    std::optional<std::pair<State, Action>> violating_pair;
};

inline constexpr double kFlowTolerance = 1e-8;

/// Checks membership of d in the eta-restricted stationary occupancy set of
/// `kernel`. Requires 0 < eta < 1 / (2 S A).
FeasibilityReport occupancy_feasible(const OccupancyMeasure& d, const TransitionKernel& kernel,
                                     double eta);

/// Text format: header line `S A`, then S*A lines of S probabilities.
void write_kernel(std::ostream& out, const TransitionKernel& kernel);
TransitionKernel read_kernel(std::istream& in);
void save_kernel(const std::string& path, const TransitionKernel& kernel);
TransitionKernel load_kernel(const std::string& path);

}  // namespace kexp
