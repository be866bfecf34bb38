#include "kexp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "kexp/errors.hpp"

namespace kexp {

namespace {

void check_distribution(std::span<const double> row, double tol, const char* what) {
    double sum = 0.0;
    for (double p : row) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw InputError(fmt::format("{}: entry {} outside [0, 1]", what, p));
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > tol) {
        throw InputError(fmt::format("{}: row sums to {:.17g}", what, sum));
    }
}

}  // namespace

TransitionKernel::TransitionKernel(std::size_t n_states, std::size_t n_actions,
                                   std::vector<double> probs)
    : n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
    if (n_states_ == 0 || n_actions_ == 0) {
        throw InputError("transition kernel needs at least one state and one action");
    }
    if (probs_.size() != n_states_ * n_actions_ * n_states_) {
        throw InputError(fmt::format("transition kernel expects {} entries, got {}",
                                     n_states_ * n_actions_ * n_states_, probs_.size()));
    }
    for (std::size_t pair = 0; pair < n_pairs(); ++pair) {
        check_distribution(row(pair), kRowSumTolerance, "transition kernel");
    }
}

TransitionKernel TransitionKernel::uniform(std::size_t n_states, std::size_t n_actions) {
    return TransitionKernel(n_states, n_actions,
                            std::vector<double>(n_states * n_actions * n_states,
                                                1.0 / static_cast<double>(n_states)));
}

std::span<const double> TransitionKernel::row(State s, Action a) const {
    if (s >= n_states_ || a >= n_actions_) {
        throw InputError(fmt::format("pair ({}, {}) out of range for {}x{} kernel", s, a,
                                     n_states_, n_actions_));
    }
    return row(pair_index(s, a));
}

std::span<const double> TransitionKernel::row(std::size_t pair) const {
    return std::span<const double>(probs_).subspan(pair * n_states_, n_states_);
}

Policy::Policy(std::size_t n_states, std::size_t n_actions, std::vector<double> probs)
    : n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
    if (n_states_ == 0 || n_actions_ == 0 || probs_.size() != n_states_ * n_actions_) {
        throw InputError("policy table has the wrong shape");
    }
    for (State s = 0; s < n_states_; ++s) {
        check_distribution(row(s), kRowSumTolerance, "policy");
    }
}

Policy Policy::uniform(std::size_t n_states, std::size_t n_actions) {
    return Policy(n_states, n_actions,
                  std::vector<double>(n_states * n_actions, 1.0 / static_cast<double>(n_actions)));
}

std::span<const double> Policy::row(State s) const {
    return std::span<const double>(probs_).subspan(s * n_actions_, n_actions_);
}

OccupancyMeasure::OccupancyMeasure(std::size_t n_states, std::size_t n_actions,
                                   std::vector<double> mass)
    : n_states_(n_states), n_actions_(n_actions), mass_(std::move(mass)) {
    if (n_states_ == 0 || n_actions_ == 0 || mass_.size() != n_states_ * n_actions_) {
        throw InputError("occupancy measure has the wrong shape");
    }
    double sum = 0.0;
    for (double m : mass_) {
        if (!(m >= 0.0)) throw InputError(fmt::format("occupancy entry {} is negative", m));
        sum += m;
    }
    if (std::abs(sum - 1.0) > kOccupancySumTolerance) {
        throw InputError(fmt::format("occupancy measure sums to {:.17g}", sum));
    }
}

OccupancyMeasure OccupancyMeasure::uniform(std::size_t n_states, std::size_t n_actions) {
    return OccupancyMeasure(
        n_states, n_actions,
        std::vector<double>(n_states * n_actions, 1.0 / static_cast<double>(n_states * n_actions)));
}

double OccupancyMeasure::state_mass(State s) const {
    double m = 0.0;
    for (Action a = 0; a < n_actions_; ++a) m += mass_[s * n_actions_ + a];
    return m;
}

std::size_t sample_index(std::span<const double> probs, Rng& rng) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        cumulative += probs[i];
        last_positive = i;
        if (u < cumulative) return i;
    }
    // Rounding left u above the final cumulative sum.
    return last_positive;
}

State sample_step(const TransitionKernel& kernel, State state, Action action, Rng& rng) {
    return sample_index(kernel.row(state, action), rng);
}

Trajectory sample_trajectory(const TransitionKernel& kernel, const Policy& policy, State start,
                             std::size_t steps, Rng& rng) {
    if (start >= kernel.n_states()) throw InputError("start state out of range");
    Trajectory traj;
    traj.states.reserve(steps + 1);
    traj.actions.reserve(steps);
    traj.states.push_back(start);
    State s = start;
    for (std::size_t t = 0; t < steps; ++t) {
        const Action a = sample_index(policy.row(s), rng);
        s = sample_step(kernel, s, a, rng);
        traj.actions.push_back(a);
        traj.states.push_back(s);
    }
    return traj;
}

namespace {

// inflow[s'] = sum_{s,a} d(s,a) P(s'|s,a)
std::vector<double> inflow(std::span<const double> d, const TransitionKernel& kernel) {
    const std::size_t S = kernel.n_states();
    std::vector<double> in(S, 0.0);
    for (std::size_t pair = 0; pair < kernel.n_pairs(); ++pair) {
        const double mass = d[pair];
        if (mass == 0.0) continue;
        const auto row = kernel.row(pair);
        for (State next = 0; next < S; ++next) in[next] += mass * row[next];
    }
    return in;
}

}  // namespace

double flow_residual(std::span<const double> d, const TransitionKernel& kernel) {
    if (d.size() != kernel.n_pairs()) throw InputError("occupancy and kernel shapes differ");
    const std::size_t A = kernel.n_actions();
    const auto in = inflow(d, kernel);
    double residual = 0.0;
    for (State s = 0; s < kernel.n_states(); ++s) {
        double out = 0.0;
        for (Action a = 0; a < A; ++a) out += d[s * A + a];
        residual = std::max(residual, std::abs(out - in[s]));
    }
    return residual;
}

OccupancyMeasure stationary_occupancy(const TransitionKernel& kernel, const Policy& policy,
                                      double tol, std::size_t max_sweeps) {
    const std::size_t S = kernel.n_states();
    const std::size_t A = kernel.n_actions();
    if (policy.n_states() != S || policy.n_actions() != A) {
        throw InputError("policy and kernel shapes differ");
    }
    std::vector<double> d(S * A);
    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) d[s * A + a] = policy(s, a) / static_cast<double>(S);
    }
    double residual = 0.0;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        const auto in = inflow(d, kernel);
        residual = 0.0;
        double total = 0.0;
        for (State s = 0; s < S; ++s) {
            double out = 0.0;
            for (Action a = 0; a < A; ++a) out += d[s * A + a];
            residual = std::max(residual, std::abs(out - in[s]));
            total += in[s];
        }
        if (residual <= tol) {
            double sum = 0.0;
            for (double m : d) sum += m;
            for (double& m : d) m /= sum;
            return OccupancyMeasure(S, A, std::move(d));
        }
        for (State s = 0; s < S; ++s) {
            for (Action a = 0; a < A; ++a) d[s * A + a] = in[s] / total * policy(s, a);
        }
    }
    throw ConvergenceError(
        fmt::format("stationary occupancy did not converge in {} sweeps (residual {:.3g})",
                    max_sweeps, residual),
        residual);
}

Policy policy_from_occupancy(const OccupancyMeasure& d) {
    const std::size_t S = d.n_states();
    const std::size_t A = d.n_actions();
    std::vector<double> probs(S * A);
    for (State s = 0; s < S; ++s) {
        const double marginal = d.state_mass(s);
        for (Action a = 0; a < A; ++a) {
            probs[s * A + a] =
                marginal > 0.0 ? d(s, a) / marginal : 1.0 / static_cast<double>(A);
        }
    }
    return Policy(S, A, std::move(probs));
}

FeasibilityReport occupancy_feasible(const OccupancyMeasure& d, const TransitionKernel& kernel,
                                     double eta) {
    const double pairs = static_cast<double>(kernel.n_pairs());
    if (!(eta > 0.0 && eta < 1.0 / (2.0 * pairs))) {
        throw InputError(fmt::format("eta = {} outside (0, 1/(2SA)) = (0, {})", eta,
                                     1.0 / (2.0 * pairs)));
    }
    FeasibilityReport report;
    report.flow_residual = flow_residual(d.data(), kernel);
    report.min_mass = *std::min_element(d.data().begin(), d.data().end());
    for (std::size_t pair = 0; pair < d.n_pairs(); ++pair) {
        if (d[pair] < 2.0 * eta - 1e-12) {
            report.violating_pair = {pair / d.n_actions(), pair % d.n_actions()};
            break;
        }
    }
    report.feasible = report.flow_residual <= kFlowTolerance && !report.violating_pair;
    return report;
}

void write_kernel(std::ostream& out, const TransitionKernel& kernel) {
    const std::size_t S = kernel.n_states();
    out << S << ' ' << kernel.n_actions() << '\n';
    for (std::size_t pair = 0; pair < kernel.n_pairs(); ++pair) {
        const auto row = kernel.row(pair);
        for (State next = 0; next < S; ++next) {
            if (next) out << ' ';
            out << fmt::format("{}", row[next]);
        }
        out << '\n';
    }
}

TransitionKernel read_kernel(std::istream& in) {
    std::size_t S = 0, A = 0;
    if (!(in >> S >> A) || S == 0 || A == 0) {
        throw InputError("kernel file: expected header `S A` with positive counts");
    }
    std::vector<double> probs(S * A * S);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!(in >> probs[i])) {
            throw InputError(fmt::format("kernel file: expected {} probabilities, read {}",
                                         probs.size(), i));
        }
    }
    std::string extra;
    if (in >> extra) throw InputError("kernel file: trailing data after last row");
    return TransitionKernel(S, A, std::move(probs));
}

void save_kernel(const std::string& path, const TransitionKernel& kernel) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open " + path + " for writing");
    write_kernel(out, kernel);
}

TransitionKernel load_kernel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return read_kernel(in);
}

}  // namespace kexp
