#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "kexp/mdp.hpp"

namespace kexp {

/// Transition counts T(s,a,s'), their pair marginals T(s,a) and the number of
/// recorded transitions t. Single writer; copies are cheap snapshots.
class VisitCounts {
public:
    VisitCounts(std::size_t n_states, std::size_t n_actions);

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    std::size_t n_pairs() const noexcept { return n_states_ * n_actions_; }

    void record(State s, Action a, State next);

    std::uint64_t triple(State s, Action a, State next) const {
        return triples_[(s * n_actions_ + a) * n_states_ + next];
    }
    std::uint64_t pair(State s, Action a) const { return pairs_[s * n_actions_ + a]; }
    std::uint64_t pair(std::size_t pair_index) const { return pairs_[pair_index]; }
    std::span<const std::uint64_t> triples_of(std::size_t pair_index) const {
        return std::span<const std::uint64_t>(triples_).subspan(pair_index * n_states_, n_states_);
    }
    std::span<const std::uint64_t> pairs() const noexcept { return pairs_; }
    std::uint64_t total_steps() const noexcept { return total_; }

    friend bool operator==(const VisitCounts&, const VisitCounts&) = default;

private:
    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<std::uint64_t> triples_;
    std::vector<std::uint64_t> pairs_;
    std::uint64_t total_ = 0;
};

/// Plug-in estimate: counts normalized per pair, uniform rows where unvisited.
TransitionKernel empirical_kernel(const VisitCounts& counts);

/// 1 - sum p^2 for a probability row.
double intrinsic_complexity(std::span<const double> dist);
/// sqrt(1 - sum p^2).
double intrinsic_complexity_sqrt(std::span<const double> dist);
/// Per-pair intrinsic complexity of every row of `kernel`, state-major.
std::vector<double> complexities(const TransitionKernel& kernel);

/// delta / ((pi^2 / 3) S A t^2).
double delta_schedule(double delta, std::uint64_t t, std::size_t n_states, std::size_t n_actions);

/// Upper confidence bound on c(s,a)^kappa: min{1, (c_hat + e)^kappa} with
/// e = S sqrt(log(2S/delta_t) / (2T)); 1 for an unvisited pair.
double complexity_ucb(const VisitCounts& counts, State s, Action a, double kappa, double delta_t);

/// l1 radius min{2, sqrt(2 log(1/delta_t) / T)}; 2 for an unvisited pair.
double confidence_radius(const VisitCounts& counts, State s, Action a, double delta_t);

struct ConfidenceState {
    double delta = 0.0;
    double delta_t = 0.0;
    std::vector<double> c_ucb;
    std::vector<double> radii;
};

/// Evaluates both confidence constructions for all pairs at time index t.
ConfidenceState confidence_state(const VisitCounts& counts, double kappa, double delta,
                                 std::uint64_t t);

/// Debug dump: header `S A t`, then one `s a s' count` line per nonzero triple.
void write_counts(std::ostream& out, const VisitCounts& counts);
VisitCounts read_counts(std::istream& in);

}  // namespace kexp
