#include "kexp/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

#include "kexp/errors.hpp"

namespace kexp {

VisitCounts::VisitCounts(std::size_t n_states, std::size_t n_actions)
    : n_states_(n_states),
      n_actions_(n_actions),
      triples_(n_states * n_actions * n_states, 0),
      pairs_(n_states * n_actions, 0) {
    if (n_states == 0 || n_actions == 0) throw InputError("counts need states and actions");
}

void VisitCounts::record(State s, Action a, State next) {
    if (s >= n_states_ || a >= n_actions_ || next >= n_states_) {
        throw InputError(fmt::format("transition ({}, {}, {}) out of range", s, a, next));
    }
    const std::size_t p = s * n_actions_ + a;
    ++triples_[p * n_states_ + next];
    ++pairs_[p];
    ++total_;
}

TransitionKernel empirical_kernel(const VisitCounts& counts) {
    const std::size_t S = counts.n_states();
    std::vector<double> probs(counts.n_pairs() * S);
    for (std::size_t p = 0; p < counts.n_pairs(); ++p) {
        double* row = probs.data() + p * S;
        const std::uint64_t visits = counts.pair(p);
        if (visits == 0) {
            std::fill(row, row + S, 1.0 / static_cast<double>(S));
            continue;
        }
        const auto triples = counts.triples_of(p);
        for (State next = 0; next < S; ++next) {
            row[next] = static_cast<double>(triples[next]) / static_cast<double>(visits);
        }
    }
    return TransitionKernel(S, counts.n_actions(), std::move(probs));
}

double intrinsic_complexity(std::span<const double> dist) {
    double sum = 0.0, squares = 0.0;
    for (double p : dist) {
        if (!(p >= 0.0)) throw InputError("distribution has a negative entry");
        sum += p;
        squares += p * p;
    }
    if (dist.empty() || std::abs(sum - 1.0) > 1e-9) {
        throw InputError(fmt::format("distribution sums to {:.17g}, not 1", sum));
    }
    return std::max(0.0, 1.0 - squares);
}

double intrinsic_complexity_sqrt(std::span<const double> dist) {
    return std::sqrt(intrinsic_complexity(dist));
}

std::vector<double> complexities(const TransitionKernel& kernel) {
    std::vector<double> c(kernel.n_pairs());
    for (std::size_t p = 0; p < c.size(); ++p) c[p] = intrinsic_complexity(kernel.row(p));
    return c;
}

double delta_schedule(double delta, std::uint64_t t, std::size_t n_states, std::size_t n_actions) {
    if (!(delta > 0.0 && delta < 1.0)) throw InputError(fmt::format("delta = {} outside (0, 1)", delta));
    if (t < 1) throw InputError("time index must be at least 1");
    const double td = static_cast<double>(t);
    return delta / (std::numbers::pi * std::numbers::pi / 3.0 * static_cast<double>(n_states) *
                    static_cast<double>(n_actions) * td * td);
}

namespace {

double empirical_complexity(const VisitCounts& counts, std::size_t pair) {
    const double visits = static_cast<double>(counts.pair(pair));
    double squares = 0.0;
    for (std::uint64_t n : counts.triples_of(pair)) {
        const double p = static_cast<double>(n) / visits;
        squares += p * p;
    }
    return std::max(0.0, 1.0 - squares);
}

}  // namespace

double complexity_ucb(const VisitCounts& counts, State s, Action a, double kappa, double delta_t) {
    if (!(kappa >= 1.0)) throw InputError("kappa must be at least 1");
    if (s >= counts.n_states() || a >= counts.n_actions()) throw InputError("pair out of range");
    const std::size_t pair = s * counts.n_actions() + a;
    const std::uint64_t visits = counts.pair(pair);
    if (visits == 0) return 1.0;
    const double S = static_cast<double>(counts.n_states());
    const double e = S * std::sqrt(std::log(2.0 * S / delta_t) / (2.0 * static_cast<double>(visits)));
    const double base = empirical_complexity(counts, pair) + e;
    if (base >= 1.0) return 1.0;
    return std::min(1.0, std::pow(base, kappa));
}

double confidence_radius(const VisitCounts& counts, State s, Action a, double delta_t) {
    if (s >= counts.n_states() || a >= counts.n_actions()) throw InputError("pair out of range");
    const std::uint64_t visits = counts.pair(s, a);
    if (visits == 0) return 2.0;
    return std::min(2.0, std::sqrt(2.0 * std::log(1.0 / delta_t) / static_cast<double>(visits)));
}

ConfidenceState confidence_state(const VisitCounts& counts, double kappa, double delta,
                                 std::uint64_t t) {
    ConfidenceState state;
    state.delta = delta;
    state.delta_t = delta_schedule(delta, t, counts.n_states(), counts.n_actions());
    state.c_ucb.resize(counts.n_pairs());
    state.radii.resize(counts.n_pairs());
    for (State s = 0; s < counts.n_states(); ++s) {
        for (Action a = 0; a < counts.n_actions(); ++a) {
            const std::size_t p = s * counts.n_actions() + a;
            state.c_ucb[p] = complexity_ucb(counts, s, a, kappa, state.delta_t);
            state.radii[p] = confidence_radius(counts, s, a, state.delta_t);
        }
    }
    return state;
}

void write_counts(std::ostream& out, const VisitCounts& counts) {
    const std::size_t S = counts.n_states();
    const std::size_t A = counts.n_actions();
    out << S << ' ' << A << ' ' << counts.total_steps() << '\n';
    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) {
            for (State next = 0; next < S; ++next) {
                if (const auto n = counts.triple(s, a, next)) {
                    out << s << ' ' << a << ' ' << next << ' ' << n << '\n';
                }
            }
        }
    }
}

VisitCounts read_counts(std::istream& in) {
    std::size_t S = 0, A = 0;
    std::uint64_t total = 0;
    if (!(in >> S >> A >> total)) throw InputError("counts dump: expected header `S A t`");
    VisitCounts counts(S, A);
    std::size_t s = 0, a = 0, next = 0;
    std::uint64_t n = 0;
    while (in >> s >> a >> next >> n) {
        for (std::uint64_t i = 0; i < n; ++i) counts.record(s, a, next);
    }
    if (!in.eof()) throw InputError("counts dump: malformed triple line");
    if (counts.total_steps() != total) {
        throw InputError(fmt::format("counts dump: header says t = {}, triples sum to {}", total,
                                     counts.total_steps()));
    }
    return counts;
}

}  // namespace kexp
