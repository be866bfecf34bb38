#include "kexp/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "kexp/errors.hpp"

namespace kexp {

double BinnedDim::center(std::size_t bin) const {
    return lower + (static_cast<double>(bin) + 0.5) * width();
}

std::size_t BinnedDim::bin_of(double x) const {
    const double pos = std::floor((x - lower) / width());
    if (pos <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(pos), bins - 1);
}

void DiscretizationSpec::validate() const {
    if (dims.empty()) throw InputError("discretization needs at least one dimension");
    for (const auto& dim : dims) {
        if (dim.bins < 1) throw InputError("every dimension needs at least one bin");
        if (!(dim.lower < dim.upper)) throw InputError("dimension bounds must satisfy lower < upper");
    }
    if (action_values.empty()) throw InputError("discretization needs at least one action");
    if (control_repeat < 1) throw InputError("control_repeat must be at least 1");
}

std::size_t DiscretizationSpec::n_states() const {
    std::size_t n = 1;
    for (const auto& dim : dims) n *= dim.bins;
    return n;
}

std::size_t DiscretizationSpec::state_of(std::span<const double> point) const {
    std::size_t state = 0;
    for (std::size_t i = 0; i < dims.size(); ++i) state = state * dims[i].bins + dims[i].bin_of(point[i]);
    return state;
}

std::vector<double> DiscretizationSpec::center_of(std::size_t state) const {
    std::vector<double> point(dims.size());
    for (std::size_t i = dims.size(); i-- > 0;) {
        point[i] = dims[i].center(state % dims[i].bins);
        state /= dims[i].bins;
    }
    return point;
}

void NoiseModel::validate() const {
    if (support.empty()) throw InputError("noise support must be non-empty");
    double total = 0.0;
    for (const auto& atom : support) {
        if (!(atom.weight >= 0.0)) throw InputError("noise weights must be nonnegative");
        total += atom.weight;
    }
    if (std::abs(total - 1.0) > kRowSumTolerance) {
        throw InputError(fmt::format("noise weights sum to {:.17g}", total));
    }
}

NoiseModel NoiseModel::three_point(double sigma) {
    return NoiseModel{Kind::AdditiveControl, {{-sigma, 0.25}, {0.0, 0.5}, {sigma, 0.25}}};
}

NoiseModel NoiseModel::none() { return NoiseModel{Kind::AdditiveControl, {{0.0, 1.0}}}; }

namespace {

// Smallest repeat count that makes the bin-center pendulum chain strongly
// connected for the usual grids. Other grid sizes fall back to 2.
std::size_t pendulum_repeat_for(std::size_t bins) {
    switch (bins) {
        case 4: return 7;
        case 5: return 6;
        case 6: return 5;
        case 10: return 2;
        default: return 2;
    }
}

template <typename Step>
TransitionKernel build_grid_kernel(const DiscretizationSpec& spec, const NoiseModel& noise,
                                   Step step) {
    spec.validate();
    noise.validate();
    const std::size_t S = spec.n_states();
    const std::size_t A = spec.action_values.size();
    std::vector<double> probs(S * A * S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        const auto start = spec.center_of(s);
        for (std::size_t a = 0; a < A; ++a) {
            double* row = probs.data() + (s * A + a) * S;
            for (const auto& atom : noise.support) {
                if (atom.weight == 0.0) continue;
                auto point = start;
                const double control = spec.action_values[a] + atom.offset;
                for (std::size_t k = 0; k < spec.control_repeat; ++k) step(point, control);
                row[spec.state_of(point)] += atom.weight;
            }
        }
    }
    return TransitionKernel(S, A, std::move(probs));
}

}  // namespace

DiscretizationSpec pendulum_spec(std::size_t bins) {
    return DiscretizationSpec{
        {{-std::numbers::pi, std::numbers::pi, bins}, {-8.0, 8.0, bins}},
        {-2.0, -1.0, 0.0, 1.0, 2.0},
        pendulum_repeat_for(bins)};
}

DiscretizationSpec mountain_car_spec(std::size_t bins) {
    return DiscretizationSpec{{{-1.2, 0.6, bins}, {-0.07, 0.07, bins}}, {-1.0, 0.0, 1.0}, 4};
}

TransitionKernel build_pendulum(const DiscretizationSpec& spec, const NoiseModel& noise) {
    if (spec.dims.size() != 2) throw InputError("pendulum discretization must be two-dimensional");
    static constexpr double g = 10.0, m = 1.0, l = 1.0, dt = 0.05, max_speed = 8.0;
    constexpr double pi = std::numbers::pi;
    return build_grid_kernel(spec, noise, [](std::vector<double>& x, double torque) {
        double& theta = x[0];
        double& speed = x[1];
        speed += (3.0 * g / (2.0 * l) * std::sin(theta) + 3.0 / (m * l * l) * torque) * dt;
        speed = std::clamp(speed, -max_speed, max_speed);
        theta += speed * dt;
        theta = std::fmod(theta + pi, 2.0 * pi);
        if (theta < 0.0) theta += 2.0 * pi;
        theta -= pi;
    });
}

TransitionKernel build_mountain_car(const DiscretizationSpec& spec, const NoiseModel& noise) {
    if (spec.dims.size() != 2) {
        throw InputError("mountain car discretization must be two-dimensional");
    }
    static constexpr double force = 0.001, gravity = 0.0025;
    static constexpr double min_x = -1.2, max_x = 0.6, max_speed = 0.07;
    return build_grid_kernel(spec, noise, [](std::vector<double>& x, double push) {
        double& position = x[0];
        double& speed = x[1];
        speed += force * push - gravity * std::cos(3.0 * position);
        speed = std::clamp(speed, -max_speed, max_speed);
        position = std::clamp(position + speed, min_x, max_x);
        if (position <= min_x && speed < 0.0) speed = 0.0;
    });
}

bool strongly_connected(const TransitionKernel& kernel) {
    const std::size_t S = kernel.n_states();
    const std::size_t A = kernel.n_actions();
    auto reaches_all = [&](bool reverse) {
        std::vector<char> seen(S, 0);
        std::vector<State> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const State s = stack.back();
            stack.pop_back();
            for (State t = 0; t < S; ++t) {
                if (seen[t]) continue;
                bool edge = false;
                for (Action a = 0; a < A && !edge; ++a) {
                    edge = reverse ? kernel(t, a, s) > 0.0 : kernel(s, a, t) > 0.0;
                }
                if (edge) {
                    seen[t] = 1;
                    stack.push_back(t);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    };
    return reaches_all(false) && reaches_all(true);
}

TransitionKernel build_random_mdp(std::size_t n_states, std::size_t n_actions,
                                  std::size_t branching, std::uint64_t seed) {
    if (n_states == 0 || n_actions == 0) throw InputError("random MDP needs states and actions");
    if (branching < 1 || branching > n_states) {
        throw InputError(fmt::format("branching {} outside [1, {}]", branching, n_states));
    }
    Rng rng(seed);
    constexpr int kMaxAttempts = 100000;
    std::vector<std::size_t> order(n_states);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        std::vector<double> probs(n_states * n_actions * n_states, 0.0);
        for (std::size_t pair = 0; pair < n_states * n_actions; ++pair) {
            // Partial Fisher-Yates picks `branching` distinct successors.
            for (std::size_t i = 0; i < n_states; ++i) order[i] = i;
            for (std::size_t i = 0; i < branching; ++i) {
                std::swap(order[i], order[i + rng.index(n_states - i)]);
            }
            std::vector<double> weights(branching);
            double total = 0.0;
            for (auto& w : weights) {
                w = rng.exponential();
                total += w;
            }
            double* row = probs.data() + pair * n_states;
            if (branching == 1) {
                row[order[0]] = 1.0;
                continue;
            }
            double assigned = 0.0;
            for (std::size_t i = 0; i + 1 < branching; ++i) {
                row[order[i]] = weights[i] / total;
                assigned += row[order[i]];
            }
            // The last successor takes the remainder so the row sums to one.
            row[order[branching - 1]] = std::max(0.0, 1.0 - assigned);
        }
        TransitionKernel kernel(n_states, n_actions, std::move(probs));
        if (strongly_connected(kernel)) return kernel;
    }
    throw InputError(fmt::format("no strongly connected {}-state MDP with branching {} after {} draws",
                                 n_states, branching, kMaxAttempts));
}

}  // namespace kexp
