#pragma once

#include <cstdint>
#include <vector>

#include "kexp/mdp.hpp"

namespace kexp {

struct BinnedDim {
    double lower;
    double upper;
    std::size_t bins;

    double width() const { return (upper - lower) / static_cast<double>(bins); }
    double center(std::size_t bin) const;
    /// Bin containing x; values outside [lower, upper] land in the edge bins.
    std::size_t bin_of(double x) const;
};

/// Uniform grid over a box of continuous states plus a finite action set.
///
/// `control_repeat` is the number of physics substeps the chosen control is
/// held for per tabular transition.
struct DiscretizationSpec {
    std::vector<BinnedDim> dims;
    std::vector<double> action_values;
    std::size_t control_repeat = 1;

    void validate() const;
    std::size_t n_states() const;
    /// Row-major flattening, first dimension slowest.
    std::size_t state_of(std::span<const double> point) const;
    std::vector<double> center_of(std::size_t state) const;
};

struct NoiseAtom {
    double offset;
    double weight;
};

/// Finite-support additive noise on the control input.
struct NoiseModel {
    enum class Kind { AdditiveControl };

    Kind kind = Kind::AdditiveControl;
    std::vector<NoiseAtom> support;

    void validate() const;

    /// {(-sigma, 1/4), (0, 1/2), (+sigma, 1/4)}.
    static NoiseModel three_point(double sigma);
    static NoiseModel none();
};

inline constexpr double kPendulumNoiseSigma = 0.5;
inline constexpr double kMountainCarNoiseSigma = 0.0005;

/// theta in [-pi, pi] x v in [-8, 8]; torques {-2, -1, 0, 1, 2}.
DiscretizationSpec pendulum_spec(std::size_t bins = 10);
/// x in [-1.2, 0.6] x v in [-0.07, 0.07]; pushes {-1, 0, +1}.
DiscretizationSpec mountain_car_spec(std::size_t bins = 13);

TransitionKernel build_pendulum(const DiscretizationSpec& spec,
                                const NoiseModel& noise = NoiseModel::three_point(kPendulumNoiseSigma));
TransitionKernel build_mountain_car(
    const DiscretizationSpec& spec,
    const NoiseModel& noise = NoiseModel::three_point(kMountainCarNoiseSigma));

/// Random kernel whose rows each put Dirichlet(1) weights on `branching`
/// distinct successors, resampled until the union graph over actions is
/// strongly connected.
TransitionKernel build_random_mdp(std::size_t n_states, std::size_t n_actions,
                                  std::size_t branching, std::uint64_t seed);

/// True when every state reaches every other state through some action sequence.
bool strongly_connected(const TransitionKernel& kernel);

}  // namespace kexp
