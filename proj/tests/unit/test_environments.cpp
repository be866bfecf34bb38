#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include "kexp/environments.hpp"
#include "kexp/errors.hpp"
#include "kexp/estimation.hpp"

using namespace kexp;

namespace {

std::map<State, double> support_of(const TransitionKernel& k, State s, Action a) {
    std::map<State, double> row;
    const auto r = k.row(s, a);
    for (State t = 0; t < r.size(); ++t) {
        if (r[t] > 0.0) row[t] = r[t];
    }
    return row;
}

bool all_point_masses(const TransitionKernel& k) {
    for (std::size_t p = 0; p < k.n_pairs(); ++p) {
        const auto r = k.row(p);
        if (std::count(r.begin(), r.end(), 1.0) != 1) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("pendulum shape") {
    const auto k = build_pendulum(pendulum_spec());
    CHECK(k.n_states() == 100);
    CHECK(k.n_actions() == 5);
    CHECK(k.n_pairs() == 500);
    CHECK(strongly_connected(k));
    for (std::size_t p = 0; p < k.n_pairs(); ++p) {
        double sum = 0.0;
        for (double x : k.row(p)) sum += x;
        CHECK(sum == 1.0);
    }
}

TEST_CASE("pendulum without noise is deterministic") {
    CHECK(all_point_masses(build_pendulum(pendulum_spec(), NoiseModel::none())));
    CHECK(all_point_masses(build_pendulum(pendulum_spec(5), NoiseModel::none())));
}

TEST_CASE("pendulum rows match the scripted one-step oracle") {
    SUBCASE("upright bin, zero torque") {
        const auto k = build_pendulum(pendulum_spec());
        CHECK(support_of(k, 55, 2) == std::map<State, double>{{55, 1.0}});
    }
    SUBCASE("10 bins, state 13, torque +1") {
        const auto k = build_pendulum(pendulum_spec());
        CHECK(support_of(k, 13, 3) == std::map<State, double>{{2, 0.25}, {12, 0.5}, {13, 0.25}});
    }
    SUBCASE("5 bins, state 3, torque +2") {
        const auto k = build_pendulum(pendulum_spec(5));
        CHECK(support_of(k, 3, 4) == std::map<State, double>{{2, 0.25}, {7, 0.5}, {8, 0.25}});
    }
}

TEST_CASE("small pendulum grid is strongly connected") {
    for (std::size_t bins : {4, 5, 6, 10}) {
        CAPTURE(bins);
        CHECK(strongly_connected(build_pendulum(pendulum_spec(bins))));
    }
}

TEST_CASE("mountain car shape and rows") {
    const auto k = build_mountain_car(mountain_car_spec());
    CHECK(k.n_states() == 169);
    CHECK(k.n_actions() == 3);
    CHECK(k.n_pairs() == 507);
    CHECK(all_point_masses(build_mountain_car(mountain_car_spec(), NoiseModel::none())));
    CHECK(support_of(k, 84, 0) == std::map<State, double>{{83, 1.0}});
    CHECK(support_of(k, 84, 2) == std::map<State, double>{{84, 1.0}});
    const auto loud = build_mountain_car(mountain_car_spec(), NoiseModel::three_point(1.0));
    CHECK(support_of(loud, 7, 2) == std::map<State, double>{{8, 0.25}, {21, 0.5}, {22, 0.25}});
}

TEST_CASE("bin centers round trip") {
    for (const auto& spec : {pendulum_spec(), pendulum_spec(5), mountain_car_spec(), mountain_car_spec(7)}) {
        for (std::size_t s = 0; s < spec.n_states(); ++s) {
            const auto center = spec.center_of(s);
            REQUIRE(spec.state_of(center) == s);
        }
    }
    const BinnedDim dim{-1.0, 1.0, 4};
    CHECK(dim.bin_of(-5.0) == 0);
    CHECK(dim.bin_of(5.0) == 3);
    CHECK(dim.bin_of(1.0) == 3);
    CHECK(dim.center(0) == doctest::Approx(-0.75));
}

TEST_CASE("noise weights never move mass outside the reachable bins") {
    const auto spec = pendulum_spec(5);
    const auto a = build_pendulum(spec, NoiseModel{NoiseModel::Kind::AdditiveControl,
                                                    {{-0.5, 0.25}, {0.0, 0.5}, {0.5, 0.25}}});
    const auto b = build_pendulum(spec, NoiseModel{NoiseModel::Kind::AdditiveControl,
                                                    {{-0.5, 0.1}, {0.0, 0.8}, {0.5, 0.1}}});
    for (std::size_t i = 0; i < a.data().size(); ++i) CHECK((a.data()[i] > 0.0) == (b.data()[i] > 0.0));
}

TEST_CASE("discretization validation") {
    CHECK_THROWS_AS(build_pendulum(DiscretizationSpec{{{0.0, 1.0, 0}, {0.0, 1.0, 2}}, {0.0}}), InputError);
    CHECK_THROWS_AS(build_pendulum(DiscretizationSpec{{{1.0, 0.0, 2}, {0.0, 1.0, 2}}, {0.0}}), InputError);
    CHECK_THROWS_AS(build_pendulum(DiscretizationSpec{{{0.0, 1.0, 2}, {0.0, 1.0, 2}}, {}}), InputError);
    CHECK_THROWS_AS(build_pendulum(pendulum_spec(), NoiseModel{NoiseModel::Kind::AdditiveControl, {}}),
                    InputError);
    CHECK_THROWS_AS(build_pendulum(pendulum_spec(), NoiseModel{NoiseModel::Kind::AdditiveControl, {{0.0, 0.9}}}),
                    InputError);
}

TEST_CASE("random MDP") {
    SUBCASE("branching 1 gives deterministic rows") {
        const auto k = build_random_mdp(5, 3, 1, 11);
        CHECK(all_point_masses(k));
        for (double c : complexities(k)) CHECK(c == 0.0);
        CHECK(strongly_connected(k));
    }
    SUBCASE("full branching gives full support") {
        const auto k = build_random_mdp(6, 2, 6, 3);
        for (double p : k.data()) CHECK(p > 0.0);
    }
    SUBCASE("each row has exactly `branching` successors") {
        const auto k = build_random_mdp(8, 2, 3, 5);
        for (std::size_t p = 0; p < k.n_pairs(); ++p) {
            const auto r = k.row(p);
            CHECK(std::count_if(r.begin(), r.end(), [](double x) { return x > 0.0; }) == 3);
        }
        CHECK(strongly_connected(k));
    }
    SUBCASE("fixed seed reproduces the frozen kernel") {
        const auto k = build_random_mdp(4, 2, 3, 7);
        CHECK(k == build_random_mdp(4, 2, 3, 7));
        CHECK(k == load_kernel(KEXP_TEST_DATA_DIR "/random_mdp_4x2_b3_seed7.txt"));
    }
    SUBCASE("invalid branching") {
        CHECK_THROWS_AS(build_random_mdp(3, 2, 0, 1), InputError);
        CHECK_THROWS_AS(build_random_mdp(3, 2, 4, 1), InputError);
    }
}

TEST_CASE("strongly_connected detects a sink") {
    const TransitionKernel k(3, 1, {0, 1, 0, 0, 0, 1, 0, 0, 1});
    CHECK_FALSE(strongly_connected(k));
    const TransitionKernel cycle(3, 1, {0, 1, 0, 0, 0, 1, 1, 0, 0});
    CHECK(strongly_connected(cycle));
}
