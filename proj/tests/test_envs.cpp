#include <cmath>

#include "accerl/env.hpp"
#include "doctest.h"

using namespace accerl;

TEST_CASE("chain reaches the goal going right and pays exactly once") {
    ChainMDP env(10, 100);
    Tensor obs = env.reset(1);
    CHECK(obs.data[0] == 1.0f);  // starts at state 0, one-hot
    double total = 0.0;
    StepResult sr{};
    for (int i = 0; i < 9; ++i) {
        sr = env.step(1);
        total += sr.reward;
    }
    CHECK(sr.done);
    CHECK(total == 1.0);

    // left at state 0 stays put
    env.reset(1);
    sr = env.step(0);
    CHECK(sr.obs.data[0] == 1.0f);
    CHECK(sr.reward == 0.0);
}

TEST_CASE("chain optimal values match value iteration to 1e-12") {
    ChainMDP env(10, 100);
    const double gamma = 0.99;
    std::vector<double> vstar = optimal_values(env, gamma);
    std::vector<double> vi = chain_value_iteration(10, gamma, std::vector<double>(10, 1.0));
    REQUIRE(vstar.size() == 10);
    for (int s = 0; s < 9; ++s) {
        CHECK(vstar[static_cast<size_t>(s)] ==
              doctest::Approx(std::pow(gamma, 8 - s)).epsilon(1e-12));
        CHECK(std::abs(vstar[static_cast<size_t>(s)] - vi[static_cast<size_t>(s)]) <= 1e-12);
    }
    CHECK(vstar[9] == 0.0);  // terminal

    CartPoleLike cp;
    CHECK_THROWS_AS(optimal_values(cp, gamma), Error);
}

TEST_CASE("cartpole matches an independent Euler integration") {
    CartPoleLike env;
    Tensor obs = env.reset(123);
    // recover the un-normalized state from the clamped observation scaling
    double x = obs.data[0] * CartPoleLike::kXLimit;
    double xdot = obs.data[1] * 3.0;
    double theta = obs.data[2] * CartPoleLike::kThetaLimit;
    double thetadot = obs.data[3] * 3.0;

    const double mc = CartPoleLike::kMassCart, mp = CartPoleLike::kMassPole;
    const double l = CartPoleLike::kPoleHalfLength, g = CartPoleLike::kGravity;
    const double dt = CartPoleLike::kDt;
    for (int action : {1, 1, 0, 1, 0, 0, 1}) {
        const double force = action == 1 ? CartPoleLike::kForceMag : -CartPoleLike::kForceMag;
        const double ct = std::cos(theta), st = std::sin(theta);
        const double tmp = (force + mp * l * thetadot * thetadot * st) / (mc + mp);
        const double thetaacc =
            (g * st - ct * tmp) / (l * (4.0 / 3.0 - mp * ct * ct / (mc + mp)));
        const double xacc = tmp - mp * l * thetaacc * ct / (mc + mp);
        x += dt * xdot;
        xdot += dt * xacc;
        theta += dt * thetadot;
        thetadot += dt * thetaacc;

        StepResult sr = env.step(action);
        CHECK(sr.obs.data[0] == doctest::Approx(x / CartPoleLike::kXLimit).epsilon(1e-4));
        CHECK(sr.obs.data[2] == doctest::Approx(theta / CartPoleLike::kThetaLimit).epsilon(1e-4));
        CHECK(sr.reward == 1.0);
        CHECK(!sr.done);
    }
}

TEST_CASE("cartpole terminates on limits or the 200 step cap") {
    CartPoleLike env;
    env.reset(5);
    int steps = 0;
    bool done = false;
    while (!done && steps < 500) {
        done = env.step(1).done;  // constant push tips the pole
        steps++;
    }
    CHECK(done);
    CHECK(steps <= 200);
}

TEST_CASE("pixelgrid observation has agent and goal channels") {
    PixelGrid env(8, 64);
    Tensor obs = env.reset(9);
    REQUIRE(obs.shape == std::vector<int>{3, 8, 8});
    double agent = 0.0, goal = 0.0, zero = 0.0;
    for (int i = 0; i < 64; ++i) {
        agent += obs.data[static_cast<size_t>(i)];
        goal += obs.data[static_cast<size_t>(64 + i)];
        zero += obs.data[static_cast<size_t>(128 + i)];
    }
    CHECK(agent == 1.0);
    CHECK(goal == 1.0);
    CHECK(zero == 0.0);
}

TEST_CASE("env resets are deterministic per seed") {
    for (const std::string kind : {"chain", "cartpole", "pixelgrid"}) {
        EnvConfig cfg;
        cfg.kind = kind;
        auto a = make_env(cfg), b = make_env(cfg);
        CHECK(a->reset(77).data == b->reset(77).data);
        StepResult sa = a->step(1), sb = b->step(1);
        CHECK(sa.obs.data == sb.obs.data);
        CHECK(sa.reward == sb.reward);
    }
    EnvConfig bad;
    bad.kind = "nope";
    CHECK_THROWS_AS(make_env(bad), Error);
}
