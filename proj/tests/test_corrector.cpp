#include <cmath>
#include <random>

#include "accerl/corrector.hpp"
#include "accerl/policy.hpp"
#include "doctest.h"

using namespace accerl;

namespace {

Trajectory small_traj(int n, bool terminal) {
    Trajectory t;
    for (int i = 0; i <= n; ++i) {
        Tensor o = Tensor::zeros({2});
        o.data[0] = static_cast<float>(i);
        t.obs.push_back(o);
    }
    for (int i = 0; i < n; ++i) {
        t.actions.push_back(i % 2);
        t.rewards.push_back(1.0);
        t.behavior_probs.push_back(0.5);
        t.done.push_back(i == n - 1 && terminal ? 1 : 0);
    }
    return t;
}

}  // namespace

TEST_CASE("importance ratio clips at the cap and rejects bad behavior probs") {
    CHECK(is_ratio(0.9, 0.3) == 1.0);
    CHECK(is_ratio(0.2, 0.4) == doctest::Approx(0.5));
    CHECK(is_ratio(0.9, 0.3, 2.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(is_ratio(0.5, 0.0), Error);
    CHECK_THROWS_AS(is_ratio(0.5, -0.1), Error);
}

TEST_CASE("trajectory validation catches structural problems") {
    Trajectory t = small_traj(3, false);
    CHECK_NOTHROW(t.validate());
    t.obs.pop_back();
    CHECK_THROWS_AS(t.validate(), Error);

    Trajectory b = small_traj(3, false);
    b.behavior_probs[1] = 0.0;
    CHECK_THROWS_AS(b.validate(), Error);
    b.behavior_probs[1] = 1.5;
    CHECK_THROWS_AS(b.validate(), Error);
}

TEST_CASE("corrected targets on a 2-step hand example") {
    // n=2, gamma=0.9, V=(1, 2, 3), pi=(0.25, 0.5), mu=(0.5, 0.5), r=(1, 1)
    Trajectory t = small_traj(2, false);
    std::vector<double> values = {1.0, 2.0, 3.0};
    std::vector<double> pi = {0.25, 0.5};
    VTraceConfig cfg;
    cfg.gamma = 0.9;
    VTraceResult r = vtrace_targets(t, values, pi, cfg);

    const double rho0 = 0.5, c0 = 0.5, rho1 = 1.0;
    const double d1 = rho1 * (1.0 + 0.9 * 3.0 - 2.0);  // 1.7
    const double d0 = rho0 * (1.0 + 0.9 * 2.0 - 1.0);  // 0.9
    CHECK(r.vs[2] == doctest::Approx(3.0));
    CHECK(r.vs[1] == doctest::Approx(2.0 + d1));
    CHECK(r.vs[0] == doctest::Approx(1.0 + d0 + 0.9 * c0 * d1));
    CHECK(r.rho[0] == doctest::Approx(rho0));
    CHECK(r.rho[1] == doctest::Approx(rho1));
}

TEST_CASE("terminal steps drop the bootstrap") {
    Trajectory t = small_traj(2, true);
    std::vector<double> values = {1.0, 2.0, 3.0};
    std::vector<double> pi = {0.5, 0.5};
    VTraceConfig cfg;
    cfg.gamma = 0.9;
    VTraceResult r = vtrace_targets(t, values, pi, cfg);
    CHECK(r.vs[2] == 0.0);
    CHECK(r.vs[1] == doctest::Approx(2.0 + (1.0 + 0.0 - 2.0)));
}

TEST_CASE("rho_bar below c_bar is rejected") {
    Trajectory t = small_traj(2, false);
    VTraceConfig cfg;
    cfg.rho_bar = 0.5;
    cfg.c_bar = 1.0;
    CHECK_THROWS_AS(vtrace_targets(t, {1.0, 2.0, 3.0}, {0.5, 0.5}, cfg), Error);
}

TEST_CASE("corrector order does not matter: targets and ratios are disjoint") {
    ActorCriticSpec spec = build_preset("mlp:8", {2}, 2);
    PolicySnapshot snap{1, spec, init_params<float>(spec, 31), 0};
    std::vector<Trajectory> batch = {small_traj(4, false), small_traj(3, true)};

    CorrectedBatch ab = parse_correctors("vtrace:1:1,is:1").apply(batch, snap, 0.99);
    CorrectedBatch ba = parse_correctors("is:1,vtrace:1:1").apply(batch, snap, 0.99);
    REQUIRE(ab.vs.size() == ba.vs.size());
    for (size_t i = 0; i < ab.vs.size(); ++i) {
        CHECK(ab.vs[i] == ba.vs[i]);
        CHECK(ab.rho[i] == ba.rho[i]);
    }
    CHECK(ab.corrected);
}

TEST_CASE("empty chain defaults to n-step returns with unit ratios") {
    ActorCriticSpec spec = build_preset("mlp:8", {2}, 2);
    PolicySnapshot snap{1, spec, init_params<float>(spec, 32), 0};
    Trajectory t = small_traj(3, false);
    CorrectedBatch cb = parse_correctors("").apply({t}, snap, 0.5);
    CHECK(!cb.corrected);
    for (double r : cb.rho[0]) CHECK(r == 1.0);

    // n-step return from the learner's own bootstrap value
    auto v3 = cb.values[0][3];
    double want = 1.0 + 0.5 * 1.0 + 0.25 * 1.0 + 0.125 * v3;
    CHECK(cb.vs[0][0] == doctest::Approx(want));
}

TEST_CASE("corrector grammar round trips and rejects junk") {
    CorrectorChain chain = parse_correctors("vtrace:1:1,is:1");
    CHECK(render_correctors(chain) == "vtrace,is");
    CHECK(parse_correctors(render_correctors(chain)).correctors().size() == 2);
    CHECK_THROWS_AS(parse_correctors("magic:3"), Error);
    CHECK_THROWS_AS(parse_correctors("vtrace:0.5:1"), Error);  // rho_bar < c_bar
}
