#include <cmath>
#include <random>

#include "accerl/monitor.hpp"
#include "accerl/plan.hpp"
#include "doctest.h"

using namespace accerl;

TEST_CASE("threshold strategies fire once and stay quiet afterwards") {
    KlMaxThresholdStrategy kl(14.0, 16);
    IndicatorSample s;
    s.kl_max = 13.99;
    CHECK(std::holds_alternative<NoAction>(kl.observe(s)));
    s.kl_max = 14.01;
    StrategyAction a = kl.observe(s);
    REQUIRE(std::holds_alternative<SetBits>(a));
    CHECK(std::get<SetBits>(a).bits == 16);
    s.kl_max = 100.0;
    CHECK(std::holds_alternative<NoAction>(kl.observe(s)));  // fired already

    RewardGapThresholdStrategy gap(10.0, 0.2f);
    s = IndicatorSample{};
    s.reward_gap = 10.0;  // boundary is not a trigger
    CHECK(std::holds_alternative<NoAction>(gap.observe(s)));
    s.reward_gap = 10.5;
    StrategyAction g = gap.observe(s);
    REQUIRE(std::holds_alternative<SetSparsity>(g));
    CHECK(std::get<SetSparsity>(g).sparsity == 0.2f);
}

TEST_CASE("linear alpha schedule endpoints and clamping") {
    LinearAlphaStrategy lin(14.0);
    CHECK(lin.alpha_for(0.0) == 1.0);
    CHECK(lin.alpha_for(7.0) == 0.5);
    CHECK(lin.alpha_for(14.0) == 0.0);
    CHECK(lin.alpha_for(28.0) == 0.0);   // clamped
    CHECK(lin.alpha_for(-1.0) == 1.0);   // clamped

    IndicatorSample s;
    s.kl_mean = 3.5;
    StrategyAction a = lin.observe(s);
    REQUIRE(std::holds_alternative<SetAlpha>(a));
    CHECK(std::get<SetAlpha>(a).alpha == doctest::Approx(0.75));
}

TEST_CASE("strategy grammar") {
    auto strategies = parse_strategies("klmax:14.0->bits16,gap:10.0->sparsity0.2,linalpha:14.0");
    REQUIRE(strategies.size() == 3);
    CHECK(strategies[0]->name() == "klmax");
    CHECK(strategies[1]->name() == "gap");
    CHECK(strategies[2]->name() == "linalpha");
    CHECK(parse_strategies("").empty());
    CHECK_THROWS_AS(parse_strategies("bogus:1"), Error);
}

TEST_CASE("kl statistics match a two-pass oracle") {
    ActorCriticSpec tspec = build_preset("mlp:8", {4}, 3);
    PolicySnapshot teacher{1, tspec, init_params<float>(tspec, 91), 0};
    // compressed artifact from different weights so the KL is nonzero
    PolicySnapshot other{1, tspec, init_params<float>(tspec, 92), 0};
    CompiledPolicy plan = build_plan(other);
    plan.checksum = plan.compute_checksum();

    std::mt19937_64 rng(93);
    std::vector<Tensor> states;
    for (int i = 0; i < 64; ++i) {
        Tensor x = Tensor::zeros({4});
        for (float& v : x.data) v = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
        states.push_back(x);
    }

    IndicatorSample s;
    kl_statistics(teacher, plan, states, s);

    PlanRunner runner(std::make_shared<CompiledPolicy>(plan));
    std::vector<double> kls;
    double hsum = 0.0;
    for (const Tensor& x : states) {
        auto tc = forward(tspec, teacher.params, x);
        std::vector<float> tp = softmax(tc.logits);
        const std::vector<float>& sp = runner.infer(x);
        kls.push_back(kl_divergence(std::vector<double>(tp.begin(), tp.end()),
                                    std::vector<double>(sp.begin(), sp.end())));
        hsum += entropy(std::vector<double>(tp.begin(), tp.end()));
    }
    double mean = 0.0, maxv = 0.0;
    for (double k : kls) {
        mean += k;
        maxv = std::max(maxv, k);
    }
    mean /= static_cast<double>(kls.size());
    double var = 0.0;
    for (double k : kls) var += (k - mean) * (k - mean);
    var /= static_cast<double>(kls.size() - 1);  // unbiased

    CHECK(s.kl_mean == doctest::Approx(mean).epsilon(1e-9));
    CHECK(s.kl_max == doctest::Approx(maxv).epsilon(1e-9));
    CHECK(s.kl_var == doctest::Approx(var).epsilon(1e-9));
    CHECK(s.entropy_mean == doctest::Approx(hsum / 64.0).epsilon(1e-9));

    CHECK_THROWS_AS(kl_statistics(teacher, plan, {}, s), Error);
}
