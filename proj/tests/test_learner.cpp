#include <cmath>
#include <random>

#include "accerl/learner.hpp"
#include "doctest.h"

using namespace accerl;

namespace {

CorrectedBatch random_batch(const ActorCriticSpec& spec, int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    CorrectedBatch batch;
    Trajectory t;
    std::vector<double> vs, rho, pi, values;
    for (int i = 0; i <= n; ++i) {
        Tensor o = Tensor::zeros(spec.input_shape);
        for (float& v : o.data) v = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
        t.obs.push_back(o);
        vs.push_back(uniform01(rng) * 2.0 - 1.0);
        values.push_back(0.0);
    }
    for (int i = 0; i < n; ++i) {
        t.actions.push_back(static_cast<int>(uniform01(rng) * spec.action_count) %
                            spec.action_count);
        t.rewards.push_back(uniform01(rng) * 2.0 - 1.0);
        t.behavior_probs.push_back(0.5);
        t.done.push_back(0);
        rho.push_back(0.25 + 0.75 * uniform01(rng));
        pi.push_back(0.5);
    }
    batch.trajectories.push_back(t);
    batch.vs.push_back(vs);
    batch.rho.push_back(rho);
    batch.pi_probs.push_back(pi);
    batch.values.push_back(values);
    batch.corrected = true;
    return batch;
}

}  // namespace

TEST_CASE("config validation") {
    LearnerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.batch_size = 7;  // not a multiple of n_steps=5
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("multiple"), Error);
    cfg = LearnerConfig{};
    cfg.lr = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("loss gradients match finite differences in fp64") {
    ActorCriticSpec spec = build_preset("mlp:6", {4}, 3);
    ParametersT<double> params = params_cast<double>(init_params<float>(spec, 61));
    CorrectedBatch batch = random_batch(spec, 4, 62);
    LearnerConfig cfg;
    cfg.n_steps = 4;
    cfg.batch_size = 4;

    auto scalar = [&](const ParametersT<double>& p) {
        auto [terms, g] = compute_losses_t<double>(batch, spec, p, cfg);
        return terms.policy_loss + cfg.value_coef * terms.value_loss -
               cfg.entropy_coef * terms.entropy;
    };
    auto [terms, grads] = compute_losses_t<double>(batch, spec, params, cfg);
    CHECK(terms.grad_norm > 0.0);

    const double h = 1e-5;
    for (size_t l = 0; l < params.layers.size(); ++l) {
        if (!params.layers[l].present) continue;
        auto& data = params.layers[l].W.data;
        for (size_t k = 0; k < data.size(); k += 3) {  // sample a third of the weights
            const double orig = data[k];
            data[k] = orig + h;
            const double lp = scalar(params);
            data[k] = orig - h;
            const double lm = scalar(params);
            data[k] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = grads.layers[l].W.data[k];
            CHECK(std::abs(fd - an) <= 1e-4 * std::max({std::abs(fd), std::abs(an), 1e-6}));
        }
    }
}

TEST_CASE("gradient clipping rescales to the cap") {
    ActorCriticSpec spec = build_preset("mlp:6", {4}, 3);
    ParametersT<double> params = params_cast<double>(init_params<float>(spec, 63));
    CorrectedBatch batch = random_batch(spec, 4, 64);
    LearnerConfig cfg;
    cfg.n_steps = 4;
    cfg.batch_size = 4;
    auto [terms, grads] = compute_losses_t<double>(batch, spec, params, cfg);

    LearnerConfig clipped = cfg;
    clipped.max_grad_norm = terms.grad_norm / 2.0;
    auto [cterms, cgrads] = compute_losses_t<double>(batch, spec, params, clipped);
    double norm2 = 0.0;
    for (const auto& l : cgrads.layers) {
        if (!l.present) continue;
        for (double v : l.W.data) norm2 += v * v;
        for (double v : l.b.data) norm2 += v * v;
    }
    CHECK(std::sqrt(norm2) == doctest::Approx(clipped.max_grad_norm).epsilon(1e-9));
}

TEST_CASE("train_step publishes monotonically increasing versions") {
    ActorCriticSpec spec = build_preset("mlp:6", {4}, 3);
    LearnerConfig cfg;
    cfg.n_steps = 4;
    cfg.batch_size = 8;
    Learner learner(spec, init_params<float>(spec, 65), cfg);
    CHECK(learner.version() == 1);

    SnapshotPtr s2 = learner.train_step(random_batch(spec, 4, 66));
    CHECK(s2->version == 2);
    SnapshotPtr s3 = learner.train_step(random_batch(spec, 4, 67));
    CHECK(s3->version == 3);
    CHECK(learner.snapshot() == s3);
    CHECK(s2->params.layers[0].W.data != s3->params.layers[0].W.data);

    CorrectedBatch empty;
    CHECK_THROWS_AS(learner.train_step(empty), Error);
    CorrectedBatch too_big = random_batch(spec, 16, 68);
    CHECK_THROWS_AS(learner.train_step(too_big), Error);
}

TEST_CASE("non-finite inputs are rejected with diagnostics") {
    ActorCriticSpec spec = build_preset("mlp:6", {4}, 3);
    ParametersT<float> params = init_params<float>(spec, 69);
    CorrectedBatch batch = random_batch(spec, 4, 70);
    batch.vs[0][1] = std::numeric_limits<double>::infinity();
    LearnerConfig cfg;
    cfg.n_steps = 4;
    cfg.batch_size = 4;
    CHECK_THROWS_AS((compute_losses_t<float>(batch, spec, params, cfg)), Error);
}
