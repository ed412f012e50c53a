#include <cmath>
#include <random>

#include "accerl/compressor.hpp"
#include "doctest.h"

using namespace accerl;

namespace {

StateSource random_states(int dim, uint64_t seed) {
    auto rng = std::make_shared<std::mt19937_64>(seed);
    return [rng, dim](int count) {
        std::vector<Tensor> out;
        for (int i = 0; i < count; ++i) {
            Tensor x = Tensor::zeros({dim});
            for (float& v : x.data) v = static_cast<float>(uniform01(*rng) * 2.0 - 1.0);
            out.push_back(std::move(x));
        }
        return out;
    };
}

}  // namespace

TEST_CASE("chain enforces stage order and uniqueness") {
    CHECK_THROWS_WITH_AS(parse_chain("quant:8,prune:0.5"), doctest::Contains("order"), Error);
    CHECK_THROWS_WITH_AS(parse_chain("prune:0.5,prune:0.25"), doctest::Contains("already"), Error);
    CHECK_THROWS_AS(parse_chain("prune:1.0"), Error);
    CHECK_THROWS_AS(parse_chain("quant:12"), Error);
    CHECK_THROWS_WITH_AS(parse_chain("zip"), doctest::Contains("unknown"), Error);

    CompressorChain full = parse_chain("prune:0.5,distill,quant:8,fuse,freeze");
    CHECK(full.stages().size() == 5);
    CHECK(parse_chain(render_chain(full)).stages().size() == 5);
    CHECK(parse_chain("").empty());
}

TEST_CASE("live knobs require their stage") {
    CompressorChain chain = parse_chain("quant:8");
    chain.set_bits(16);
    CHECK(chain.bits() == 16);
    CHECK_THROWS_WITH_AS(chain.set_sparsity(0.2f), doctest::Contains("no prune"), Error);

    CompressorChain pr = parse_chain("prune:0.5");
    pr.set_sparsity(0.25f);
    CHECK(pr.sparsity() == 0.25f);
    CHECK_THROWS_WITH_AS(pr.set_bits(8), doctest::Contains("no quant"), Error);
}

TEST_CASE("pruning removes the lowest-norm rows, ties to the lower index") {
    // two rows with identical norm: the lower index goes first
    std::vector<float> norms = {0.5f, 0.1f, 0.5f, 0.9f};
    std::vector<int> kept = prune_keep_indices(norms, 0.5f);  // ceil(0.5*4)=2 removed
    CHECK(kept == std::vector<int>{2, 3});

    // never removes everything
    CHECK(prune_keep_indices({1.0f, 2.0f}, 0.99f) == std::vector<int>{1});
}

TEST_CASE("structured pruning keeps the function on surviving paths") {
    ActorCriticSpec spec = build_preset("mlp:8", {4}, 3);
    PolicySnapshot snap{1, spec, init_params<float>(spec, 21), 0};
    // zero out half the hidden rows so pruning provably removes only them
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            snap.params.layers[0].W.data[static_cast<size_t>(r) * 4 + c] = 0.0f;
    for (int r = 0; r < 4; ++r) snap.params.layers[0].b.data[static_cast<size_t>(r)] = 0.0f;

    PolicySnapshot pruned = prune(snap, 0.5f);
    CHECK(pruned.spec.trunk[0].out_dim == 4);
    CHECK(pruned.spec.action_count == 3);

    // removed units contributed nothing, so outputs are identical
    Tensor x = Tensor::zeros({4});
    x.data = {0.3f, -0.1f, 0.7f, 0.2f};
    auto before = forward(snap.spec, snap.params, x);
    auto after = forward(pruned.spec, pruned.params, x);
    for (size_t a = 0; a < before.logits.size(); ++a)
        CHECK(after.logits[a] == doctest::Approx(before.logits[a]).epsilon(1e-6));
    CHECK(after.value == doctest::Approx(before.value).epsilon(1e-6));
}

TEST_CASE("conv channel pruning keeps shapes consistent") {
    ActorCriticSpec spec = build_preset("Net3", {4, 84, 84}, 6);
    PolicySnapshot snap{1, spec, init_params<float>(spec, 22), 0};
    PolicySnapshot pruned = prune(snap, 0.5f);
    CHECK(pruned.spec.trunk[0].out_ch == 2);
    check_params(pruned.spec, pruned.params);  // throws on any mismatch
    Tensor x = Tensor::zeros({4, 84, 84});
    auto cache = forward(pruned.spec, pruned.params, x);  // must run
    CHECK(cache.logits.size() == 6);
}

TEST_CASE("distillation loss gradient formula agrees with its templated form") {
    ActorCriticSpec spec = build_preset("mlp:6", {4}, 3);
    ParametersT<double> p = params_cast<double>(init_params<float>(spec, 23));
    TensorT<double> x = TensorT<double>::zeros({4});
    x.data = {0.2, -0.4, 0.6, 0.1};
    std::vector<double> tp = {0.6, 0.3, 0.1};

    DistillLoss<double> dl = distill_loss<double>(spec, p, tp, 0.5, x, 0.01);
    // independent loss recomputation
    auto cache = forward(spec, p, x);
    std::vector<double> sp = softmax(cache.logits);
    double want = kl_divergence(tp, sp) + 0.5 * (cache.value - 0.5) * (cache.value - 0.5) -
                  0.01 * entropy(sp);
    CHECK(dl.loss == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("a distillation cycle reduces the loss toward a fixed teacher") {
    ActorCriticSpec tspec = build_preset("mlp:16", {6}, 4);
    PolicySnapshot teacher{5, tspec, init_params<float>(tspec, 24), 0};
    ActorCriticSpec sspec = build_preset("mlp:8", {6}, 4);
    StateSource states = random_states(6, 25);

    DistillerConfig cfg;
    cfg.steps_per_cycle = 1;
    AdamState adam = AdamState::make(sspec, cfg.distill_lr);
    Parameters student = init_params<float>(sspec, 26);
    DistillResult first = distill(teacher, sspec, student, adam, states, cfg, 1);

    cfg.steps_per_cycle = 400;
    DistillResult trained = distill(teacher, sspec, first.params, adam, states, cfg, 2);
    cfg.steps_per_cycle = 1;
    DistillResult after = distill(teacher, sspec, trained.params, adam, states, cfg, 3);
    CHECK(after.mean_loss < first.mean_loss);

    // worker-parallel batches agree with the serial path closely
    DistillerConfig par = cfg;
    par.workers = 4;
    par.steps_per_cycle = 1;
    AdamState a1 = AdamState::make(sspec, cfg.distill_lr), a2 = a1;
    StateSource s1 = random_states(6, 99), s2 = random_states(6, 99);
    DistillResult serial = distill(teacher, sspec, trained.params, a1, s1, cfg, 4);
    DistillResult parallel = distill(teacher, sspec, trained.params, a2, s2, par, 4);
    CHECK(parallel.mean_loss == doctest::Approx(serial.mean_loss).epsilon(1e-4));
}

TEST_CASE("compiler records full provenance in pipeline order") {
    ActorCriticSpec spec = build_preset("mlp:16", {6}, 4);
    auto snap = make_snapshot(spec, init_params<float>(spec, 27), 3);
    DistillerConfig dc;
    CompressorChain chain = parse_chain("prune:0.25,quant:8,fuse,freeze");
    Compressor comp(chain, random_states(6, 28), 29);
    PlanPtr plan = comp.compile(snap);
    CHECK(plan->prov.source_version == 3);
    CHECK(plan->prov.bits == 8);
    CHECK(plan->prov.sparsity == 0.25f);
    CHECK(plan->frozen);
    CHECK(plan->fused);
    CHECK(plan->checksum == plan->compute_checksum());
    CHECK(plan->spec.trunk[0].out_dim == 12);
    CHECK(plan->latency_ms_estimate > 0.0);
}
