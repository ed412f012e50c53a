#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "accerl/plan.hpp"
#include "accerl/policy.hpp"
#include "doctest.h"

using namespace accerl;

namespace {

int64_t param_count(const ActorCriticSpec& spec) {
    Parameters p = zero_params<float>(spec);
    int64_t n = 0;
    for (const auto& l : p.layers)
        if (l.present) n += l.W.numel() + l.b.numel();
    return n;
}

std::filesystem::path tmp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("presets shrink strictly in parameter count") {
    std::vector<int64_t> counts;
    for (const char* name : {"Original", "Net1", "Net2", "Net3"})
        counts.push_back(param_count(build_preset(name, {4, 84, 84}, 6)));
    for (size_t i = 1; i < counts.size(); ++i) CHECK(counts[i] < counts[i - 1]);

    ActorCriticSpec orig = build_preset("Original", {4, 84, 84}, 6);
    CHECK(orig.trunk[0].out_ch == 32);
    CHECK(orig.trunk[0].kh == 8);
    CHECK(orig.trunk_out_dim == 2048);
}

TEST_CASE("act records a usable behavior probability") {
    ActorCriticSpec spec = build_preset("mlp:8", {4}, 3);
    Parameters p = init_params<float>(spec, 1);
    Tensor obs = Tensor::zeros({4});
    obs.data = {0.1f, -0.2f, 0.3f, 0.4f};
    std::mt19937_64 rng(2);
    ActResult r = act(spec, p, obs, rng);
    CHECK(r.mu > 0.0);
    CHECK(r.mu <= 1.0);
    CHECK(r.dist.size() == 3);

    ActResult g = act(spec, p, obs, rng, true);
    CHECK(g.action == argmax_index(g.dist));
}

TEST_CASE("checkpoint round trip preserves everything") {
    ActorCriticSpec spec = build_preset("Net3", {4, 84, 84}, 6);
    PolicySnapshot snap{42, spec, init_params<float>(spec, 3), 12345};
    auto path = tmp_file("accerl_ckpt_roundtrip.bin");
    save_snapshot(snap, path.string());
    PolicySnapshot back = load_snapshot(path.string());
    CHECK(back.version == 42);
    CHECK(back.spec == spec);
    for (size_t l = 0; l < snap.params.layers.size(); ++l) {
        CHECK(back.params.layers[l].W.data == snap.params.layers[l].W.data);
        CHECK(back.params.layers[l].b.data == snap.params.layers[l].b.data);
    }
}

TEST_CASE("checkpoint loader distinguishes magic, version and truncation") {
    ActorCriticSpec spec = build_preset("mlp:4", {3}, 2);
    PolicySnapshot snap{1, spec, init_params<float>(spec, 4), 0};
    auto path = tmp_file("accerl_ckpt_corrupt.bin");
    save_snapshot(snap, path.string());

    auto mutate = [&](size_t offset, char value) {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(static_cast<std::streamoff>(offset));
        f.put(value);
    };
    mutate(0, 'X');
    CHECK_THROWS_WITH_AS(load_snapshot(path.string()), doctest::Contains("magic"), Error);

    save_snapshot(snap, path.string());
    mutate(4, 99);  // format version field
    CHECK_THROWS_WITH_AS(load_snapshot(path.string()), doctest::Contains("version"), Error);

    save_snapshot(snap, path.string());
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 7);
    CHECK_THROWS_WITH_AS(load_snapshot(path.string()), doctest::Contains("truncated"), Error);

    CHECK_THROWS_AS(load_snapshot("/nonexistent/nope.ckpt"), Error);
}

TEST_CASE("plan executes exactly the snapshot arithmetic") {
    ActorCriticSpec spec = build_preset("mlp:16", {8}, 4);
    Parameters params = init_params<float>(spec, 6);
    PolicySnapshot snap{1, spec, params, 0};
    CompiledPolicy plan = build_plan(snap);
    plan.checksum = plan.compute_checksum();
    PlanRunner runner(std::make_shared<CompiledPolicy>(plan));

    std::mt19937_64 rng(7);
    for (int i = 0; i < 50; ++i) {
        Tensor x = Tensor::zeros({8});
        for (float& v : x.data) v = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
        auto cache = forward(spec, params, x);
        const std::vector<float>& dist = runner.infer(x);
        std::vector<float> want = softmax(cache.logits);
        for (size_t a = 0; a < want.size(); ++a) CHECK(dist[a] == want[a]);
        CHECK(runner.last_value() == doctest::Approx(cache.value));
    }
}

TEST_CASE("fusion merges every layer+relu pair") {
    ActorCriticSpec spec = build_preset("Net3", {4, 84, 84}, 6);
    PolicySnapshot snap{1, spec, init_params<float>(spec, 8), 0};
    CompiledPolicy plan = build_plan(snap);
    const size_t before = plan.ops.size();
    size_t relus = 0;
    for (const auto& op : plan.ops)
        if (op.kind == OpKind::Relu) relus++;
    fuse_plan(plan);
    CHECK(plan.fused);
    CHECK(plan.ops.size() == before - relus);
    for (const auto& op : plan.ops) CHECK(op.kind != OpKind::Relu);
}

TEST_CASE("frozen plan reuses its scratch buffers across calls") {
    ActorCriticSpec spec = build_preset("mlp:16", {8}, 4);
    PolicySnapshot snap{1, spec, init_params<float>(spec, 9), 0};
    CompiledPolicy plan = build_plan(snap);
    freeze_plan(plan);
    plan.checksum = plan.compute_checksum();
    PlanRunner runner(std::make_shared<CompiledPolicy>(plan));
    Tensor x = Tensor::zeros({8});
    const std::vector<float>* first = &runner.infer(x);
    const float* data = first->data();
    for (int i = 0; i < 100; ++i) {
        const std::vector<float>& out = runner.infer(x);
        CHECK(&out == first);          // same vector object
        CHECK(out.data() == data);     // no reallocation
    }
}

TEST_CASE("quantizer hand values and round-trip bound") {
    // max|w| = 1.27 at 8 bits -> scale = 1.27/127 = 0.01
    std::vector<float> w = {1.27f, -0.005f, 0.004f, 0.0f};
    QuantizedTensor qt = quantize_tensor(w, 8);
    CHECK(qt.scale == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(qt.q[0] == 127);
    CHECK(qt.q[1] == -1);  // -0.5 rounds away from zero
    CHECK(qt.q[2] == 0);   // 0.4 rounds to nearest
    CHECK(qt.q[3] == 0);

    CHECK(quant_max(8) == 127);
    CHECK(quant_max(16) == 32767);
    CHECK_THROWS_AS(quant_max(7), Error);

    std::mt19937_64 rng(10);
    std::vector<float> big(1000);
    for (float& v : big) v = static_cast<float>(uniform01(rng) * 4.0 - 2.0);
    for (int bits : {8, 16}) {
        QuantizedTensor q = quantize_tensor(big, bits);
        for (size_t i = 0; i < big.size(); ++i)
            CHECK(std::abs(static_cast<double>(q.q[i]) * q.scale - big[i]) <=
                  q.scale / 2.0 + 1e-12);
    }
}

TEST_CASE("quantized plan stays close to fp32 and detects tampering") {
    ActorCriticSpec spec = build_preset("mlp:32", {16}, 5);
    Parameters params = init_params<float>(spec, 11);
    PolicySnapshot snap{1, spec, params, 0};

    std::mt19937_64 rng(12);
    std::vector<Tensor> calib;
    for (int i = 0; i < 32; ++i) {
        Tensor x = Tensor::zeros({16});
        for (float& v : x.data) v = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
        calib.push_back(x);
    }
    CompiledPolicy plan = build_plan(snap);
    quantize_plan(plan, calib, 8);
    plan.checksum = plan.compute_checksum();
    CHECK(plan.prov.bits == 8);
    PlanRunner runner(std::make_shared<CompiledPolicy>(plan));
    double worst = 0.0;
    for (const Tensor& x : calib) {
        auto cache = forward(spec, params, x);
        std::vector<float> want = softmax(cache.logits);
        const std::vector<float>& got = runner.infer(x);
        for (size_t a = 0; a < want.size(); ++a)
            worst = std::max(worst, static_cast<double>(std::abs(got[a] - want[a])));
    }
    CHECK(worst < 0.05);  // int8 distribution drift stays small

    CompiledPolicy torn = build_plan(snap);
    torn.checksum = torn.compute_checksum();
    torn.ops[0].W[0] += 1.0f;  // corrupt after checksumming
    CHECK_THROWS_WITH_AS(PlanRunner(std::make_shared<CompiledPolicy>(torn)),
                         doctest::Contains("torn"), Error);
}
