#include "accerl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <memory>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include "accerl/compressor.hpp"
#include "accerl/plan.hpp"
#include "accerl/policy.hpp"

namespace accerl {

namespace {

using Clock = std::chrono::steady_clock;

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    size_t idx = static_cast<size_t>(p * static_cast<double>(v.size() - 1) + 0.5);
    return v[std::min(idx, v.size() - 1)];
}

struct Variant {
    std::string name;
    std::function<void(const Tensor&)> infer;
    std::vector<double> samples;
};

// Interleaves the variants so clock drift and scheduler noise hit them all
// equally; timing each variant in its own block biases whichever runs first.
std::vector<BenchRow> time_variants(std::vector<Variant>& variants, int iters,
                                    const std::vector<Tensor>& inputs) {
    const int warmup = std::max(3, iters / 10);
    for (auto& v : variants) {
        for (int i = 0; i < warmup; ++i) v.infer(inputs[static_cast<size_t>(i) % inputs.size()]);
        v.samples.reserve(static_cast<size_t>(iters));
    }
    for (int i = 0; i < iters; ++i) {
        const Tensor& x = inputs[static_cast<size_t>(i) % inputs.size()];
        for (auto& v : variants) {
            auto t0 = Clock::now();
            v.infer(x);
            v.samples.push_back(
                std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
        }
    }
    std::vector<BenchRow> rows;
    for (auto& v : variants)
        rows.push_back(
            {v.name, percentile(v.samples, 0.5), percentile(v.samples, 0.95), v.samples});
    return rows;
}

PlanPtr make_variant_plan(const PolicySnapshot& snap, const std::vector<Tensor>& calib, int bits,
                          bool fuse, bool freeze) {
    CompiledPolicy plan = build_plan(snap);
    if (bits > 0) quantize_plan(plan, calib, bits);
    if (fuse) fuse_plan(plan);
    if (freeze) freeze_plan(plan);
    plan.checksum = plan.compute_checksum();
    return std::make_shared<CompiledPolicy>(std::move(plan));
}

}  // namespace

double BenchResult::median(const std::string& variant) const { return row(variant).median_ms; }

const BenchRow& BenchResult::row(const std::string& variant) const {
    for (const auto& r : rows)
        if (r.variant == variant) return r;
    throw Error("bench result has no variant '" + variant + "'");
}

BenchResult run_bench(const std::string& preset, const std::vector<int>& input_shape, int iters,
                      const std::string& extra_chain, uint64_t seed) {
    BenchResult result;
    result.preset = preset;
    result.input_shape = input_shape;
    result.iterations = iters;
    if (iters <= 0) return result;

    const int actions = 6;
    ActorCriticSpec spec = build_preset(preset, input_shape, actions);
    Parameters params = init_params<float>(spec, seed);
    PolicySnapshot snap{1, spec, params, 0};

    std::mt19937_64 rng(seed ^ 0x5eedull);
    std::vector<Tensor> inputs;
    for (int i = 0; i < 16; ++i) {
        Tensor x = Tensor::zeros(input_shape);
        for (float& v : x.data) v = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
        inputs.push_back(std::move(x));
    }
    const std::vector<Tensor> calib(inputs.begin(), inputs.begin() + 8);

    std::vector<Variant> variants;
    variants.push_back(
        {"dynamic_fp32", [&](const Tensor& x) { (void)forward(spec, params, x); }, {}});

    std::vector<std::unique_ptr<PlanRunner>> runners;
    auto plan_variant = [&](const std::string& name, PlanPtr plan) {
        runners.push_back(std::make_unique<PlanRunner>(std::move(plan)));
        PlanRunner* r = runners.back().get();
        variants.push_back({name, [r](const Tensor& x) { r->infer(x); }, {}});
    };
    plan_variant("frozen_fp32", make_variant_plan(snap, calib, 0, false, true));
    plan_variant("frozen_fused_fp32", make_variant_plan(snap, calib, 0, true, true));
    plan_variant("frozen_fused_int8", make_variant_plan(snap, calib, 8, true, true));
    plan_variant("frozen_fused_int16", make_variant_plan(snap, calib, 16, true, true));

    if (!extra_chain.empty()) {
        std::mt19937_64 crng(seed ^ 0xc0deull);
        StateSource states = [&calib, &crng](int count) {
            std::vector<Tensor> out;
            for (int i = 0; i < count; ++i)
                out.push_back(calib[static_cast<size_t>(uniform01(crng) *
                                                        static_cast<double>(calib.size())) %
                                    calib.size()]);
            return out;
        };
        Compressor comp(parse_chain(extra_chain), states, seed);
        plan_variant("chain[" + extra_chain + "]",
                     comp.compile(std::make_shared<PolicySnapshot>(snap)));
    }

    result.rows = time_variants(variants, iters, inputs);
    return result;
}

std::string render_bench(const BenchResult& r) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os << "preset=" << r.preset << " input=";
    for (size_t i = 0; i < r.input_shape.size(); ++i) os << (i ? "x" : "") << r.input_shape[i];
    os << " iters=" << r.iterations
       << " host_threads=" << std::thread::hardware_concurrency() << "\n";
    if (r.rows.empty()) return os.str();
    os << std::setprecision(4) << std::left << std::setw(26) << "variant" << std::right
       << std::setw(12) << "median_ms" << std::setw(12) << "p95_ms" << "\n";
    for (const auto& row : r.rows)
        os << std::left << std::setw(26) << row.variant << std::right << std::setw(12)
           << row.median_ms << std::setw(12) << row.p95_ms << "\n";
    return os.str();
}

}  // namespace accerl
