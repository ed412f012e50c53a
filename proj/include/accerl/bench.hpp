#pragma once

#include <string>
#include <vector>

#include "accerl/net.hpp"

namespace accerl {

struct BenchRow {
    std::string variant;
    double median_ms = 0.0;
    double p95_ms = 0.0;
    std::vector<double> samples_ms;  // one per iteration, interleaved across variants
};

struct BenchResult {
    std::string preset;
    std::vector<int> input_shape;
    int iterations = 0;
    std::vector<BenchRow> rows;

    double median(const std::string& variant) const;        // throws if absent
    const BenchRow& row(const std::string& variant) const;  // throws if absent
};

// Per-inference latency for the standard execution variants of one preset:
// dynamic fp32 (layer-by-layer with fresh scratch), frozen fp32,
// frozen+fused fp32, and frozen+fused int8/int16. Warmup iterations are
// excluded. extra_chain, if non-empty, adds one variant compiled through
// that chain.
BenchResult run_bench(const std::string& preset, const std::vector<int>& input_shape, int iters,
                      const std::string& extra_chain = "", uint64_t seed = 1);

std::string render_bench(const BenchResult& r);  // table plus host info

}  // namespace accerl
