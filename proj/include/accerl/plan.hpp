#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "accerl/policy.hpp"

namespace accerl {

enum class OpKind : uint8_t {
    Dense = 0,
    Conv = 1,
    Relu = 2,
    DenseRelu = 3,
    ConvRelu = 4,
    QDense = 5,
    QDenseRelu = 6,
    QConv = 7,
    QConvRelu = 8,
};

bool op_is_quant(OpKind k);
bool op_is_conv(OpKind k);
bool op_is_parametric(OpKind k);

struct PlanOp {
    OpKind kind = OpKind::Dense;
    int in_buf = 0, out_buf = 0;
    // geometry
    int in_dim = 0, out_dim = 0;                       // dense flat sizes
    int in_ch = 0, out_ch = 0, kh = 0, kw = 0, stride = 1;  // conv
    int ih = 0, iw = 0, oh = 0, ow = 0;                // conv spatial dims
    // fp32 weights
    std::vector<float> W, b;
    // quantized weights (int8/int16 lattice stored widened)
    std::vector<int32_t> Wq;
    float w_scale = 0.0f, x_scale = 0.0f;
    int bits = 0;
};

struct Provenance {
    uint64_t source_version = 0;
    std::vector<std::string> stages;
    float sparsity = 0.0f;
    int bits = 0;  // 0 = fp32
};

// Flat, topologically ordered op list with fixed buffer assignments.
// Immutable once published; per-caller scratch lives in PlanRunner.
struct CompiledPolicy {
    ActorCriticSpec spec;  // post-compression network shape
    std::vector<PlanOp> ops;
    std::vector<int> buf_sizes;  // buffer 0 is the input
    int logits_buf = 0, value_buf = 0;
    bool frozen = false;
    bool fused = false;
    Provenance prov;
    double latency_ms_estimate = 0.0;
    uint64_t checksum = 0;  // over payload_bytes(), verified at fetch

    std::vector<uint8_t> payload_bytes() const;
    uint64_t compute_checksum() const;
};

using PlanPtr = std::shared_ptr<const CompiledPolicy>;

// fp32 pass-through plan executing exactly the snapshot's arithmetic.
CompiledPolicy build_plan(const PolicySnapshot& snap);

// Merge every dense->relu / conv->relu adjacent pair into one fused op.
void fuse_plan(CompiledPolicy& plan);

// Mark the plan for preallocated-buffer execution.
void freeze_plan(CompiledPolicy& plan);

struct QuantConfig {
    int bits = 8;  // 8 or 16
    int calibration_window = 1024;
};

// Round-to-nearest, ties away from zero, symmetric per-tensor scale.
struct QuantizedTensor {
    std::vector<int32_t> q;
    float scale = 1.0f;
};
QuantizedTensor quantize_tensor(const std::vector<float>& w, int bits);
int quant_max(int bits);

// Per-tensor weight quantization plus per-layer activation scales from a
// running max over the calibration observations.
void quantize_plan(CompiledPolicy& plan, const std::vector<Tensor>& calibration, int bits);

// Per-caller execution scratch. When the plan is frozen the workspace is
// preallocated here and run() performs no allocation.
class PlanRunner {
  public:
    explicit PlanRunner(PlanPtr plan);

    // Forward through the plan. The returned reference points at internal
    // scratch and stays valid until the next call; no allocation happens
    // on a frozen plan after construction.
    const std::vector<float>& infer(const Tensor& obs);
    double last_value() const { return value_; }
    const std::vector<float>& last_logits() const { return bufs_[plan_->logits_buf]; }

    // convenience copy-out variant
    struct Output {
        std::vector<float> dist;
        std::vector<float> logits;
        double value = 0.0;
    };
    Output run(const Tensor& obs);

    template <typename Rng>
    ActResult act(const Tensor& obs, Rng& rng, bool greedy = false) {
        const std::vector<float>& dist = infer(obs);
        ActResult r;
        r.value = value_;
        r.action = greedy ? argmax_index(dist) : sample_categorical(dist, rng);
        r.mu = std::max(static_cast<double>(dist[r.action]), kEpsProb);
        r.dist = dist;
        return r;
    }

    const CompiledPolicy& plan() const { return *plan_; }

  private:
    void ensure_buffers();
    PlanPtr plan_;
    std::vector<std::vector<float>> bufs_;
    std::vector<int32_t> qscratch_;
    std::vector<float> dist_scratch_;
    double value_ = 0.0;
};

}  // namespace accerl
