#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "accerl/adam.hpp"
#include "accerl/plan.hpp"
#include "accerl/policy.hpp"

namespace accerl {

enum class StageKind : uint8_t { Prune = 0, Distill = 1, Quantize = 2, Fuse = 3, Freeze = 4 };

std::string stage_kind_name(StageKind k);

struct PrunerConfig {
    float sparsity = 0.5f;  // in [0,1)
};

struct DistillerConfig {
    float beta = 0.01f;       // entropy strength in the distillation loss
    float distill_lr = 1e-3f;
    int steps_per_cycle = 512;
    int batch_size = 32;
    int teacher_sync_interval = 1;  // learner versions between teacher refreshes
    int workers = 1;  // threads cooperating on each batch (deterministic reduction)
};

struct CompressorStage {
    StageKind kind;
    PrunerConfig prune;
    DistillerConfig distill;
    QuantConfig quant;
};

// Ordered stage list: at most one stage per kind, pipeline order
// prune -> distill -> quantize -> fuse -> freeze enforced.
class CompressorChain {
  public:
    CompressorChain& add(CompressorStage stage);
    const std::vector<CompressorStage>& stages() const { return stages_; }
    bool empty() const { return stages_.empty(); }
    bool has(StageKind k) const;
    CompressorStage& stage(StageKind k);

    // live-reconfigurable knobs (applied between compile cycles)
    void set_sparsity(float s);
    void set_bits(int bits);
    float sparsity() const;
    int bits() const;

  private:
    std::vector<CompressorStage> stages_;
};

// `prune:<sparsity>,distill,quant:<bits>,fuse,freeze`
CompressorChain parse_chain(const std::string& config);
std::string render_chain(const CompressorChain& chain);

// Structured pruning: physically removes the lowest-L2-norm neurons /
// conv channels and the matching downstream columns; heads keep their
// output dims. One-shot, no masks.
PolicySnapshot prune(const PolicySnapshot& snap, float sparsity);

// Indices kept by the pruning criterion, exposed for the sort oracle.
std::vector<int> prune_keep_indices(const std::vector<float>& norms, float sparsity);

using StateSource = std::function<std::vector<Tensor>(int count)>;

// One distillation cycle: steps_per_cycle Adam steps on
// KL(teacher||student) + 1/2 (v_t - v_s)^2 - beta * H(student).
struct DistillResult {
    Parameters params;
    double mean_loss = 0.0;
};
DistillResult distill(const PolicySnapshot& teacher, const ActorCriticSpec& student_spec,
                      Parameters student_params, AdamState& adam, const StateSource& states,
                      const DistillerConfig& cfg, uint64_t seed);

// Distillation loss terms and gradients for one state; templated so the
// finite-difference oracle can run in fp64.
template <typename T>
struct DistillLoss {
    T loss;
    GradientsT<T> grads;
};

template <typename T>
DistillLoss<T> distill_loss(const ActorCriticSpec& student_spec, const ParametersT<T>& student,
                            const std::vector<T>& teacher_probs, T teacher_value,
                            const TensorT<T>& state, T beta) {
    auto cache = forward(student_spec, student, state);
    std::vector<T> ps = softmax(cache.logits);
    T loss = kl_divergence(teacher_probs, ps);
    T dv = cache.value - teacher_value;
    loss += T(0.5) * dv * dv;
    loss -= beta * entropy(ps);
    // d/dlogits of KL(p_t||softmax(z)) = softmax(z) - p_t
    // d/dlogits of -H(softmax(z))      = p_s * (log p_s + H)
    std::vector<T> dlogits(ps.size());
    T h = entropy(ps);
    for (size_t a = 0; a < ps.size(); ++a) {
        T d = ps[a] - teacher_probs[a];
        d += beta * ps[a] * (std::log(std::max(ps[a], static_cast<T>(kEpsProb))) + h);
        dlogits[a] = d;
    }
    DistillLoss<T> out{loss, backward(student_spec, student, cache, dlogits, dv)};
    return out;
}

// Persistent distiller context: student params + optimizer survive across
// compile cycles; the teacher refreshes every teacher_sync_interval
// learner versions (asynchronous distillation contract).
struct DistillerState {
    ActorCriticSpec spec;
    Parameters params;
    AdamState adam;
    SnapshotPtr teacher;  // fixed within a cycle, refreshed on the interval
    uint64_t teacher_version = 0;
    bool initialized = false;
};

// Applies the chain's stages in order and produces an immutable plan with
// full provenance. Runs in the compressor worker, never in the learner.
class Compressor {
  public:
    Compressor(CompressorChain chain, StateSource states, uint64_t seed);

    PlanPtr compile(const SnapshotPtr& snapshot);

    CompressorChain& chain() { return chain_; }
    const CompressorChain& chain() const { return chain_; }
    DistillerState& distiller() { return distiller_; }

  private:
    CompressorChain chain_;
    StateSource states_;
    DistillerState distiller_;
    uint64_t seed_;
    uint64_t cycle_ = 0;
};

}  // namespace accerl
