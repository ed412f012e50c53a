#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "accerl/net.hpp"

namespace accerl {

// Immutable, versioned full-precision actor-critic parameters published
// by the learner. Shared across workers via shared_ptr.
struct PolicySnapshot {
    uint64_t version = 0;
    ActorCriticSpec spec;
    Parameters params;
    int64_t created_at_ms = 0;  // wall clock; 0 in deterministic mode
};

using SnapshotPtr = std::shared_ptr<const PolicySnapshot>;

SnapshotPtr make_snapshot(ActorCriticSpec spec, Parameters params, uint64_t version,
                          int64_t created_at_ms = 0);

// Table-4 style presets (Original/Net1/Net2/Net3) for CxHxW inputs, plus
// an "mlp:<hidden>" preset for vector observations. Conv strides default
// to (4,2,1); the preset tables give only filter counts and sizes.
ActorCriticSpec build_preset(const std::string& name, const std::vector<int>& input_shape,
                             int action_count, const std::vector<int>& strides = {});

struct ActResult {
    int action = 0;
    double mu = 0.0;  // recorded behavior probability of the sampled action
    std::vector<float> dist;
    double value = 0.0;
};

// Samples an action from the softmax distribution using the caller's RNG
// stream. Probabilities are floored at kEpsProb so mu is never 0.
template <typename Rng>
ActResult act(const ActorCriticSpec& spec, const Parameters& params, const Tensor& obs, Rng& rng,
              bool greedy = false) {
    auto cache = forward(spec, params, obs);
    ActResult r;
    r.dist = softmax(cache.logits);
    r.value = cache.value;
    r.action = greedy ? argmax_index(r.dist) : sample_categorical(r.dist, rng);
    r.mu = std::max(static_cast<double>(r.dist[r.action]), kEpsProb);
    return r;
}

// Binary checkpoint: magic "ACRL", format version, spec descriptor,
// little-endian fp32 tensor payloads in layer order.
void save_snapshot(const PolicySnapshot& snap, const std::string& path);
PolicySnapshot load_snapshot(const std::string& path);

}  // namespace accerl
