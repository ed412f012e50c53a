#pragma once

#include "accerl/adam.hpp"
#include "accerl/corrector.hpp"
#include "accerl/policy.hpp"

namespace accerl {

struct LearnerConfig {
    double lr = 3e-4;
    double gamma = 0.99;
    double entropy_coef = 0.02;
    double value_coef = 0.25;
    int n_steps = 5;
    int batch_size = 160;          // transitions; multiple of n_steps
    double max_grad_norm = 0.0;    // 0 disables clipping

    void validate() const {
        if (lr <= 0 || gamma <= 0 || entropy_coef < 0 || value_coef <= 0 || n_steps < 1 ||
            batch_size < 1)
            throw Error("learner config: values must be positive");
        if (batch_size % n_steps != 0)
            throw Error("learner config: batch_size must be a multiple of n_steps");
    }
};

struct LossTerms {
    double policy_loss = 0.0;
    double value_loss = 0.0;   // mean 1/2 (v_t - V)^2, before value_coef
    double entropy = 0.0;      // mean policy entropy
    double grad_norm = 0.0;
};

// Scalar loss whose gradient realizes the corrected actor-critic update:
//   L = -mean[rho_t log pi(a_t|x_t) A_t] + value_coef mean[1/2 (v_t - V)^2]
//       - entropy_coef mean[H]
// with A_t = r_t + gamma v_{t+1} - V(x_t); A_t and v_t carry no gradient
// (V(x_t) in the advantage is the detached collection-time value).
// Templated so the finite-difference oracle can run in fp64.
template <typename T>
std::pair<LossTerms, GradientsT<T>> compute_losses_t(const CorrectedBatch& batch,
                                                     const ActorCriticSpec& spec,
                                                     const ParametersT<T>& params,
                                                     const LearnerConfig& cfg) {
    int64_t total = 0;
    for (const auto& t : batch.trajectories) total += t.n();
    if (total == 0) throw Error("compute_losses: empty batch");
    const T inv_b = T(1) / static_cast<T>(total);

    LossTerms terms;
    GradientsT<T> grads = zero_params<T>(spec);
    ShapeInfo info = infer_shapes(spec);
    for (size_t i = 0; i < batch.trajectories.size(); ++i) {
        const Trajectory& traj = batch.trajectories[i];
        if (i >= batch.values.size() ||
            batch.values[i].size() != static_cast<size_t>(traj.n()) + 1)
            throw Error("compute_losses: batch.values missing or wrong length");
        for (int t = 0; t < traj.n(); ++t) {
            TensorT<T> obs = tensor_cast<T>(traj.obs[t]);
            auto cache = forward(spec, params, obs);
            std::vector<T> pi = softmax(cache.logits);
            const int a = traj.actions[t];
            const T log_pi = std::log(std::max(pi[a], static_cast<T>(kEpsProb)));
            const T h = entropy(pi);
            const T rho = static_cast<T>(batch.rho[i][t]);
            const T v_target = static_cast<T>(batch.vs[i][t]);
            const T v_next = traj.done[t] ? T(0) : static_cast<T>(batch.vs[i][t + 1]);
            const T adv = static_cast<T>(traj.rewards[t]) + static_cast<T>(cfg.gamma) * v_next -
                          static_cast<T>(batch.values[i][t]);
            const T v_err = cache.value - v_target;

            terms.policy_loss += -static_cast<double>(rho * log_pi * adv);
            terms.value_loss += 0.5 * static_cast<double>(v_err) * static_cast<double>(v_err);
            terms.entropy += static_cast<double>(h);

            std::vector<T> dlogits(pi.size());
            for (size_t j = 0; j < pi.size(); ++j) {
                T d = -rho * adv * ((static_cast<int>(j) == a ? T(1) : T(0)) - pi[j]);
                d += static_cast<T>(cfg.entropy_coef) * pi[j] *
                     (std::log(std::max(pi[j], static_cast<T>(kEpsProb))) + h);
                dlogits[j] = d * inv_b;
            }
            const T dvalue = static_cast<T>(cfg.value_coef) * v_err * inv_b;
            accumulate_backward(spec, params, cache, dlogits, dvalue, info, grads);
        }
    }
    terms.policy_loss /= static_cast<double>(total);
    terms.value_loss /= static_cast<double>(total);
    terms.entropy /= static_cast<double>(total);
    if (!std::isfinite(terms.policy_loss) || !std::isfinite(terms.value_loss))
        throw Error("compute_losses: non-finite loss (batch of " + std::to_string(total) +
                    " transitions)");
    double gn2 = 0.0;
    for (const auto& l : grads.layers) {
        if (!l.present) continue;
        for (T v : l.W.data) gn2 += static_cast<double>(v) * v;
        for (T v : l.b.data) gn2 += static_cast<double>(v) * v;
    }
    terms.grad_norm = std::sqrt(gn2);
    if (cfg.max_grad_norm > 0.0 && terms.grad_norm > cfg.max_grad_norm) {
        const T scale = static_cast<T>(cfg.max_grad_norm / terms.grad_norm);
        for (auto& l : grads.layers) {
            if (!l.present) continue;
            for (T& v : l.W.data) v *= scale;
            for (T& v : l.b.data) v *= scale;
        }
    }
    return {terms, std::move(grads)};
}

using Gradients = GradientsT<float>;

inline std::pair<LossTerms, Gradients> compute_losses(const CorrectedBatch& batch,
                                                      const PolicySnapshot& snapshot,
                                                      const LearnerConfig& cfg) {
    return compute_losses_t<float>(batch, snapshot.spec, snapshot.params, cfg);
}

// Single-writer parameter owner; one Adam step per corrected batch,
// publishing a new immutable snapshot with version + 1.
class Learner {
  public:
    Learner(ActorCriticSpec spec, Parameters params, LearnerConfig cfg);

    SnapshotPtr train_step(const CorrectedBatch& batch, int64_t now_ms = 0);
    SnapshotPtr snapshot() const { return current_; }
    uint64_t version() const { return current_->version; }
    const LossTerms& last_loss() const { return last_loss_; }
    const LearnerConfig& config() const { return cfg_; }

  private:
    LearnerConfig cfg_;
    AdamState adam_;
    SnapshotPtr current_;
    LossTerms last_loss_;
};

}  // namespace accerl
