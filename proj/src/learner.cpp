#include "accerl/learner.hpp"

namespace accerl {

Learner::Learner(ActorCriticSpec spec, Parameters params, LearnerConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    adam_ = AdamState::make(spec, static_cast<float>(cfg_.lr));
    current_ = make_snapshot(std::move(spec), std::move(params), 1);
}

SnapshotPtr Learner::train_step(const CorrectedBatch& batch, int64_t now_ms) {
    // Segments that were flushed at an episode boundary run short, so a
    // batch may carry slightly fewer transitions than the nominal size.
    int64_t total = 0;
    for (const auto& t : batch.trajectories) total += t.n();
    if (total < 1 || total > cfg_.batch_size)
        throw Error("train_step: batch has " + std::to_string(total) + " transitions, expected <= " +
                    std::to_string(cfg_.batch_size));
    auto [terms, grads] = compute_losses(batch, *current_, cfg_);
    last_loss_ = terms;
    Parameters next = adam_step(current_->params, grads, adam_);
    current_ = make_snapshot(current_->spec, std::move(next), current_->version + 1, now_ms);
    return current_;
}

}  // namespace accerl
