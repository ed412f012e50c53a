#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "accerl/env.hpp"
#include "accerl/plan.hpp"
#include "accerl/policy.hpp"

namespace accerl {

// Periodic training-health reading over an evaluation state set.
struct IndicatorSample {
    int64_t step = 0;
    double wall_time_s = 0.0;
    double kl_mean = 0.0, kl_max = 0.0, kl_var = 0.0;
    double entropy_mean = 0.0;
    double reward_original = 0.0, reward_compressed = 0.0;
    double reward_gap = 0.0;
};

struct SetBits {
    int bits = 16;
};
struct SetSparsity {
    float sparsity = 0.2f;
};
struct SetAlpha {
    double alpha = 1.0;
};
struct NoAction {};
using StrategyAction = std::variant<NoAction, SetBits, SetSparsity, SetAlpha>;

std::string action_name(const StrategyAction& a);

// IndicatorSample -> StrategyAction map; the built-in ones below realize
// the threshold switches and the linear alpha schedule. Custom strategies
// plug in through the same interface.
class Strategy {
  public:
    virtual ~Strategy() = default;
    virtual std::string name() const = 0;
    virtual StrategyAction observe(const IndicatorSample& sample) = 0;
};

// Emits SetBits(16) once, on the first sample with kl_max > epsilon.
class KlMaxThresholdStrategy : public Strategy {
  public:
    explicit KlMaxThresholdStrategy(double epsilon = 14.0, int target_bits = 16,
                                    bool rearm = false);
    std::string name() const override { return "klmax"; }
    StrategyAction observe(const IndicatorSample& sample) override;

  private:
    double epsilon_;
    int target_bits_;
    bool rearm_;
    bool fired_ = false;
};

// Emits SetSparsity(target) once, on the first sample with
// reward_gap > delta.
class RewardGapThresholdStrategy : public Strategy {
  public:
    explicit RewardGapThresholdStrategy(double delta = 10.0, float target_sparsity = 0.2f,
                                        bool rearm = false);
    std::string name() const override { return "gap"; }
    StrategyAction observe(const IndicatorSample& sample) override;

  private:
    double delta_;
    float target_sparsity_;
    bool rearm_;
    bool fired_ = false;
};

// alpha = clamp(1 - kl_mean / kl_ref, 0, 1), emitted on every sample.
class LinearAlphaStrategy : public Strategy {
  public:
    explicit LinearAlphaStrategy(double kl_ref = 14.0);
    std::string name() const override { return "linalpha"; }
    StrategyAction observe(const IndicatorSample& sample) override;
    double alpha_for(double kl_mean) const;

  private:
    double kl_ref_;
};

// `klmax:14.0->bits16`, `gap:10.0->sparsity0.2`, `linalpha:14.0`,
// comma-separated for several independent strategies.
std::vector<std::shared_ptr<Strategy>> parse_strategies(const std::string& config);

// KL statistics (mean/max/unbiased variance) of KL(teacher || compressed)
// over eval_states, plus greedy-rollout mean returns for both policies.
IndicatorSample compute_indicators(const PolicySnapshot& teacher, const CompiledPolicy& compressed,
                                   const std::vector<Tensor>& eval_states,
                                   const std::function<std::unique_ptr<Env>()>& env_factory,
                                   int eval_episodes, uint64_t eval_seed);

// KL statistics only (no rollouts); used on synthetic state sets.
void kl_statistics(const PolicySnapshot& teacher, const CompiledPolicy& compressed,
                   const std::vector<Tensor>& eval_states, IndicatorSample& out);

}  // namespace accerl
