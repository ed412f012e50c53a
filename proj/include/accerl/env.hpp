#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "accerl/tensor.hpp"

namespace accerl {

struct StepResult {
    Tensor obs;
    double reward = 0.0;
    bool done = false;
    int step = 0;  // steps since reset
};

// Deterministic toy environment: (seed, action sequence) fully determines
// observations and rewards. One instance per actor worker, never shared.
class Env {
  public:
    virtual ~Env() = default;
    virtual Tensor reset(uint64_t seed) = 0;
    virtual StepResult step(int action) = 0;
    virtual int action_count() const = 0;
    virtual std::vector<int> observation_shape() const = 0;
    virtual std::string name() const = 0;
};

// Linear chain of N states; actions {0: left, 1: right}; reward 1 for
// reaching the last state. One-hot observations.
class ChainMDP : public Env {
  public:
    explicit ChainMDP(int n = 10, int max_steps = 100);
    Tensor reset(uint64_t seed) override;
    StepResult step(int action) override;
    int action_count() const override { return 2; }
    std::vector<int> observation_shape() const override { return {n_}; }
    std::string name() const override { return "chain"; }
    int n() const { return n_; }
    int state() const { return state_; }

  private:
    Tensor one_hot(int s) const;
    int n_, max_steps_;
    int state_ = 0, steps_ = 0;
    bool done_ = true;
};

// Pole balancing with Euler integration at dt=0.02 and the classic
// constants; 2 actions (push left/right), reward 1 per step, cap 200.
class CartPoleLike : public Env {
  public:
    explicit CartPoleLike(int max_steps = 200);
    Tensor reset(uint64_t seed) override;
    StepResult step(int action) override;
    int action_count() const override { return 2; }
    std::vector<int> observation_shape() const override { return {4}; }
    std::string name() const override { return "cartpole"; }

    // dynamics constants, public so tests can integrate independently
    static constexpr double kGravity = 9.8;
    static constexpr double kMassCart = 1.0;
    static constexpr double kMassPole = 0.1;
    static constexpr double kPoleHalfLength = 0.5;
    static constexpr double kForceMag = 10.0;
    static constexpr double kDt = 0.02;
    static constexpr double kXLimit = 2.4;
    static constexpr double kThetaLimit = 12.0 * 3.14159265358979323846 / 180.0;

  private:
    Tensor observe() const;
    int max_steps_;
    double x_ = 0, xdot_ = 0, theta_ = 0, thetadot_ = 0;
    int steps_ = 0;
    bool done_ = true;
};

// 3-channel HxW grid; channel 0 agent, channel 1 goal, channel 2 zero.
// 4 move actions, reward 1 at the goal, step cap 64.
class PixelGrid : public Env {
  public:
    explicit PixelGrid(int size = 8, int max_steps = 64);
    Tensor reset(uint64_t seed) override;
    StepResult step(int action) override;
    int action_count() const override { return 4; }
    std::vector<int> observation_shape() const override { return {3, size_, size_}; }
    std::string name() const override { return "pixelgrid"; }

  private:
    Tensor observe() const;
    int size_, max_steps_;
    int ar_ = 0, ac_ = 0, gr_ = 0, gc_ = 0;
    int steps_ = 0;
    bool done_ = true;
};

// V*(s_i) = gamma^(N-1-i) under the optimal always-right policy.
std::vector<double> optimal_values(const Env& env, double gamma);

// Exact value iteration on ChainMDP's explicit transition table for a
// fixed behavior policy pi(right|s); used as a test oracle.
std::vector<double> chain_value_iteration(int n, double gamma, const std::vector<double>& p_right,
                                          int max_steps = 100);

struct EnvConfig {
    std::string kind = "chain";  // chain | cartpole | pixelgrid
    int chain_n = 10;
    int chain_max_steps = 100;
    int cartpole_max_steps = 200;
    int grid_size = 8;
    int grid_max_steps = 64;
};

std::unique_ptr<Env> make_env(const EnvConfig& cfg);

}  // namespace accerl
