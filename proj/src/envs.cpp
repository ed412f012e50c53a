#include "accerl/env.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "accerl/math.hpp"

namespace accerl {

namespace {
void require_live(bool done, int action, int action_count) {
    if (done) throw Error("step() after done; call reset() first");
    if (action < 0 || action >= action_count)
        throw Error("action " + std::to_string(action) + " out of range [0," +
                    std::to_string(action_count) + ")");
}
}  // namespace

// ---------------------------------------------------------------- ChainMDP

ChainMDP::ChainMDP(int n, int max_steps) : n_(n), max_steps_(max_steps) {
    if (n < 2) throw Error("ChainMDP needs at least 2 states");
}

Tensor ChainMDP::one_hot(int s) const {
    Tensor t = Tensor::zeros({n_});
    t.data[s] = 1.0f;
    return t;
}

Tensor ChainMDP::reset(uint64_t) {
    state_ = 0;
    steps_ = 0;
    done_ = false;
    return one_hot(state_);
}

StepResult ChainMDP::step(int action) {
    require_live(done_, action, 2);
    steps_++;
    double reward = 0.0;
    if (action == 1) {
        state_++;
        if (state_ == n_ - 1) {
            reward = 1.0;
            done_ = true;
        }
    } else {
        state_ = std::max(0, state_ - 1);
    }
    if (steps_ >= max_steps_) done_ = true;
    return {one_hot(state_), reward, done_, steps_};
}

// ------------------------------------------------------------ CartPoleLike

CartPoleLike::CartPoleLike(int max_steps) : max_steps_(max_steps) {}

Tensor CartPoleLike::observe() const {
    auto clamp1 = [](double v) { return static_cast<float>(std::clamp(v, -1.0, 1.0)); };
    Tensor t = Tensor::zeros({4});
    t.data[0] = clamp1(x_ / kXLimit);
    t.data[1] = clamp1(xdot_ / 3.0);
    t.data[2] = clamp1(theta_ / kThetaLimit);
    t.data[3] = clamp1(thetadot_ / 3.0);
    return t;
}

Tensor CartPoleLike::reset(uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    x_ = (uniform01(rng) - 0.5) * 0.1;
    xdot_ = (uniform01(rng) - 0.5) * 0.1;
    theta_ = (uniform01(rng) - 0.5) * 0.1;
    thetadot_ = (uniform01(rng) - 0.5) * 0.1;
    steps_ = 0;
    done_ = false;
    return observe();
}

StepResult CartPoleLike::step(int action) {
    require_live(done_, action, 2);
    const double force = action == 1 ? kForceMag : -kForceMag;
    const double total_mass = kMassCart + kMassPole;
    const double pml = kMassPole * kPoleHalfLength;
    const double ct = std::cos(theta_), st = std::sin(theta_);
    const double temp = (force + pml * thetadot_ * thetadot_ * st) / total_mass;
    const double theta_acc =
        (kGravity * st - ct * temp) /
        (kPoleHalfLength * (4.0 / 3.0 - kMassPole * ct * ct / total_mass));
    const double x_acc = temp - pml * theta_acc * ct / total_mass;
    x_ += kDt * xdot_;
    xdot_ += kDt * x_acc;
    theta_ += kDt * thetadot_;
    thetadot_ += kDt * theta_acc;
    steps_++;
    const bool fell = std::abs(x_) > kXLimit || std::abs(theta_) > kThetaLimit;
    done_ = fell || steps_ >= max_steps_;
    return {observe(), 1.0, done_, steps_};
}

// --------------------------------------------------------------- PixelGrid

PixelGrid::PixelGrid(int size, int max_steps) : size_(size), max_steps_(max_steps) {
    if (size < 2) throw Error("PixelGrid needs size >= 2");
}

Tensor PixelGrid::observe() const {
    Tensor t = Tensor::zeros({3, size_, size_});
    t.data[static_cast<size_t>(ar_) * size_ + ac_] = 1.0f;
    t.data[static_cast<size_t>(size_) * size_ + static_cast<size_t>(gr_) * size_ + gc_] = 1.0f;
    return t;
}

Tensor PixelGrid::reset(uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ULL);
    auto cell = [&]() { return static_cast<int>(uniform01(rng) * size_); };
    ar_ = cell();
    ac_ = cell();
    do {
        gr_ = cell();
        gc_ = cell();
    } while (gr_ == ar_ && gc_ == ac_);
    steps_ = 0;
    done_ = false;
    return observe();
}

StepResult PixelGrid::step(int action) {
    require_live(done_, action, 4);
    static constexpr int dr[4] = {-1, 1, 0, 0};
    static constexpr int dc[4] = {0, 0, -1, 1};
    ar_ = std::clamp(ar_ + dr[action], 0, size_ - 1);
    ac_ = std::clamp(ac_ + dc[action], 0, size_ - 1);
    steps_++;
    double reward = 0.0;
    if (ar_ == gr_ && ac_ == gc_) {
        reward = 1.0;
        done_ = true;
    }
    if (steps_ >= max_steps_) done_ = true;
    return {observe(), reward, done_, steps_};
}

// ----------------------------------------------------------------- oracles

std::vector<double> optimal_values(const Env& env, double gamma) {
    const auto* chain = dynamic_cast<const ChainMDP*>(&env);
    if (!chain) throw Error("optimal_values: only supported for ChainMDP");
    const int n = chain->n();
    std::vector<double> v(n);
    for (int i = 0; i < n - 1; ++i) v[i] = std::pow(gamma, n - 2 - i);
    v[n - 1] = 0.0;  // terminal
    return v;
}

std::vector<double> chain_value_iteration(int n, double gamma, const std::vector<double>& p_right,
                                          int max_steps) {
    // Finite-horizon value iteration with the standard TD convention
    // V(s) = E[r + gamma V(s')], matching the learner's bootstrapped
    // targets; the optimal policy yields exactly gamma^(N-2-s).
    std::vector<double> v(static_cast<size_t>(n), 0.0);
    std::vector<double> next(v);
    for (int h = 0; h < max_steps; ++h) {
        for (int s = 0; s < n - 1; ++s) {
            double pr = p_right[s];
            double right = (s + 1 == n - 1) ? 1.0 : gamma * v[s + 1];
            double left = gamma * v[std::max(0, s - 1)];
            next[s] = pr * right + (1.0 - pr) * left;
        }
        next[n - 1] = 0.0;  // terminal
        v = next;
    }
    return v;
}

std::unique_ptr<Env> make_env(const EnvConfig& cfg) {
    if (cfg.kind == "chain") return std::make_unique<ChainMDP>(cfg.chain_n, cfg.chain_max_steps);
    if (cfg.kind == "cartpole") return std::make_unique<CartPoleLike>(cfg.cartpole_max_steps);
    if (cfg.kind == "pixelgrid") return std::make_unique<PixelGrid>(cfg.grid_size, cfg.grid_max_steps);
    throw Error("unknown env '" + cfg.kind + "' (expected chain|cartpole|pixelgrid)");
}

}  // namespace accerl
