#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "accerl/compressor.hpp"
#include "accerl/config.hpp"
#include "accerl/corrector.hpp"
#include "accerl/env.hpp"
#include "accerl/learner.hpp"
#include "accerl/monitor.hpp"
#include "accerl/plan.hpp"

namespace accerl {

// Bounded FIFO of immutable trajectory segments; producers block when
// full, every segment is consumed exactly once.
class ExperienceQueue {
  public:
    explicit ExperienceQueue(size_t capacity = 64);

    bool push(Trajectory t);       // blocks while full; false once closed
    std::optional<Trajectory> pop();  // blocks while empty; nullopt once closed+drained
    std::optional<Trajectory> try_pop();
    void close();
    bool closed() const;
    size_t size() const;
    uint64_t enqueued() const { return enqueued_; }
    uint64_t consumed() const { return consumed_; }

  private:
    mutable std::mutex mu_;
    std::condition_variable cv_push_, cv_pop_;
    std::deque<Trajectory> q_;
    size_t capacity_;
    bool closed_ = false;
    std::atomic<uint64_t> enqueued_{0}, consumed_{0};
};

// Ring buffer of recently observed states, shared by the distiller, the
// quantizer calibration and the monitor's evaluation set.
class ObservationBuffer {
  public:
    explicit ObservationBuffer(size_t capacity = 4096);
    void push(const Tensor& obs);
    // uniform sample (with replacement) from the current contents
    std::vector<Tensor> sample(int count, std::mt19937_64& rng) const;
    size_t size() const;

  private:
    mutable std::mutex mu_;
    std::vector<Tensor> ring_;
    size_t capacity_, next_ = 0;
    bool full_ = false;
};

// Single-writer-per-artifact publication point. Reads hand out complete
// shared_ptr artifacts (no torn reads); plans embed a payload checksum
// that PlanRunner re-verifies.
class PolicyBroker {
  public:
    void publish_snapshot(SnapshotPtr snap);
    void publish_plan(PlanPtr plan);
    SnapshotPtr snapshot() const;
    PlanPtr plan() const;
    uint64_t snapshot_version() const;

    void set_alpha(double a);
    double alpha() const { return alpha_.load(); }
    void enable_alpha_mixing() { alpha_mixing_ = true; }
    bool alpha_mixing_enabled() const { return alpha_mixing_; }

  private:
    mutable std::mutex mu_;
    SnapshotPtr snapshot_;
    PlanPtr plan_;
    std::atomic<double> alpha_{1.0};
    bool alpha_mixing_ = false;
};

// Applies a monitor decision to the live configuration: bits/sparsity
// land in the chain (picked up at the next compile cycle), alpha lands in
// the broker for the actors.
void apply_action(const StrategyAction& action, CompressorChain& chain, PolicyBroker& broker);

// Per-component cumulative timings (ms) and call counts.
struct TimingStats {
    std::atomic<double> env_step_ms{0.0}, actor_inference_ms{0.0};
    std::atomic<double> learner_step_ms{0.0}, compressor_cycle_ms{0.0};
    std::atomic<uint64_t> env_steps{0}, inferences{0}, learner_steps{0}, compressor_cycles{0};

    void add(std::atomic<double>& acc, double ms) {
        double cur = acc.load(std::memory_order_relaxed);
        while (!acc.compare_exchange_weak(cur, cur + ms)) {
        }
    }
    double mean_env_ms() const;
    double mean_infer_ms() const;
    double mean_learner_ms() const;
};

// Human-readable breakdown mirroring the data-collection decomposition:
// env update vs actor inference vs learner, with actor-time fractions.
std::string timing_report(const TimingStats& stats);

struct RunConfig {
    EnvConfig env;
    std::string arch;  // preset name; empty = per-env default
    int na = 12;       // actor workers
    int nd = 4;        // compressor/distiller workers
    LearnerConfig learner;
    std::string compressors;  // chain grammar
    std::string correctors;   // corrector grammar
    std::string monitor;      // strategy grammar
    uint64_t seed = 1;
    int64_t total_steps = 0;
    int64_t eval_interval = 10000;
    int eval_episodes = 5;
    bool deterministic = true;
    std::string out_dir = "out";
    size_t queue_capacity = 64;
    int compile_interval = 8;  // learner versions between compressor cycles
    DistillerConfig distill;
    int calibration_window = 1024;
    double behavior_perturb = 0.0;  // mu = (1-p) pi + p uniform, for bias studies
};

RunConfig make_run_config(const CliConfig& cli);
ActorCriticSpec default_arch(const RunConfig& cfg);

struct RunResult {
    SnapshotPtr final_snapshot;
    std::string metrics_path;
    std::string checkpoint_path;
    std::string summary_path;
    double final_episode_return = 0.0;
    double wall_time_s = 0.0;
    std::string timing_summary;
    std::string error;  // non-empty if a worker failed
    int exit_code = 0;
};

// End-to-end training: NA actors, bounded queue, corrector chain, single
// learner, asynchronous compressor, periodic monitor. Deterministic mode
// replaces the workers with a serialized round-robin scheduler and yields
// byte-identical metrics for identical configs.
RunResult run_train(const RunConfig& cfg);

// Mean/std episodic return over fresh seeded episodes.
struct EvalStats {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> returns;
};
EvalStats evaluate_policy(const PolicySnapshot& snap, const EnvConfig& env_cfg, int episodes,
                          bool greedy, uint64_t seed);

// Rolls one n-step segment with the given artifact; used by both modes.
struct ActorContext {
    std::unique_ptr<Env> env;
    std::mt19937_64 rng;
    Tensor obs;
    bool episode_open = false;
    uint64_t episode_seed = 0;
    double episode_return = 0.0;
    int id = 0;
};

}  // namespace accerl
