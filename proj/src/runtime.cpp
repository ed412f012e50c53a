#include "accerl/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace accerl {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t base, uint64_t stream, uint64_t index) {
    return splitmix64(splitmix64(base ^ (stream * 0x9e3779b97f4a7c15ull)) + index);
}

}  // namespace

// --------------------------------------------------------- ExperienceQueue

ExperienceQueue::ExperienceQueue(size_t capacity) : capacity_(std::max<size_t>(1, capacity)) {}

bool ExperienceQueue::push(Trajectory t) {
    std::unique_lock<std::mutex> lk(mu_);
    cv_push_.wait(lk, [&] { return q_.size() < capacity_ || closed_; });
    if (closed_) return false;
    q_.push_back(std::move(t));
    enqueued_++;
    cv_pop_.notify_one();
    return true;
}

std::optional<Trajectory> ExperienceQueue::pop() {
    std::unique_lock<std::mutex> lk(mu_);
    cv_pop_.wait(lk, [&] { return !q_.empty() || closed_; });
    if (q_.empty()) return std::nullopt;
    Trajectory t = std::move(q_.front());
    q_.pop_front();
    consumed_++;
    cv_push_.notify_one();
    return t;
}

std::optional<Trajectory> ExperienceQueue::try_pop() {
    std::lock_guard<std::mutex> lk(mu_);
    if (q_.empty()) return std::nullopt;
    Trajectory t = std::move(q_.front());
    q_.pop_front();
    consumed_++;
    cv_push_.notify_one();
    return t;
}

void ExperienceQueue::close() {
    std::lock_guard<std::mutex> lk(mu_);
    closed_ = true;
    cv_push_.notify_all();
    cv_pop_.notify_all();
}

bool ExperienceQueue::closed() const {
    std::lock_guard<std::mutex> lk(mu_);
    return closed_;
}

size_t ExperienceQueue::size() const {
    std::lock_guard<std::mutex> lk(mu_);
    return q_.size();
}

// ------------------------------------------------------- ObservationBuffer

ObservationBuffer::ObservationBuffer(size_t capacity) : capacity_(std::max<size_t>(1, capacity)) {
    ring_.reserve(capacity_);
}

void ObservationBuffer::push(const Tensor& obs) {
    std::lock_guard<std::mutex> lk(mu_);
    if (ring_.size() < capacity_) {
        ring_.push_back(obs);
        if (ring_.size() == capacity_) full_ = true;
    } else {
        ring_[next_] = obs;
        next_ = (next_ + 1) % capacity_;
    }
}

std::vector<Tensor> ObservationBuffer::sample(int count, std::mt19937_64& rng) const {
    std::lock_guard<std::mutex> lk(mu_);
    if (ring_.empty()) throw Error("observation buffer: sample from empty buffer");
    std::vector<Tensor> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        size_t idx = static_cast<size_t>(uniform01(rng) * static_cast<double>(ring_.size()));
        if (idx >= ring_.size()) idx = ring_.size() - 1;
        out.push_back(ring_[idx]);
    }
    return out;
}

size_t ObservationBuffer::size() const {
    std::lock_guard<std::mutex> lk(mu_);
    return ring_.size();
}

// ------------------------------------------------------------ PolicyBroker

void PolicyBroker::publish_snapshot(SnapshotPtr snap) {
    std::lock_guard<std::mutex> lk(mu_);
    snapshot_ = std::move(snap);
}

void PolicyBroker::publish_plan(PlanPtr plan) {
    if (plan && plan->checksum != plan->compute_checksum())
        throw Error("broker: refusing to publish plan with stale checksum");
    std::lock_guard<std::mutex> lk(mu_);
    plan_ = std::move(plan);
}

SnapshotPtr PolicyBroker::snapshot() const {
    std::lock_guard<std::mutex> lk(mu_);
    return snapshot_;
}

PlanPtr PolicyBroker::plan() const {
    std::lock_guard<std::mutex> lk(mu_);
    return plan_;
}

uint64_t PolicyBroker::snapshot_version() const {
    std::lock_guard<std::mutex> lk(mu_);
    return snapshot_ ? snapshot_->version : 0;
}

void PolicyBroker::set_alpha(double a) { alpha_.store(std::clamp(a, 0.0, 1.0)); }

// ------------------------------------------------------------- apply_action

void apply_action(const StrategyAction& action, CompressorChain& chain, PolicyBroker& broker) {
    if (std::holds_alternative<NoAction>(action)) return;
    if (const auto* sb = std::get_if<SetBits>(&action)) {
        if (!chain.has(StageKind::Quantize))
            throw Error("monitor action set-bits: chain has no quantize stage");
        chain.set_bits(sb->bits);
        return;
    }
    if (const auto* ss = std::get_if<SetSparsity>(&action)) {
        if (!chain.has(StageKind::Prune))
            throw Error("monitor action set-sparsity: chain has no prune stage");
        chain.set_sparsity(ss->sparsity);
        return;
    }
    const auto& sa = std::get<SetAlpha>(action);
    if (!broker.alpha_mixing_enabled())
        throw Error("monitor action set-alpha: alpha mixing is not enabled");
    broker.set_alpha(sa.alpha);
}

// -------------------------------------------------------------- TimingStats

double TimingStats::mean_env_ms() const {
    uint64_t n = env_steps.load();
    return n ? env_step_ms.load() / static_cast<double>(n) : 0.0;
}

double TimingStats::mean_infer_ms() const {
    uint64_t n = inferences.load();
    return n ? actor_inference_ms.load() / static_cast<double>(n) : 0.0;
}

double TimingStats::mean_learner_ms() const {
    uint64_t n = learner_steps.load();
    return n ? learner_step_ms.load() / static_cast<double>(n) : 0.0;
}

std::string timing_report(const TimingStats& stats) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os << std::setprecision(4);
    const double env = stats.mean_env_ms();
    const double inf = stats.mean_infer_ms();
    const double actor_total = env + inf;
    os << "component        calls        mean_ms   actor_share\n";
    auto row = [&os](const char* name, uint64_t calls, double mean, double share) {
        os << std::left << std::setw(16) << name << std::right << std::setw(10) << calls
           << std::setw(14) << mean << std::setw(13);
        if (share >= 0.0)
            os << share * 100.0;
        else
            os << "-";
        os << "\n";
    };
    row("env_step", stats.env_steps.load(), env, actor_total > 0 ? env / actor_total : 0.0);
    row("actor_infer", stats.inferences.load(), inf, actor_total > 0 ? inf / actor_total : 0.0);
    row("learner_step", stats.learner_steps.load(), stats.mean_learner_ms(), -1.0);
    uint64_t cc = stats.compressor_cycles.load();
    row("compressor", cc, cc ? stats.compressor_cycle_ms.load() / static_cast<double>(cc) : 0.0,
        -1.0);
    return os.str();
}

// ----------------------------------------------------------- configuration

RunConfig make_run_config(const CliConfig& cli) {
    RunConfig cfg;
    cfg.env.kind = cli.get("env", "chain");
    cfg.env.chain_n = static_cast<int>(cli.get_int("chain_n", cfg.env.chain_n));
    cfg.env.grid_size = static_cast<int>(cli.get_int("grid_size", cfg.env.grid_size));
    int64_t ems = cli.get_int("env_max_steps", 0);
    if (ems > 0) {
        cfg.env.chain_max_steps = static_cast<int>(ems);
        cfg.env.cartpole_max_steps = static_cast<int>(ems);
        cfg.env.grid_max_steps = static_cast<int>(ems);
    }
    cfg.arch = cli.get("arch", "");
    cfg.na = static_cast<int>(cli.get_int("na", cfg.na));
    cfg.nd = static_cast<int>(cli.get_int("nd", cfg.nd));
    cfg.learner.n_steps = static_cast<int>(cli.get_int("n_steps", cfg.learner.n_steps));
    cfg.learner.lr = cli.get_num("lr", cfg.learner.lr);
    cfg.learner.gamma = cli.get_num("gamma", cfg.learner.gamma);
    cfg.learner.entropy_coef = cli.get_num("entropy_coef", cfg.learner.entropy_coef);
    cfg.learner.value_coef = cli.get_num("value_coef", cfg.learner.value_coef);
    cfg.learner.batch_size = static_cast<int>(cli.get_int("batch_size", cfg.learner.batch_size));
    cfg.learner.max_grad_norm = cli.get_num("max_grad_norm", cfg.learner.max_grad_norm);
    cfg.compressors = cli.get("compressors", "");
    cfg.correctors = cli.get("correctors", "");
    cfg.monitor = cli.get("monitor", "");
    cfg.seed = static_cast<uint64_t>(cli.get_int("seed", 1));
    cfg.total_steps = cli.get_int("total_steps", cfg.total_steps);
    cfg.eval_interval = cli.get_int("eval_interval", cfg.eval_interval);
    cfg.eval_episodes = static_cast<int>(cli.get_int("eval_episodes", cfg.eval_episodes));
    cfg.deterministic = cli.get_bool("deterministic", cfg.deterministic);
    cfg.out_dir = cli.get("out_dir", cfg.out_dir);
    cfg.queue_capacity = static_cast<size_t>(cli.get_int("queue_capacity", 64));
    cfg.compile_interval = static_cast<int>(cli.get_int("compile_interval", cfg.compile_interval));
    cfg.calibration_window =
        static_cast<int>(cli.get_int("calibration_window", cfg.calibration_window));
    cfg.distill.steps_per_cycle =
        static_cast<int>(cli.get_int("distill_steps", cfg.distill.steps_per_cycle));
    cfg.distill.distill_lr =
        static_cast<float>(cli.get_num("distill_lr", cfg.distill.distill_lr));
    cfg.distill.beta = static_cast<float>(cli.get_num("distill_beta", cfg.distill.beta));
    cfg.distill.teacher_sync_interval = static_cast<int>(
        cli.get_int("teacher_sync_interval", cfg.distill.teacher_sync_interval));
    cfg.behavior_perturb = cli.get_num("behavior_perturb", cfg.behavior_perturb);
    if (cfg.na < 1 || cfg.nd < 1) throw Error("run config: na and nd must be at least 1");
    if (cfg.total_steps < 0) throw Error("run config: total_steps must be non-negative");
    return cfg;
}

ActorCriticSpec default_arch(const RunConfig& cfg) {
    auto env = make_env(cfg.env);
    std::string name = cfg.arch;
    if (name.empty()) name = cfg.env.kind == "pixelgrid" ? "mlp:64" : "mlp:32";
    return build_preset(name, env->observation_shape(), env->action_count());
}

EvalStats evaluate_policy(const PolicySnapshot& snap, const EnvConfig& env_cfg, int episodes,
                          bool greedy, uint64_t seed) {
    if (episodes < 1) throw Error("evaluate_policy: episodes must be positive");
    EvalStats out;
    auto env = make_env(env_cfg);
    for (int e = 0; e < episodes; ++e) {
        std::mt19937_64 rng(derive_seed(seed, 0xEEu, static_cast<uint64_t>(e)));
        Tensor obs = env->reset(derive_seed(seed, 0xEFu, static_cast<uint64_t>(e)));
        double ret = 0.0;
        while (true) {
            ActResult r = act(snap.spec, snap.params, obs, rng, greedy);
            StepResult sr = env->step(r.action);
            ret += sr.reward;
            if (sr.done) break;
            obs = sr.obs;
        }
        out.returns.push_back(ret);
        out.mean += ret;
    }
    out.mean /= static_cast<double>(episodes);
    double var = 0.0;
    for (double r : out.returns) var += (r - out.mean) * (r - out.mean);
    out.stddev = episodes > 1 ? std::sqrt(var / static_cast<double>(episodes - 1)) : 0.0;
    return out;
}

// ---------------------------------------------------------------- training

namespace {

struct MetricsWriter {
    std::ofstream f;
    std::mutex mu;
    bool zero_timing = false;

    explicit MetricsWriter(const std::string& path, bool deterministic)
        : f(path, std::ios::binary), zero_timing(deterministic) {
        if (!f) throw Error("cannot open metrics file '" + path + "'");
        f << "step,wall_time_s,episode_return,kl_mean,kl_max,kl_var,entropy_mean,reward_gap,"
             "policy_version,plan_bits,plan_sparsity,alpha,env_ms,infer_ms,learner_ms\n";
        f.flush();
    }

    static std::string num(double v) {
        std::ostringstream os;
        os.setf(std::ios::fixed);
        os << std::setprecision(6) << v;
        return os.str();
    }

    void row(int64_t step, double wall_s, double ep_ret, const IndicatorSample& s,
             uint64_t version, int bits, float sparsity, double alpha, const TimingStats& t) {
        std::lock_guard<std::mutex> lk(mu);
        double env_ms = zero_timing ? 0.0 : t.mean_env_ms();
        double infer_ms = zero_timing ? 0.0 : t.mean_infer_ms();
        double learner_ms = zero_timing ? 0.0 : t.mean_learner_ms();
        if (zero_timing) wall_s = 0.0;
        f << step << ',' << num(wall_s) << ',' << num(ep_ret) << ',' << num(s.kl_mean) << ','
          << num(s.kl_max) << ',' << num(s.kl_var) << ',' << num(s.entropy_mean) << ','
          << num(s.reward_gap) << ',' << version << ',' << bits << ',' << num(sparsity) << ','
          << num(alpha) << ',' << num(env_ms) << ',' << num(infer_ms) << ',' << num(learner_ms)
          << '\n';
        f.flush();
    }
};

// mean over the most recent completed episodes, guarded for workers
struct ReturnTracker {
    std::deque<double> recent;
    std::mutex mu;
    void add(double r) {
        std::lock_guard<std::mutex> lk(mu);
        recent.push_back(r);
        if (recent.size() > 100) recent.pop_front();
    }
    double mean() {
        std::lock_guard<std::mutex> lk(mu);
        if (recent.empty()) return 0.0;
        double s = 0.0;
        for (double r : recent) s += r;
        return s / static_cast<double>(recent.size());
    }
};

struct Actor {
    ActorContext ctx;
    uint64_t episode_counter = 0;
    // cached runner, rebuilt only when a new plan is published
    PlanPtr cached_plan;
    std::unique_ptr<PlanRunner> runner;
    std::vector<float> scratch_dist;

    PlanRunner& runner_for(const PlanPtr& plan) {
        if (plan != cached_plan) {
            runner = std::make_unique<PlanRunner>(plan);
            cached_plan = plan;
        }
        return *runner;
    }
};

// one action from a distribution, optionally mixed with uniform noise to
// widen the behavior/target gap on purpose
template <typename Rng>
std::pair<int, double> sample_behavior(const std::vector<float>& dist, double perturb, Rng& rng) {
    if (perturb <= 0.0) {
        int a = sample_categorical(dist, rng);
        return {a, std::max(static_cast<double>(dist[a]), kEpsProb)};
    }
    std::vector<float> mixed(dist.size());
    const float u = static_cast<float>(perturb / static_cast<double>(dist.size()));
    for (size_t j = 0; j < dist.size(); ++j)
        mixed[j] = static_cast<float>(1.0 - perturb) * dist[j] + u;
    int a = sample_categorical(mixed, rng);
    return {a, std::max(static_cast<double>(mixed[a]), kEpsProb)};
}

struct SegmentEnv {
    const RunConfig& cfg;
    PolicyBroker& broker;
    ObservationBuffer& obsbuf;
    TimingStats& timing;
    ReturnTracker& returns;
    std::atomic<int64_t>& steps;
};

// Rolls one segment of up to n_steps transitions, flushing early at
// episode boundaries. Artifact choice (compressed plan vs full snapshot)
// is made once per segment from the broker's alpha.
Trajectory collect_segment(Actor& a, SegmentEnv& se) {
    const RunConfig& cfg = se.cfg;
    PlanPtr plan = se.broker.plan();
    SnapshotPtr snap = se.broker.snapshot();
    const bool use_plan = plan && uniform01(a.ctx.rng) < se.broker.alpha();

    if (!a.ctx.episode_open) {
        a.ctx.episode_seed = derive_seed(cfg.seed, 0xE9u + static_cast<uint64_t>(a.ctx.id),
                                         a.episode_counter++);
        a.ctx.obs = a.ctx.env->reset(a.ctx.episode_seed);
        a.ctx.episode_return = 0.0;
        a.ctx.episode_open = true;
        se.obsbuf.push(a.ctx.obs);
    }

    Trajectory traj;
    traj.behavior_provenance = use_plan ? "plan" : "snapshot";
    traj.behavior_policy_version = use_plan ? plan->prov.source_version : snap->version;
    traj.obs.push_back(a.ctx.obs);
    for (int t = 0; t < cfg.learner.n_steps; ++t) {
        auto t0 = Clock::now();
        const std::vector<float>* dist;
        if (use_plan) {
            dist = &a.runner_for(plan).infer(a.ctx.obs);
        } else {
            auto cache = forward(snap->spec, snap->params, a.ctx.obs);
            a.scratch_dist = softmax(cache.logits);
            dist = &a.scratch_dist;
        }
        se.timing.add(se.timing.actor_inference_ms, ms_since(t0));
        se.timing.inferences++;
        auto [action, mu] = sample_behavior(*dist, cfg.behavior_perturb, a.ctx.rng);

        t0 = Clock::now();
        StepResult sr = a.ctx.env->step(action);
        se.timing.add(se.timing.env_step_ms, ms_since(t0));
        se.timing.env_steps++;

        traj.actions.push_back(action);
        traj.rewards.push_back(sr.reward);
        traj.behavior_probs.push_back(mu);
        traj.done.push_back(sr.done ? 1 : 0);
        traj.obs.push_back(sr.obs);
        a.ctx.obs = sr.obs;
        a.ctx.episode_return += sr.reward;
        se.obsbuf.push(sr.obs);
        se.steps.fetch_add(1, std::memory_order_relaxed);
        if (sr.done) {
            se.returns.add(a.ctx.episode_return);
            a.ctx.episode_open = false;
            break;
        }
    }
    return traj;
}

struct Trainer {
    const RunConfig& cfg;
    Learner& learner;
    Compressor& compressor;
    PolicyBroker& broker;
    CorrectorChain correctors;
    TimingStats& timing;
    int versions_since_compile = 0;

    void train_on(std::vector<Trajectory> batch) {
        SnapshotPtr snap = broker.snapshot();
        auto t0 = Clock::now();
        CorrectedBatch cb = correctors.apply(std::move(batch), *snap, cfg.learner.gamma);
        SnapshotPtr next = learner.train_step(cb);
        timing.add(timing.learner_step_ms, ms_since(t0));
        timing.learner_steps++;
        broker.publish_snapshot(next);
        versions_since_compile++;
    }

    // deterministic mode runs the compressor inline on the same cadence
    void maybe_compile_inline() {
        if (versions_since_compile < cfg.compile_interval) return;
        versions_since_compile = 0;
        auto t0 = Clock::now();
        PlanPtr plan = compressor.compile(broker.snapshot());
        timing.add(timing.compressor_cycle_ms, ms_since(t0));
        timing.compressor_cycles++;
        broker.publish_plan(plan);
    }
};

struct Monitor {
    const RunConfig& cfg;
    PolicyBroker& broker;
    Compressor& compressor;
    ObservationBuffer& obsbuf;
    MetricsWriter& metrics;
    ReturnTracker& returns;
    TimingStats& timing;
    std::vector<std::shared_ptr<Strategy>> strategies;
    std::mt19937_64 rng;
    uint64_t eval_counter = 0;
    Clock::time_point start;
    IndicatorSample last;

    void evaluate(int64_t step) {
        SnapshotPtr snap = broker.snapshot();
        PlanPtr plan = broker.plan();
        const int n_states = static_cast<int>(std::min<size_t>(128, obsbuf.size()));
        std::vector<Tensor> states = obsbuf.sample(std::max(1, n_states), rng);
        EnvConfig env_cfg = cfg.env;
        IndicatorSample s = compute_indicators(
            *snap, *plan, states, [&env_cfg] { return make_env(env_cfg); }, cfg.eval_episodes,
            derive_seed(cfg.seed, 0xEBu, eval_counter++));
        s.step = step;
        s.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
        for (auto& strat : strategies)
            apply_action(strat->observe(s), compressor.chain(), broker);
        metrics.row(step, s.wall_time_s, returns.mean(), s, snap->version, plan->prov.bits,
                    plan->prov.sparsity, broker.alpha(), timing);
        last = s;
    }
};

}  // namespace

RunResult run_train(const RunConfig& cfg) {
    cfg.learner.validate();
    std::filesystem::create_directories(cfg.out_dir);

    ActorCriticSpec spec = default_arch(cfg);
    Parameters params = init_params<float>(spec, derive_seed(cfg.seed, 0x11u, 0));
    Learner learner(spec, std::move(params), cfg.learner);

    PolicyBroker broker;
    broker.publish_snapshot(learner.snapshot());

    ObservationBuffer obsbuf(
        static_cast<size_t>(std::max(cfg.calibration_window, 2048)));

    std::vector<Actor> actors(static_cast<size_t>(cfg.na));
    for (int i = 0; i < cfg.na; ++i) {
        actors[static_cast<size_t>(i)].ctx.env = make_env(cfg.env);
        actors[static_cast<size_t>(i)].ctx.rng.seed(
            derive_seed(cfg.seed, 0xA1u, static_cast<uint64_t>(i)));
        actors[static_cast<size_t>(i)].ctx.id = i;
    }
    // seed the calibration window so the first compile has states
    for (auto& a : actors)
        obsbuf.push(a.ctx.env->reset(derive_seed(cfg.seed, 0xE9u + static_cast<uint64_t>(a.ctx.id),
                                                 a.episode_counter)));

    CompressorChain chain = parse_chain(cfg.compressors);
    if (chain.has(StageKind::Distill)) {
        DistillerConfig d = cfg.distill;
        d.workers = cfg.nd;
        chain.stage(StageKind::Distill).distill = d;
    }
    if (chain.has(StageKind::Quantize))
        chain.stage(StageKind::Quantize).quant.calibration_window = cfg.calibration_window;

    auto obsbuf_rng = std::make_shared<std::mt19937_64>(derive_seed(cfg.seed, 0xC4u, 0));
    StateSource states = [&obsbuf, obsbuf_rng](int count) {
        return obsbuf.sample(count, *obsbuf_rng);
    };
    Compressor compressor(std::move(chain), states, derive_seed(cfg.seed, 0xD1u, 0));

    TimingStats timing;
    broker.publish_plan(compressor.compile(broker.snapshot()));
    timing.compressor_cycles++;

    ReturnTracker returns;
    MetricsWriter metrics(cfg.out_dir + "/metrics.csv", cfg.deterministic);

    Monitor monitor{cfg,
                    broker,
                    compressor,
                    obsbuf,
                    metrics,
                    returns,
                    timing,
                    parse_strategies(cfg.monitor),
                    std::mt19937_64(derive_seed(cfg.seed, 0xB2u, 0)),
                    0,
                    Clock::now(),
                    {}};
    for (auto& s : monitor.strategies)
        if (s->name() == "linalpha") broker.enable_alpha_mixing();

    Trainer tr{cfg, learner, compressor, broker, parse_correctors(cfg.correctors), timing};

    std::atomic<int64_t> steps{0};
    SegmentEnv se{cfg, broker, obsbuf, timing, returns, steps};
    const int seg_per_batch = cfg.learner.batch_size / cfg.learner.n_steps;

    RunResult result;
    auto run_start = Clock::now();

    if (cfg.total_steps > 0 && cfg.deterministic) {
        std::deque<Trajectory> pending;
        int64_t next_eval = cfg.eval_interval;
        while (steps.load() < cfg.total_steps) {
            for (auto& a : actors) {
                pending.push_back(collect_segment(a, se));
                if (steps.load() >= cfg.total_steps) break;
            }
            while (static_cast<int>(pending.size()) >= seg_per_batch) {
                std::vector<Trajectory> batch(pending.begin(), pending.begin() + seg_per_batch);
                pending.erase(pending.begin(), pending.begin() + seg_per_batch);
                tr.train_on(std::move(batch));
                tr.maybe_compile_inline();
            }
            while (cfg.eval_interval > 0 && steps.load() >= next_eval) {
                monitor.evaluate(steps.load());
                next_eval += cfg.eval_interval;
            }
        }
    } else if (cfg.total_steps > 0) {
        ExperienceQueue queue(cfg.queue_capacity);
        std::atomic<bool> stop{false}, failed{false};
        std::mutex err_mu;
        std::string err_msg;
        auto fail = [&](const std::string& what) {
            {
                std::lock_guard<std::mutex> lk(err_mu);
                if (err_msg.empty()) err_msg = what;
            }
            failed = true;
            stop = true;
            queue.close();
        };

        std::vector<std::thread> actor_threads;
        for (auto& a : actors) {
            actor_threads.emplace_back([&, ap = &a] {
                try {
                    while (!stop && steps.load() < cfg.total_steps) {
                        if (!queue.push(collect_segment(*ap, se))) break;
                    }
                } catch (const std::exception& e) {
                    fail(std::string("actor worker: ") + e.what());
                }
            });
        }

        std::atomic<uint64_t> learner_version{learner.version()};
        std::thread learner_thread([&] {
            try {
                std::vector<Trajectory> batch;
                while (true) {
                    auto seg = queue.pop();
                    if (!seg) break;
                    batch.push_back(std::move(*seg));
                    if (static_cast<int>(batch.size()) < seg_per_batch && !queue.closed())
                        continue;
                    tr.train_on(std::move(batch));
                    batch.clear();
                    learner_version.store(learner.version());
                }
                if (!batch.empty()) {
                    tr.train_on(std::move(batch));
                    learner_version.store(learner.version());
                }
            } catch (const std::exception& e) {
                fail(std::string("learner worker: ") + e.what());
            }
        });

        std::thread compressor_thread([&] {
            try {
                uint64_t last_compiled = broker.snapshot_version();
                while (!stop) {
                    uint64_t v = learner_version.load();
                    if (v >= last_compiled + static_cast<uint64_t>(cfg.compile_interval)) {
                        auto t0 = Clock::now();
                        PlanPtr plan = compressor.compile(broker.snapshot());
                        timing.add(timing.compressor_cycle_ms, ms_since(t0));
                        timing.compressor_cycles++;
                        broker.publish_plan(plan);
                        last_compiled = v;
                    } else {
                        std::this_thread::sleep_for(std::chrono::milliseconds(1));
                    }
                }
            } catch (const std::exception& e) {
                fail(std::string("compressor worker: ") + e.what());
            }
        });

        std::thread monitor_thread([&] {
            try {
                int64_t next_eval = cfg.eval_interval;
                while (!stop && cfg.eval_interval > 0) {
                    if (steps.load() >= next_eval) {
                        monitor.evaluate(steps.load());
                        next_eval += cfg.eval_interval;
                    } else {
                        std::this_thread::sleep_for(std::chrono::milliseconds(1));
                    }
                    if (steps.load() >= cfg.total_steps && next_eval > cfg.total_steps) break;
                }
            } catch (const std::exception& e) {
                fail(std::string("monitor worker: ") + e.what());
            }
        });

        for (auto& t : actor_threads) t.join();
        queue.close();
        learner_thread.join();
        stop = true;
        compressor_thread.join();
        monitor_thread.join();
        if (failed) {
            std::lock_guard<std::mutex> lk(err_mu);
            result.error = err_msg;
            result.exit_code = 1;
        }
    }

    result.wall_time_s = std::chrono::duration<double>(Clock::now() - run_start).count();
    result.final_snapshot = broker.snapshot();
    result.final_episode_return = returns.mean();
    result.timing_summary = timing_report(timing);

    result.checkpoint_path = cfg.out_dir + "/final.ckpt";
    save_snapshot(*result.final_snapshot, result.checkpoint_path);
    result.metrics_path = cfg.out_dir + "/metrics.csv";

    result.summary_path = cfg.out_dir + "/summary.txt";
    {
        std::ofstream sf(result.summary_path, std::ios::binary);
        sf.setf(std::ios::fixed);
        sf << std::setprecision(6);
        sf << "env=" << cfg.env.kind << "\n"
           << "arch=" << spec.preset_name << "\n"
           << "total_steps=" << steps.load() << "\n"
           << "policy_version=" << result.final_snapshot->version << "\n"
           << "mean_episode_return=" << result.final_episode_return << "\n"
           << "wall_time_s=" << result.wall_time_s << "\n"
           << "alpha=" << broker.alpha() << "\n";
        PlanPtr plan = broker.plan();
        if (plan) {
            sf << "plan_bits=" << plan->prov.bits << "\nplan_sparsity=" << plan->prov.sparsity
               << "\nplan_stages=";
            for (size_t i = 0; i < plan->prov.stages.size(); ++i)
                sf << (i ? "," : "") << plan->prov.stages[i];
            sf << "\n";
        }
        if (!result.error.empty()) sf << "error=" << result.error << "\n";
        sf << "\n" << result.timing_summary;
    }
    return result;
}

}  // namespace accerl
