#include "accerl/accept.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>

#include "accerl/bench.hpp"
#include "accerl/compressor.hpp"
#include "accerl/corrector.hpp"
#include "accerl/learner.hpp"
#include "accerl/monitor.hpp"
#include "accerl/runtime.hpp"

namespace accerl {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

fs::path work_dir() {
    fs::path p = fs::temp_directory_path() / "accerl-accept";
    fs::create_directories(p);
    return p;
}

// ------------------------------------------------- synthetic trajectories

struct RandomTraj {
    Trajectory traj;
    std::vector<double> values;    // V(x_t), length n+1
    std::vector<double> pi_probs;  // pi(a_t|x_t), length n
};

RandomTraj random_traj(std::mt19937_64& rng, bool on_policy) {
    RandomTraj r;
    const int n = 1 + static_cast<int>(uniform01(rng) * 16.0) % 16;
    for (int t = 0; t <= n; ++t) {
        r.traj.obs.push_back(Tensor::zeros({1}));
        r.values.push_back(uniform01(rng) * 2.0 - 1.0);
    }
    const bool terminal = uniform01(rng) < 0.5;
    for (int t = 0; t < n; ++t) {
        r.traj.actions.push_back(0);
        r.traj.rewards.push_back(uniform01(rng) * 2.0 - 1.0);
        const double mu = 0.05 + 0.95 * uniform01(rng);
        const double pi = on_policy ? mu : 0.05 + 0.95 * uniform01(rng);
        r.traj.behavior_probs.push_back(mu);
        r.pi_probs.push_back(pi);
        r.traj.done.push_back(t == n - 1 && terminal ? 1 : 0);
    }
    return r;
}

// literal double-sum form of the corrected value target, fp64
std::vector<double> vtrace_sum_oracle(const RandomTraj& r, const VTraceConfig& cfg) {
    const int n = r.traj.n();
    const bool terminal = r.traj.done[static_cast<size_t>(n - 1)] != 0;
    std::vector<double> vs(static_cast<size_t>(n) + 1);
    vs[static_cast<size_t>(n)] = terminal ? 0.0 : r.values[static_cast<size_t>(n)];
    for (int s = 0; s < n; ++s) {
        double acc = r.values[static_cast<size_t>(s)];
        double discount = 1.0;
        double trace = 1.0;
        for (int t = s; t < n; ++t) {
            const double rho =
                std::min(cfg.rho_bar, r.pi_probs[static_cast<size_t>(t)] /
                                          r.traj.behavior_probs[static_cast<size_t>(t)]);
            const double v_next = (t == n - 1 && terminal) ? 0.0 : r.values[static_cast<size_t>(t) + 1];
            const double delta =
                rho * (r.traj.rewards[static_cast<size_t>(t)] + cfg.gamma * v_next -
                       r.values[static_cast<size_t>(t)]);
            acc += discount * trace * delta;
            discount *= cfg.gamma;
            trace *= std::min(cfg.c_bar, r.pi_probs[static_cast<size_t>(t)] /
                                             r.traj.behavior_probs[static_cast<size_t>(t)]);
        }
        vs[static_cast<size_t>(s)] = acc;
    }
    return vs;
}

// --------------------------------------------------------------- fixtures

RunConfig chain_train_config(const std::string& out, uint64_t seed) {
    RunConfig cfg;
    cfg.env.kind = "chain";
    cfg.arch = "mlp:32";
    cfg.na = 4;
    cfg.nd = 1;
    cfg.learner.n_steps = 5;
    cfg.learner.batch_size = 80;
    cfg.learner.lr = 3e-3;
    cfg.learner.gamma = 0.99;
    cfg.learner.entropy_coef = 0.01;
    cfg.learner.value_coef = 0.25;
    cfg.seed = seed;
    cfg.total_steps = 60000;
    cfg.eval_interval = 15000;
    cfg.eval_episodes = 2;
    cfg.deterministic = true;
    cfg.out_dir = out;
    return cfg;
}

RunConfig cartpole_train_config(const std::string& out, uint64_t seed) {
    RunConfig cfg;
    cfg.env.kind = "cartpole";
    cfg.arch = "mlp:32";
    cfg.na = 4;
    cfg.nd = 1;
    cfg.learner.n_steps = 20;
    cfg.learner.batch_size = 320;
    cfg.learner.lr = 3e-4;
    cfg.learner.gamma = 0.99;
    cfg.learner.entropy_coef = 0.02;
    cfg.learner.value_coef = 0.25;
    cfg.seed = seed;
    cfg.total_steps = 500000;
    cfg.eval_interval = 100000;
    cfg.eval_episodes = 2;
    cfg.deterministic = true;
    cfg.out_dir = out;
    return cfg;
}

struct ChainTeacher {
    RunConfig cfg;
    RunResult run;
    double greedy_return = 0.0;
};

// trained once, shared by the baseline, distillation and determinism cases
const ChainTeacher& chain_teacher() {
    static std::once_flag once;
    static std::optional<ChainTeacher> t;
    std::call_once(once, [] {
        ChainTeacher ct;
        ct.cfg = chain_train_config((work_dir() / "baseline-chain-a").string(), 7);
        ct.run = run_train(ct.cfg);
        ct.greedy_return =
            evaluate_policy(*ct.run.final_snapshot, ct.cfg.env, 100, true, 1234).mean;
        t = std::move(ct);
    });
    return *t;
}

bool same_file_bytes(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    return sa == sb;
}

// --------------------------------------------------------------- criteria

CaseResult case_vtrace_oracle() {
    std::mt19937_64 rng(41);
    VTraceConfig cfg;
    double max_err = 0.0, max_np_err = 0.0;
    for (int i = 0; i < 1000; ++i) {
        RandomTraj r = random_traj(rng, false);
        VTraceResult got = vtrace_targets(r.traj, r.values, r.pi_probs, cfg);
        std::vector<double> want = vtrace_sum_oracle(r, cfg);
        for (size_t s = 0; s < want.size(); ++s)
            max_err = std::max(max_err, std::abs(got.vs[s] - want[s]));

        RandomTraj onp = random_traj(rng, true);
        VTraceResult got2 = vtrace_targets(onp.traj, onp.values, onp.pi_probs, cfg);
        const int n = onp.traj.n();
        const bool terminal = onp.traj.done[static_cast<size_t>(n - 1)] != 0;
        for (int s = 0; s < n; ++s) {
            double nstep = 0.0, g = 1.0;
            for (int t = s; t < n; ++t) {
                nstep += g * onp.traj.rewards[static_cast<size_t>(t)];
                g *= cfg.gamma;
            }
            if (!terminal) nstep += g * onp.values[static_cast<size_t>(n)];
            max_np_err = std::max(max_np_err, std::abs(got2.vs[static_cast<size_t>(s)] - nstep));
        }
    }
    return {max_err <= 1e-10 && max_np_err <= 1e-9,
            "sum_err=" + fmt(max_err) + " nstep_err=" + fmt(max_np_err), "<=1e-10/<=1e-9"};
}

CaseResult case_clipping_law() {
    std::mt19937_64 rng(42);
    double max_rho = 0.0, max_c = 0.0;
    VTraceConfig cfg;
    for (int i = 0; i < 1000; ++i) {
        RandomTraj r = random_traj(rng, false);
        VTraceResult got = vtrace_targets(r.traj, r.values, r.pi_probs, cfg);
        for (size_t t = 0; t < got.rho.size(); ++t) {
            max_rho = std::max(max_rho, got.rho[t]);
            max_c = std::max(max_c, is_ratio(r.pi_probs[t], r.traj.behavior_probs[t], cfg.c_bar));
        }
    }
    return {max_rho <= 1.0 && max_c <= 1.0, "max_rho=" + fmt(max_rho) + " max_c=" + fmt(max_c),
            "<=1"};
}

template <typename LossFn>
double max_fd_rel_err(const ActorCriticSpec& spec, ParametersT<double>& params,
                      const GradientsT<double>& analytic, const LossFn& loss_at) {
    const double h = 1e-5;
    double worst = 0.0;
    for (size_t l = 0; l < params.layers.size(); ++l) {
        if (!params.layers[l].present) continue;
        auto probe = [&](std::vector<double>& data, const std::vector<double>& grad) {
            for (size_t k = 0; k < data.size(); ++k) {
                const double orig = data[k];
                data[k] = orig + h;
                const double lp = loss_at(params);
                data[k] = orig - h;
                const double lm = loss_at(params);
                data[k] = orig;
                const double fd = (lp - lm) / (2.0 * h);
                const double an = grad[k];
                const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
                worst = std::max(worst, rel);
            }
        };
        probe(params.layers[l].W.data, analytic.layers[l].W.data);
        probe(params.layers[l].b.data, analytic.layers[l].b.data);
    }
    (void)spec;
    return worst;
}

CaseResult case_gradient_fidelity() {
    std::mt19937_64 rng(43);
    double worst = 0.0;
    for (int net = 0; net < 20; ++net) {
        ActorCriticSpec spec = build_preset("mlp:8", {5}, 3);
        ParametersT<double> params =
            params_cast<double>(init_params<float>(spec, 100 + static_cast<uint64_t>(net)));

        // distillation loss against a fixed random teacher signal
        std::vector<double> tp = {0.2, 0.5, 0.3};
        double tv = uniform01(rng) * 2.0 - 1.0;
        TensorT<double> state = TensorT<double>::zeros({5});
        for (double& v : state.data) v = uniform01(rng) * 2.0 - 1.0;
        const double beta = 0.01;
        DistillLoss<double> dl = distill_loss<double>(spec, params, tp, tv, state, beta);
        worst = std::max(worst, max_fd_rel_err(spec, params, dl.grads,
                                               [&](const ParametersT<double>& p) {
                                                   return distill_loss<double>(spec, p, tp, tv,
                                                                               state, beta)
                                                       .loss;
                                               }));

        // actor-critic loss with fixed (stop-gradient) targets and ratios
        CorrectedBatch batch;
        Trajectory traj;
        std::vector<double> vs, vals;
        for (int t = 0; t <= 3; ++t) {
            Tensor obs = Tensor::zeros({5});
            for (float& v : obs.data) v = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
            traj.obs.push_back(obs);
            vs.push_back(uniform01(rng) * 2.0 - 1.0);
            vals.push_back(uniform01(rng) * 2.0 - 1.0);
        }
        std::vector<double> rho;
        for (int t = 0; t < 3; ++t) {
            traj.actions.push_back(static_cast<int>(uniform01(rng) * 3.0) % 3);
            traj.rewards.push_back(uniform01(rng) * 2.0 - 1.0);
            traj.behavior_probs.push_back(0.5);
            traj.done.push_back(0);
            rho.push_back(0.2 + 0.8 * uniform01(rng));
        }
        batch.trajectories.push_back(traj);
        batch.vs.push_back(vs);
        batch.values.push_back(vals);
        batch.rho.push_back(rho);
        batch.corrected = true;
        LearnerConfig lc;
        lc.n_steps = 3;
        lc.batch_size = 3;
        auto scalar = [&](const ParametersT<double>& p) {
            auto [terms, g] = compute_losses_t<double>(batch, spec, p, lc);
            return terms.policy_loss + lc.value_coef * terms.value_loss -
                   lc.entropy_coef * terms.entropy;
        };
        auto [terms, grads] = compute_losses_t<double>(batch, spec, params, lc);
        worst = std::max(worst, max_fd_rel_err(spec, params, grads, scalar));
    }
    return {worst <= 1e-4, "max_rel_err=" + fmt(worst), "<=1e-4"};
}

CaseResult case_quant_roundtrip() {
    double worst_excess = -1.0;
    auto check_spec = [&](const ActorCriticSpec& spec, uint64_t seed) {
        Parameters params = init_params<float>(spec, seed);
        for (const auto& layer : params.layers) {
            if (!layer.present) continue;
            for (int bits : {8, 16}) {
                QuantizedTensor qt = quantize_tensor(layer.W.data, bits);
                for (size_t k = 0; k < layer.W.data.size(); ++k) {
                    const double rt = static_cast<double>(qt.q[k]) * qt.scale;
                    const double err = std::abs(rt - static_cast<double>(layer.W.data[k]));
                    worst_excess = std::max(worst_excess, err - (qt.scale / 2.0 + 1e-12));
                }
            }
        }
    };
    uint64_t seed = 50;
    for (const char* preset : {"Original", "Net1", "Net2", "Net3"})
        check_spec(build_preset(preset, {4, 84, 84}, 6), seed++);
    check_spec(build_preset("mlp:64", {16}, 4), seed);
    return {worst_excess <= 0.0, "max_excess=" + fmt(worst_excess), "<=0 (err<=scale/2+1e-12)"};
}

CaseResult case_plan_equivalence() {
    std::mt19937_64 rng(51);
    double worst = 0.0;
    for (const char* preset : {"Original", "Net1", "Net2", "Net3"}) {
        ActorCriticSpec spec = build_preset(preset, {4, 36, 36}, 6);
        Parameters params = init_params<float>(spec, 60);
        PolicySnapshot snap{1, spec, params, 0};

        CompiledPolicy frozen = build_plan(snap);
        freeze_plan(frozen);
        frozen.checksum = frozen.compute_checksum();
        CompiledPolicy fused = build_plan(snap);
        fuse_plan(fused);
        freeze_plan(fused);
        fused.checksum = fused.compute_checksum();
        PlanRunner rf(std::make_shared<CompiledPolicy>(std::move(frozen)));
        PlanRunner rz(std::make_shared<CompiledPolicy>(std::move(fused)));

        for (int i = 0; i < 1000; ++i) {
            Tensor x = Tensor::zeros(spec.input_shape);
            for (float& v : x.data) v = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
            auto cache = forward(spec, params, x);
            std::vector<float> want = softmax(cache.logits);
            for (PlanRunner* r : {&rf, &rz}) {
                const std::vector<float>& got = r->infer(x);
                for (size_t a = 0; a < want.size(); ++a)
                    worst = std::max(worst, static_cast<double>(std::abs(got[a] - want[a])));
                worst = std::max(worst, std::abs(r->last_value() - static_cast<double>(cache.value)));
            }
        }
    }
    return {worst <= 1e-6, "max_abs_dev=" + fmt(worst), "<=1e-6"};
}

CaseResult case_pruning_correctness() {
    std::ostringstream what;
    bool ok = true;

    ActorCriticSpec spec = build_preset("mlp:2048", {64}, 4);
    PolicySnapshot snap{1, spec, init_params<float>(spec, 70), 0};
    PolicySnapshot half = prune(snap, 0.5f);
    if (half.spec.trunk[0].out_dim != 1024) {
        ok = false;
        what << "width(0.5)=" << half.spec.trunk[0].out_dim << " ";
    }

    std::mt19937_64 rng(71);
    std::vector<float> norms(100);
    for (float& v : norms) v = static_cast<float>(uniform01(rng));
    std::vector<int> got = prune_keep_indices(norms, 0.3f);
    std::vector<int> order(norms.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return norms[static_cast<size_t>(a)] <
                                                norms[static_cast<size_t>(b)]; });
    const int drop = static_cast<int>(std::ceil(0.3 * 100.0));
    std::vector<int> want(order.begin() + drop, order.end());
    std::sort(want.begin(), want.end());
    if (got != want) {
        ok = false;
        what << "keep-set!=sort-oracle ";
    }

    for (float s : {0.0f, 0.25f, 0.5f, 0.75f}) {
        PolicySnapshot p = prune(snap, s);
        const int expect = 2048 - static_cast<int>(std::ceil(static_cast<double>(s) * 2048.0));
        if (p.spec.action_count != 4 || p.spec.policy_head().out_dim != 4 ||
            p.spec.value_head().out_dim != 1 || p.spec.trunk[0].out_dim != expect) {
            ok = false;
            what << "heads/width@" << s << " ";
        }
    }
    if (ok) what << "width(0.5)=1024 keep-set==oracle heads-unchanged";
    return {ok, what.str(), "exact"};
}

CaseResult case_baseline_chain() {
    const ChainTeacher& t = chain_teacher();
    return {t.greedy_return >= 0.95, "greedy_return=" + fmt(t.greedy_return),
            ">=0.95 within " + std::to_string(t.cfg.total_steps) + " steps"};
}

CaseResult case_baseline_cartpole() {
    RunConfig cfg = cartpole_train_config((work_dir() / "baseline-cartpole").string(), 7);
    RunResult run = run_train(cfg);
    double ret = evaluate_policy(*run.final_snapshot, cfg.env, 100, true, 1234).mean;
    return {ret >= 180.0, "greedy_return=" + fmt(ret),
            ">=180 within " + std::to_string(cfg.total_steps) + " steps"};
}

CaseResult case_parity_chain() {
    RunConfig cfg = chain_train_config((work_dir() / "parity-chain").string(), 7);
    cfg.compressors = "quant:8,freeze";
    cfg.correctors = "vtrace:1:1,is:1";
    RunResult run = run_train(cfg);
    double ret = evaluate_policy(*run.final_snapshot, cfg.env, 100, true, 1234).mean;
    return {ret >= 0.95, "greedy_return=" + fmt(ret), ">=0.95 (same as baseline)"};
}

CaseResult case_parity_cartpole() {
    RunConfig cfg = cartpole_train_config((work_dir() / "parity-cartpole").string(), 7);
    cfg.compressors = "quant:8,freeze";
    cfg.correctors = "vtrace:1:1,is:1";
    RunResult run = run_train(cfg);
    double ret = evaluate_policy(*run.final_snapshot, cfg.env, 100, true, 1234).mean;
    return {ret >= 180.0, "greedy_return=" + fmt(ret), ">=180 (same as baseline)"};
}

CaseResult case_correction_necessity() {
    auto value_at_start = [](const RunConfig& cfg) {
        RunResult run = run_train(cfg);
        Tensor s0 = Tensor::zeros({10});
        s0.data[0] = 1.0f;
        auto cache = forward(run.final_snapshot->spec, run.final_snapshot->params, s0);
        return static_cast<double>(cache.value);
    };
    RunConfig corrected = chain_train_config((work_dir() / "correct-on").string(), 7);
    corrected.behavior_perturb = 0.2;
    corrected.correctors = "vtrace:1:1,is:1";
    // gamma 0.95 makes the detour cost visible: the behavior policy's value
    // at the start state sits ~10% below optimal, while clipped importance
    // weights keep the corrected fixed point within a couple of percent
    corrected.learner.gamma = 0.95;
    RunConfig plain = corrected;
    plain.out_dir = (work_dir() / "correct-off").string();
    plain.correctors = "";

    const double v_star = chain_value_iteration(10, 0.95, std::vector<double>(10, 1.0))[0];
    const double bias_c = std::abs(value_at_start(corrected) - v_star) / v_star;
    const double bias_u = std::abs(value_at_start(plain) - v_star) / v_star;
    return {bias_c <= 0.05 && bias_u > bias_c,
            "bias_corrected=" + fmt(bias_c) + " bias_uncorrected=" + fmt(bias_u),
            "corrected<=0.05 and uncorrected>corrected"};
}

CaseResult case_monitor_strategies() {
    std::ostringstream what;
    bool ok = true;

    KlMaxThresholdStrategy kl(14.0, 16);
    int fired_at = -1, fires = 0;
    const double kls[] = {2.0, 5.0, 13.9, 14.1, 20.0};
    for (int i = 0; i < 5; ++i) {
        IndicatorSample s;
        s.kl_max = kls[i];
        StrategyAction a = kl.observe(s);
        if (const auto* sb = std::get_if<SetBits>(&a)) {
            fires++;
            fired_at = i + 1;
            if (sb->bits != 16) ok = false;
        }
    }
    if (fires != 1 || fired_at != 4) ok = false;
    what << "klmax_fired_at=" << fired_at << "(n=" << fires << ") ";

    RewardGapThresholdStrategy gap(10.0, 0.2f);
    int gfired = 0, gat = -1;
    const double gaps[] = {3.0, 8.0, 12.0};
    for (int i = 0; i < 3; ++i) {
        IndicatorSample s;
        s.reward_gap = gaps[i];
        StrategyAction a = gap.observe(s);
        if (const auto* ss = std::get_if<SetSparsity>(&a)) {
            gfired++;
            gat = i + 1;
            if (std::abs(ss->sparsity - 0.2f) > 1e-9f) ok = false;
        }
    }
    if (gfired != 1 || gat != 3) ok = false;
    what << "gap_fired_at=" << gat << "(n=" << gfired << ") ";

    LinearAlphaStrategy lin(14.0);
    const double a0 = lin.alpha_for(0.0), a14 = lin.alpha_for(14.0), a7 = lin.alpha_for(7.0);
    if (a0 != 1.0 || a14 != 0.0 || a7 != 0.5) ok = false;
    what << "alpha(0,7,14)=" << a0 << "," << a7 << "," << a14;
    return {ok, what.str(), "exact (1 fire @4; 1 fire @3; 1/0.5/0)"};
}

CaseResult case_distillation_recovery() {
    const ChainTeacher& t = chain_teacher();
    const PolicySnapshot& teacher = *t.run.final_snapshot;

    // states actually visited by the teacher
    std::vector<Tensor> visited;
    std::mt19937_64 rng(81);
    auto env = make_env(t.cfg.env);
    uint64_t ep = 0;
    while (visited.size() < 512) {
        Tensor obs = env->reset(ep++);
        visited.push_back(obs);
        while (visited.size() < 512) {
            ActResult r = act(teacher.spec, teacher.params, obs, rng);
            StepResult sr = env->step(r.action);
            if (sr.done) break;
            obs = sr.obs;
            visited.push_back(obs);
        }
    }
    std::mt19937_64 srng(82);
    StateSource source = [&](int count) {
        std::vector<Tensor> out;
        for (int i = 0; i < count; ++i)
            out.push_back(visited[static_cast<size_t>(uniform01(srng) * 512.0) % 512]);
        return out;
    };

    ActorCriticSpec student_spec = build_preset("mlp:16", {10}, 2);
    DistillerConfig dc;
    dc.steps_per_cycle = 5000;
    AdamState adam = AdamState::make(student_spec, dc.distill_lr);
    DistillResult dr = distill(teacher, student_spec, init_params<float>(student_spec, 83), adam,
                               source, dc, 84);

    double kl_sum = 0.0;
    for (const Tensor& s : visited) {
        auto tc = forward(teacher.spec, teacher.params, s);
        auto sc = forward(student_spec, dr.params, s);
        kl_sum += kl_divergence(softmax(tc.logits), softmax(sc.logits));
    }
    const double kl_mean = kl_sum / static_cast<double>(visited.size());

    bool agree = true;
    for (int s = 0; s < 10; ++s) {
        Tensor obs = Tensor::zeros({10});
        obs.data[static_cast<size_t>(s)] = 1.0f;
        auto tc = forward(teacher.spec, teacher.params, obs);
        auto sc = forward(student_spec, dr.params, obs);
        if (argmax_index(softmax(tc.logits)) != argmax_index(softmax(sc.logits))) agree = false;
    }
    return {kl_mean < 0.05 && agree,
            "kl_mean=" + fmt(kl_mean) + " greedy_agree=" + (agree ? "yes" : "no"),
            "kl<0.05 and agreement on all states"};
}

CaseResult case_latency_ordering() {
    const int iters = 120;
    std::vector<double> dynamic_ms;
    std::ostringstream what;
    bool ok = true;
    for (const char* preset : {"Original", "Net1", "Net2", "Net3"}) {
        BenchResult r = run_bench(preset, {4, 84, 84}, iters);
        const BenchRow& dyn = r.row("dynamic_fp32");
        const BenchRow& fus = r.row("frozen_fused_fp32");
        dynamic_ms.push_back(dyn.median_ms);
        // scheduler contention only ever adds time, so the per-variant
        // minimum is the robust estimate of the true cost; medians of the
        // two near-equal variants flip sign run to run on a loaded host
        const double dmin = *std::min_element(dyn.samples_ms.begin(), dyn.samples_ms.end());
        const double fmin = *std::min_element(fus.samples_ms.begin(), fus.samples_ms.end());
        if (fmin > dmin) ok = false;
        what << preset << "=" << fmt(dyn.median_ms) << "ms(min " << fmt(dmin) << " fused_min "
             << fmt(fmin) << ") ";
    }
    for (size_t i = 1; i < dynamic_ms.size(); ++i)
        if (!(dynamic_ms[i] < dynamic_ms[i - 1])) ok = false;
    // speedups over the uncompressed net are informational, not asserted
    what << "speedup_vs_original=";
    for (size_t i = 1; i < dynamic_ms.size(); ++i)
        what << (i > 1 ? "/" : "") << fmt(dynamic_ms[0] / dynamic_ms[i]) << "x";
    return {ok, what.str(), "strictly decreasing; fused<=dynamic (min latency)"};
}

CaseResult case_determinism() {
    const ChainTeacher& t = chain_teacher();  // first run of the same config
    RunConfig cfg = t.cfg;
    cfg.out_dir = (work_dir() / "baseline-chain-b").string();
    run_train(cfg);
    const bool same = same_file_bytes(fs::path(t.cfg.out_dir) / "metrics.csv",
                                      fs::path(cfg.out_dir) / "metrics.csv");
    return {same, std::string("metrics_identical=") + (same ? "yes" : "no"), "byte-identical"};
}

}  // namespace

const std::vector<AcceptCase>& acceptance_cases() {
    static const std::vector<AcceptCase> cases = {
        {"vtrace-oracle", 5.0, case_vtrace_oracle},
        {"clipping-law", 5.0, case_clipping_law},
        {"gradient-fidelity", 30.0, case_gradient_fidelity},
        {"quant-roundtrip", 60.0, case_quant_roundtrip},
        {"plan-equivalence", 60.0, case_plan_equivalence},
        {"pruning-correctness", 60.0, case_pruning_correctness},
        {"baseline-chain", 600.0, case_baseline_chain},
        {"baseline-cartpole", 600.0, case_baseline_cartpole},
        {"compressed-parity-chain", 600.0, case_parity_chain},
        {"compressed-parity-cartpole", 600.0, case_parity_cartpole},
        {"correction-necessity", 300.0, case_correction_necessity},
        {"monitor-strategies", 10.0, case_monitor_strategies},
        {"distillation-recovery", 300.0, case_distillation_recovery},
        {"latency-ordering", 120.0, case_latency_ordering},
        {"determinism", 600.0, case_determinism},
    };
    return cases;
}

std::vector<std::string> load_suite(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open suite file '" + path + "'");
    std::vector<std::string> names;
    std::string line;
    while (std::getline(f, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        names.push_back(line.substr(b, e - b + 1));
    }
    return names;
}

int run_acceptance(const std::vector<std::string>& names, std::ostream& os,
                   bool run_all_when_empty) {
    std::vector<const AcceptCase*> selected;
    if (names.empty() && run_all_when_empty) {
        for (const auto& c : acceptance_cases()) selected.push_back(&c);
    } else {
        for (const auto& n : names) {
            const AcceptCase* found = nullptr;
            for (const auto& c : acceptance_cases())
                if (c.name == n) found = &c;
            if (!found) throw Error("unknown acceptance case '" + n + "'");
            selected.push_back(found);
        }
    }
    int failed = 0;
    for (const AcceptCase* c : selected) {
        CaseResult r;
        auto t0 = std::chrono::steady_clock::now();
        try {
            r = c->fn();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what(), "no exception"};
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (elapsed > c->budget_s) {
            r.pass = false;
            r.measured += " [timeout " + fmt(elapsed) + "s]";
            r.threshold += " budget=" + fmt(c->budget_s) + "s";
        }
        if (!r.pass) failed++;
        os << "CASE " << c->name << ' ' << (r.pass ? "PASS" : "FAIL") << ' ' << r.measured << ' '
           << r.threshold << '\n';
        os.flush();
    }
    return failed;
}

}  // namespace accerl
