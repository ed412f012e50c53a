#include "accerl/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace accerl {

std::string action_name(const StrategyAction& a) {
    if (std::holds_alternative<NoAction>(a)) return "none";
    if (const auto* b = std::get_if<SetBits>(&a)) return "bits" + std::to_string(b->bits);
    if (const auto* s = std::get_if<SetSparsity>(&a)) {
        std::ostringstream os;
        os << "sparsity" << s->sparsity;
        return os.str();
    }
    const auto& al = std::get<SetAlpha>(a);
    std::ostringstream os;
    os << "alpha" << al.alpha;
    return os.str();
}

KlMaxThresholdStrategy::KlMaxThresholdStrategy(double epsilon, int target_bits, bool rearm)
    : epsilon_(epsilon), target_bits_(target_bits), rearm_(rearm) {
    if (epsilon <= 0.0) throw Error("klmax strategy: threshold must be positive");
}

StrategyAction KlMaxThresholdStrategy::observe(const IndicatorSample& sample) {
    if (fired_ && !rearm_) return NoAction{};
    if (sample.kl_max > epsilon_ && !fired_) {
        fired_ = true;
        return SetBits{target_bits_};
    }
    return NoAction{};
}

RewardGapThresholdStrategy::RewardGapThresholdStrategy(double delta, float target_sparsity,
                                                       bool rearm)
    : delta_(delta), target_sparsity_(target_sparsity), rearm_(rearm) {
    if (delta <= 0.0) throw Error("gap strategy: threshold must be positive");
}

StrategyAction RewardGapThresholdStrategy::observe(const IndicatorSample& sample) {
    if (fired_ && !rearm_) return NoAction{};
    if (sample.reward_gap > delta_ && !fired_) {
        fired_ = true;
        return SetSparsity{target_sparsity_};
    }
    return NoAction{};
}

LinearAlphaStrategy::LinearAlphaStrategy(double kl_ref) : kl_ref_(kl_ref) {
    if (kl_ref <= 0.0) throw Error("linalpha strategy: kl_ref must be positive");
}

double LinearAlphaStrategy::alpha_for(double kl_mean) const {
    return std::clamp(1.0 - kl_mean / kl_ref_, 0.0, 1.0);
}

StrategyAction LinearAlphaStrategy::observe(const IndicatorSample& sample) {
    return SetAlpha{alpha_for(sample.kl_mean)};
}

std::vector<std::shared_ptr<Strategy>> parse_strategies(const std::string& config) {
    std::vector<std::shared_ptr<Strategy>> out;
    if (config.empty()) return out;
    std::stringstream ss(config);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        if (item.rfind("klmax:", 0) == 0) {
            std::string rest = item.substr(6);
            auto arrow = rest.find("->");
            double eps = std::stod(rest.substr(0, arrow));
            int bits = 16;
            if (arrow != std::string::npos) {
                std::string target = rest.substr(arrow + 2);
                if (target.rfind("bits", 0) != 0)
                    throw Error("klmax strategy target must be bits<k>, got '" + target + "'");
                bits = std::stoi(target.substr(4));
            }
            out.push_back(std::make_shared<KlMaxThresholdStrategy>(eps, bits));
        } else if (item.rfind("gap:", 0) == 0) {
            std::string rest = item.substr(4);
            auto arrow = rest.find("->");
            double delta = std::stod(rest.substr(0, arrow));
            float sp = 0.2f;
            if (arrow != std::string::npos) {
                std::string target = rest.substr(arrow + 2);
                if (target.rfind("sparsity", 0) != 0)
                    throw Error("gap strategy target must be sparsity<s>, got '" + target + "'");
                sp = std::stof(target.substr(8));
            }
            out.push_back(std::make_shared<RewardGapThresholdStrategy>(delta, sp));
        } else if (item.rfind("linalpha:", 0) == 0) {
            out.push_back(std::make_shared<LinearAlphaStrategy>(std::stod(item.substr(9))));
        } else {
            throw Error("unknown monitor strategy '" + item +
                        "' (klmax:<eps>->bits16|gap:<delta>->sparsity<s>|linalpha:<ref>)");
        }
    }
    return out;
}

void kl_statistics(const PolicySnapshot& teacher, const CompiledPolicy& compressed,
                   const std::vector<Tensor>& eval_states, IndicatorSample& out) {
    if (eval_states.empty()) throw Error("compute_indicators: empty evaluation state set");
    PlanRunner runner(std::make_shared<CompiledPolicy>(compressed));
    std::vector<double> kls;
    kls.reserve(eval_states.size());
    double entropy_sum = 0.0;
    for (const Tensor& s : eval_states) {
        auto tcache = forward(teacher.spec, teacher.params, s);
        std::vector<float> tpf = softmax(tcache.logits);
        const std::vector<float>& cpf = runner.infer(s);
        std::vector<double> tp(tpf.begin(), tpf.end());
        std::vector<double> cp(cpf.begin(), cpf.end());
        kls.push_back(kl_divergence(tp, cp));
        entropy_sum += entropy(tp);
    }
    double mean = 0.0, mx = 0.0;
    for (double k : kls) {
        mean += k;
        mx = std::max(mx, k);
    }
    mean /= static_cast<double>(kls.size());
    double var = 0.0;
    if (kls.size() > 1) {
        for (double k : kls) var += (k - mean) * (k - mean);
        var /= static_cast<double>(kls.size() - 1);
    }
    out.kl_mean = mean;
    out.kl_max = mx;
    out.kl_var = var;
    out.entropy_mean = entropy_sum / static_cast<double>(kls.size());
}

namespace {

double greedy_snapshot_return(const PolicySnapshot& snap, Env& env, uint64_t seed) {
    std::mt19937_64 rng(seed);
    Tensor obs = env.reset(seed);
    double total = 0.0;
    while (true) {
        ActResult a = act(snap.spec, snap.params, obs, rng, /*greedy=*/true);
        StepResult r = env.step(a.action);
        total += r.reward;
        if (r.done) break;
        obs = std::move(r.obs);
    }
    return total;
}

double greedy_plan_return(PlanRunner& runner, Env& env, uint64_t seed) {
    std::mt19937_64 rng(seed);
    Tensor obs = env.reset(seed);
    double total = 0.0;
    while (true) {
        ActResult a = runner.act(obs, rng, /*greedy=*/true);
        StepResult r = env.step(a.action);
        total += r.reward;
        if (r.done) break;
        obs = std::move(r.obs);
    }
    return total;
}

}  // namespace

IndicatorSample compute_indicators(const PolicySnapshot& teacher, const CompiledPolicy& compressed,
                                   const std::vector<Tensor>& eval_states,
                                   const std::function<std::unique_ptr<Env>()>& env_factory,
                                   int eval_episodes, uint64_t eval_seed) {
    IndicatorSample out;
    kl_statistics(teacher, compressed, eval_states, out);
    if (eval_episodes > 0 && env_factory) {
        PlanRunner runner(std::make_shared<CompiledPolicy>(compressed));
        auto env = env_factory();
        double ro = 0.0, rc = 0.0;
        for (int e = 0; e < eval_episodes; ++e) {
            ro += greedy_snapshot_return(teacher, *env, eval_seed + static_cast<uint64_t>(e));
            rc += greedy_plan_return(runner, *env, eval_seed + static_cast<uint64_t>(e));
        }
        out.reward_original = ro / eval_episodes;
        out.reward_compressed = rc / eval_episodes;
        out.reward_gap = out.reward_original - out.reward_compressed;
    }
    return out;
}

}  // namespace accerl
