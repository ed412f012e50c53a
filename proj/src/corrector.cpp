#include "accerl/corrector.hpp"

#include <algorithm>
#include <sstream>

namespace accerl {

void Trajectory::validate() const {
    const size_t n = actions.size();
    if (n == 0) throw Error("trajectory: empty");
    if (rewards.size() != n || behavior_probs.size() != n || done.size() != n)
        throw Error("trajectory: length mismatch");
    if (obs.size() != n + 1) throw Error("trajectory: missing bootstrap observation");
    for (double mu : behavior_probs)
        if (!(mu > 0.0) || mu > 1.0) throw Error("trajectory: behavior prob outside (0,1]");
}

double is_ratio(double pi_prob, double mu_prob, double cap) {
    if (mu_prob <= 0.0) throw Error("is_ratio: mu must be positive");
    if (pi_prob < 0.0) throw Error("is_ratio: pi must be nonnegative");
    return std::min(cap, pi_prob / mu_prob);
}

VTraceResult vtrace_targets(const Trajectory& traj, const std::vector<double>& values,
                            const std::vector<double>& pi_probs, const VTraceConfig& cfg) {
    traj.validate();
    const int n = traj.n();
    if (values.size() != static_cast<size_t>(n) + 1 || pi_probs.size() != static_cast<size_t>(n))
        throw Error("vtrace: values/pi length mismatch");
    if (cfg.rho_bar < cfg.c_bar) throw Error("vtrace: rho_bar must be >= c_bar");

    VTraceResult out;
    out.vs.assign(n + 1, 0.0);
    out.rho.assign(n, 0.0);
    out.vs[n] = traj.done[n - 1] ? 0.0 : values[n];
    for (int t = n - 1; t >= 0; --t) {
        const double ratio = pi_probs[t] / traj.behavior_probs[t];
        out.rho[t] = std::min(cfg.rho_bar, ratio);
        const double c = std::min(cfg.c_bar, ratio);
        // episode boundary: V and v of the next state contribute 0
        const double v_next = traj.done[t] ? 0.0 : values[t + 1];
        const double vs_next = traj.done[t] ? 0.0 : out.vs[t + 1];
        const double delta = out.rho[t] * (traj.rewards[t] + cfg.gamma * v_next - values[t]);
        out.vs[t] = values[t] + delta + cfg.gamma * c * (vs_next - v_next);
    }
    return out;
}

VTraceCorrector::VTraceCorrector(double rho_bar, double c_bar) : rho_bar_(rho_bar), c_bar_(c_bar) {
    if (rho_bar <= 0.0 || c_bar <= 0.0) throw Error("vtrace: rho/c must be positive");
    if (rho_bar < c_bar) throw Error("vtrace: rho_bar must be >= c_bar");
}

void VTraceCorrector::apply(CorrectedBatch& batch, const VTraceConfig& defaults) const {
    VTraceConfig cfg = defaults;
    cfg.rho_bar = rho_bar_;
    cfg.c_bar = c_bar_;
    for (size_t i = 0; i < batch.trajectories.size(); ++i) {
        VTraceResult r =
            vtrace_targets(batch.trajectories[i], batch.values[i], batch.pi_probs[i], cfg);
        batch.vs[i] = std::move(r.vs);
    }
}

ISCorrector::ISCorrector(double cap) : cap_(cap) {
    if (cap <= 0.0) throw Error("is: cap must be positive");
}

void ISCorrector::apply(CorrectedBatch& batch, const VTraceConfig&) const {
    for (size_t i = 0; i < batch.trajectories.size(); ++i) {
        const Trajectory& t = batch.trajectories[i];
        for (int s = 0; s < t.n(); ++s)
            batch.rho[i][s] = is_ratio(batch.pi_probs[i][s], t.behavior_probs[s], cap_);
    }
}

CorrectorChain& CorrectorChain::add(std::shared_ptr<Corrector> c) {
    correctors_.push_back(std::move(c));
    return *this;
}

CorrectedBatch CorrectorChain::apply(std::vector<Trajectory> batch, const PolicySnapshot& snapshot,
                                     double gamma) const {
    CorrectedBatch out;
    out.trajectories = std::move(batch);
    for (const Trajectory& t : out.trajectories) {
        t.validate();
        const int n = t.n();
        std::vector<double> values(n + 1), pi(n);
        for (int s = 0; s <= n; ++s) {
            auto cache = forward(snapshot.spec, snapshot.params, t.obs[s]);
            values[s] = cache.value;
            if (s < n) {
                auto dist = softmax(cache.logits);
                pi[s] = std::max(static_cast<double>(dist[t.actions[s]]), kEpsProb);
            }
        }
        // defaults: plain n-step bootstrapped returns, rho == 1
        std::vector<double> vs(n + 1);
        vs[n] = t.done[n - 1] ? 0.0 : values[n];
        for (int s = n - 1; s >= 0; --s)
            vs[s] = t.rewards[s] + gamma * (t.done[s] ? 0.0 : vs[s + 1]);
        out.values.push_back(std::move(values));
        out.pi_probs.push_back(std::move(pi));
        out.vs.push_back(std::move(vs));
        out.rho.push_back(std::vector<double>(n, 1.0));
    }
    VTraceConfig defaults;
    defaults.gamma = gamma;
    for (const auto& c : correctors_) c->apply(out, defaults);
    out.corrected = !correctors_.empty();
    return out;
}

CorrectorChain parse_correctors(const std::string& config) {
    CorrectorChain chain;
    if (config.empty()) return chain;
    std::stringstream ss(config);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        if (item.rfind("vtrace", 0) == 0) {
            double rho = 1.0, c = 1.0;
            if (item.size() > 6) {
                std::string rest = item.substr(7);  // after "vtrace:"
                auto colon = rest.find(':');
                if (colon == std::string::npos)
                    throw Error("corrector 'vtrace' wants vtrace:<rho>:<c>");
                rho = std::stod(rest.substr(0, colon));
                c = std::stod(rest.substr(colon + 1));
            }
            chain.add(std::make_shared<VTraceCorrector>(rho, c));
        } else if (item.rfind("is", 0) == 0) {
            double cap = 1.0;
            if (item.size() > 2) cap = std::stod(item.substr(3));
            chain.add(std::make_shared<ISCorrector>(cap));
        } else {
            throw Error("unknown corrector '" + item + "' (vtrace:<rho>:<c>|is:<cap>)");
        }
    }
    return chain;
}

std::string render_correctors(const CorrectorChain& chain) {
    std::ostringstream os;
    bool first = true;
    for (const auto& c : chain.correctors()) {
        if (!first) os << ",";
        first = false;
        os << c->name();
    }
    return os.str();
}

}  // namespace accerl
