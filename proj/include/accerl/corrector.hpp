#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "accerl/policy.hpp"

namespace accerl {

// n-step rollout segment, the unit of queue transfer. Carries n+1
// observations (the last one bootstraps) and the behavior probabilities
// recorded at collection time.
struct Trajectory {
    std::vector<Tensor> obs;          // length n+1
    std::vector<int> actions;         // length n
    std::vector<double> rewards;      // length n
    std::vector<double> behavior_probs;  // mu(a_t|x_t), in (0,1]
    std::vector<uint8_t> done;        // length n
    uint64_t behavior_policy_version = 0;
    std::string behavior_provenance;  // which artifact generated it
    int n() const { return static_cast<int>(actions.size()); }
    void validate() const;
};

struct VTraceConfig {
    double rho_bar = 1.0;  // importance clip for the TD term
    double c_bar = 1.0;    // trace cutoff; rho_bar >= c_bar required
    double gamma = 0.99;
};

// Trajectories plus everything the learner's loss needs: per-step value
// targets v_s (length n+1, last is the bootstrap), clipped ratios, and
// current-policy probabilities/values evaluated at correction time.
struct CorrectedBatch {
    std::vector<Trajectory> trajectories;
    // aligned per trajectory
    std::vector<std::vector<double>> vs;       // length n+1
    std::vector<std::vector<double>> rho;      // length n
    std::vector<std::vector<double>> pi_probs; // pi(a_t|x_t), length n
    std::vector<std::vector<double>> values;   // V(x_t), length n+1
    bool corrected = false;  // false => plain n-step targets, rho == 1
};

// min(cap, pi/mu)
double is_ratio(double pi_prob, double mu_prob, double cap = 1.0);

struct VTraceResult {
    std::vector<double> vs;   // length n+1; vs[n] is the bootstrap value
    std::vector<double> rho;  // length n
};

// Backward-recursion V-trace targets. V and pi are evaluated with the
// current learner snapshot; mu comes from the trajectory.
VTraceResult vtrace_targets(const Trajectory& traj, const std::vector<double>& values,
                            const std::vector<double>& pi_probs, const VTraceConfig& cfg);

class Corrector {
  public:
    virtual ~Corrector() = default;
    virtual std::string name() const = 0;
    virtual void apply(CorrectedBatch& batch, const VTraceConfig& defaults) const = 0;
};

class VTraceCorrector : public Corrector {
  public:
    VTraceCorrector(double rho_bar, double c_bar);
    std::string name() const override { return "vtrace"; }
    void apply(CorrectedBatch& batch, const VTraceConfig& defaults) const override;

  private:
    double rho_bar_, c_bar_;
};

class ISCorrector : public Corrector {
  public:
    explicit ISCorrector(double cap);
    std::string name() const override { return "is"; }
    void apply(CorrectedBatch& batch, const VTraceConfig& defaults) const override;

  private:
    double cap_;
};

class CorrectorChain {
  public:
    CorrectorChain& add(std::shared_ptr<Corrector> c);
    const std::vector<std::shared_ptr<Corrector>>& correctors() const { return correctors_; }
    bool empty() const { return correctors_.empty(); }

    // Evaluates pi/V with the current snapshot, then applies the chain.
    // An empty chain yields plain n-step targets with rho == 1.
    CorrectedBatch apply(std::vector<Trajectory> batch, const PolicySnapshot& snapshot,
                         double gamma) const;

  private:
    std::vector<std::shared_ptr<Corrector>> correctors_;
};

// `vtrace:<rho>:<c>,is:<cap>`; empty string = empty chain.
CorrectorChain parse_correctors(const std::string& config);
std::string render_correctors(const CorrectorChain& chain);

}  // namespace accerl
