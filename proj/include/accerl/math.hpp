#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "accerl/tensor.hpp"

namespace accerl {

// Probability floor applied wherever a log or a division by a probability
// happens (KL, importance ratios, recorded behavior probs).
inline constexpr double kEpsProb = 1e-8;

// Numerically stable softmax (max subtraction), shift-invariant.
template <typename T>
std::vector<T> softmax(const std::vector<T>& logits) {
    T m = logits[0];
    for (T v : logits) m = std::max(m, v);
    std::vector<T> p(logits.size());
    T z = T(0);
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        z += p[i];
    }
    for (T& v : p) v /= z;
    return p;
}

// H(p) = -sum p log p, natural log, 0*log 0 = 0.
template <typename T>
T entropy(const std::vector<T>& p) {
    T h = T(0);
    for (T v : p)
        if (v > T(0)) h -= v * std::log(v);
    return h;
}

// KL(p||q) = sum p log(p/q); q clamped below by kEpsProb.
template <typename T>
T kl_divergence(const std::vector<T>& p, const std::vector<T>& q) {
    T d = T(0);
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= T(0)) continue;
        T qi = std::max(q[i], static_cast<T>(kEpsProb));
        d += p[i] * std::log(p[i] / qi);
    }
    return std::max(d, T(0));
}

// Deterministic 53-bit uniform in [0,1) from any 64-bit URBG.
template <typename Rng>
double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Inverse-CDF categorical sample; deterministic given the RNG stream
// (std::discrete_distribution is implementation-defined, this is not).
template <typename T, typename Rng>
int sample_categorical(const std::vector<T>& p, Rng& rng) {
    double u = uniform01(rng);
    double cum = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        cum += static_cast<double>(p[i]);
        if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(p.size()) - 1;
}

template <typename T>
int argmax_index(const std::vector<T>& p) {
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

}  // namespace accerl
