#pragma once

#include <cmath>
#include <string>

#include "accerl/net.hpp"

namespace accerl {

template <typename T>
struct AdamStateT {
    ParametersT<T> m;  // first moments, shapes mirror the parameters
    ParametersT<T> v;  // second moments
    int64_t step = 0;
    T lr = T(3e-4);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);

    static AdamStateT make(const ActorCriticSpec& spec, T lr) {
        AdamStateT s;
        s.m = zero_params<T>(spec);
        s.v = zero_params<T>(spec);
        s.lr = lr;
        return s;
    }
};

using AdamState = AdamStateT<float>;

// Standard Adam with bias correction. Returns new parameters, leaves the
// inputs untouched; state advances by one step.
template <typename T>
ParametersT<T> adam_step(const ParametersT<T>& params, const GradientsT<T>& grads,
                         AdamStateT<T>& state) {
    if (params.layers.size() != grads.layers.size() || params.layers.size() != state.m.layers.size())
        throw Error("adam_step: shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(static_cast<double>(state.beta1), static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(static_cast<double>(state.beta2), static_cast<double>(state.step));
    ParametersT<T> out = params;
    for (size_t li = 0; li < params.layers.size(); ++li) {
        if (!params.layers[li].present) continue;
        auto upd = [&](const TensorT<T>& p, const TensorT<T>& g, TensorT<T>& m, TensorT<T>& v,
                       TensorT<T>& o) {
            for (int64_t i = 0; i < p.numel(); ++i) {
                T gi = g.data[i];
                if (!std::isfinite(static_cast<double>(gi)))
                    throw Error("adam_step: non-finite gradient at layer " + std::to_string(li));
                m.data[i] = state.beta1 * m.data[i] + (T(1) - state.beta1) * gi;
                v.data[i] = state.beta2 * v.data[i] + (T(1) - state.beta2) * gi * gi;
                T mhat = static_cast<T>(m.data[i] / bc1);
                T vhat = static_cast<T>(v.data[i] / bc2);
                o.data[i] = p.data[i] - state.lr * mhat / (std::sqrt(vhat) + state.eps);
            }
        };
        upd(params.layers[li].W, grads.layers[li].W, state.m.layers[li].W, state.v.layers[li].W,
            out.layers[li].W);
        upd(params.layers[li].b, grads.layers[li].b, state.m.layers[li].b, state.v.layers[li].b,
            out.layers[li].b);
    }
    return out;
}

}  // namespace accerl
