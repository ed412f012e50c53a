#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "accerl/kernels.hpp"
#include "accerl/math.hpp"
#include "accerl/tensor.hpp"

namespace accerl {

enum class LayerKind : uint8_t { Dense = 0, Conv2d = 1, Relu = 2 };

struct LayerSpec {
    LayerKind kind = LayerKind::Dense;
    // dense
    int in_dim = 0, out_dim = 0;
    // conv2d (valid padding)
    int in_ch = 0, out_ch = 0, kh = 0, kw = 0, stride = 1;

    static LayerSpec dense(int in, int out) {
        LayerSpec l;
        l.kind = LayerKind::Dense;
        l.in_dim = in;
        l.out_dim = out;
        return l;
    }
    static LayerSpec conv2d(int ic, int oc, int k, int stride) {
        LayerSpec l;
        l.kind = LayerKind::Conv2d;
        l.in_ch = ic;
        l.out_ch = oc;
        l.kh = k;
        l.kw = k;
        l.stride = stride;
        return l;
    }
    static LayerSpec relu() {
        LayerSpec l;
        l.kind = LayerKind::Relu;
        return l;
    }
    bool operator==(const LayerSpec&) const = default;
};

// Shared trunk + softmax policy head + scalar value head. Both heads are
// dense layers reading the final trunk activation.
struct ActorCriticSpec {
    std::vector<int> input_shape;  // {D} or {C,H,W}
    std::vector<LayerSpec> trunk;  // conv/dense/relu sequence
    int action_count = 0;
    int trunk_out_dim = 0;  // flat size of the last trunk activation
    std::string preset_name = "custom";

    LayerSpec policy_head() const { return LayerSpec::dense(trunk_out_dim, action_count); }
    LayerSpec value_head() const { return LayerSpec::dense(trunk_out_dim, 1); }
    bool operator==(const ActorCriticSpec&) const = default;
};

template <typename T>
struct LayerParams {
    TensorT<T> W;  // dense: [out,in]; conv: [oc,ic,kh,kw]
    TensorT<T> b;  // [out] / [oc]
    bool present = false;
};

// Per-layer weights for a spec: one slot per trunk layer (empty for relu),
// then the policy head, then the value head.
template <typename T>
struct ParametersT {
    std::vector<LayerParams<T>> layers;

    int64_t total_count() const {
        int64_t n = 0;
        for (const auto& l : layers)
            if (l.present) n += l.W.numel() + l.b.numel();
        return n;
    }
};

using Parameters = ParametersT<float>;

template <typename T>
using GradientsT = ParametersT<T>;

namespace detail {
inline std::string layer_name(const LayerSpec& l, size_t idx) {
    std::ostringstream os;
    const char* k = l.kind == LayerKind::Dense ? "dense" : (l.kind == LayerKind::Conv2d ? "conv2d" : "relu");
    os << k << "[" << idx << "]";
    return os.str();
}
}  // namespace detail

// Flat output sizes and conv spatial dims per trunk layer; validates dims.
struct ShapeInfo {
    // per trunk layer: output {D} or {C,H,W}; index 0 is the input shape
    std::vector<std::vector<int>> shapes;
};

inline ShapeInfo infer_shapes(const ActorCriticSpec& spec) {
    ShapeInfo info;
    info.shapes.push_back(spec.input_shape);
    std::vector<int> cur = spec.input_shape;
    for (size_t i = 0; i < spec.trunk.size(); ++i) {
        const LayerSpec& l = spec.trunk[i];
        if (l.kind == LayerKind::Relu) {
            // shape preserved
        } else if (l.kind == LayerKind::Dense) {
            int flat = static_cast<int>(shape_numel(cur));
            if (l.in_dim != flat)
                throw Error("shape mismatch at " + detail::layer_name(l, i) + ": expects in_dim " +
                            std::to_string(l.in_dim) + ", got " + std::to_string(flat));
            if (l.out_dim < 1) throw Error("non-positive out_dim at " + detail::layer_name(l, i));
            cur = {l.out_dim};
        } else {
            if (cur.size() != 3 || cur[0] != l.in_ch)
                throw Error("shape mismatch at " + detail::layer_name(l, i) + ": conv expects " +
                            std::to_string(l.in_ch) + " input channels");
            int oh = (cur[1] - l.kh) / l.stride + 1;
            int ow = (cur[2] - l.kw) / l.stride + 1;
            if (oh < 1 || ow < 1)
                throw Error("conv output collapses at " + detail::layer_name(l, i) +
                            ": input " + std::to_string(cur[1]) + "x" + std::to_string(cur[2]) +
                            " needs at least " + std::to_string(l.kh) + "x" + std::to_string(l.kw));
            cur = {l.out_ch, oh, ow};
        }
        info.shapes.push_back(cur);
    }
    return info;
}

inline int trunk_out_dim(const ActorCriticSpec& spec) {
    auto info = infer_shapes(spec);
    return static_cast<int>(shape_numel(info.shapes.back()));
}

template <typename T>
void check_params(const ActorCriticSpec& spec, const ParametersT<T>& params) {
    if (params.layers.size() != spec.trunk.size() + 2) throw Error("params: layer count mismatch");
    auto check = [](const LayerSpec& l, const LayerParams<T>& p, size_t idx) {
        if (l.kind == LayerKind::Relu) {
            if (p.present) throw Error("params: relu layer has weights at index " + std::to_string(idx));
            return;
        }
        if (!p.present) throw Error("params: missing weights at " + detail::layer_name(l, idx));
        int64_t want_w = l.kind == LayerKind::Dense
                             ? static_cast<int64_t>(l.in_dim) * l.out_dim
                             : static_cast<int64_t>(l.out_ch) * l.in_ch * l.kh * l.kw;
        int64_t want_b = l.kind == LayerKind::Dense ? l.out_dim : l.out_ch;
        if (p.W.numel() != want_w || p.b.numel() != want_b)
            throw Error("params: shape mismatch at " + detail::layer_name(l, idx));
    };
    for (size_t i = 0; i < spec.trunk.size(); ++i) check(spec.trunk[i], params.layers[i], i);
    check(spec.policy_head(), params.layers[spec.trunk.size()], spec.trunk.size());
    check(spec.value_head(), params.layers[spec.trunk.size() + 1], spec.trunk.size() + 1);
}

template <typename T>
ParametersT<T> zero_params(const ActorCriticSpec& spec) {
    ParametersT<T> p;
    auto add = [&](const LayerSpec& l) {
        LayerParams<T> lp;
        if (l.kind != LayerKind::Relu) {
            lp.present = true;
            if (l.kind == LayerKind::Dense) {
                lp.W = TensorT<T>::zeros({l.out_dim, l.in_dim});
                lp.b = TensorT<T>::zeros({l.out_dim});
            } else {
                lp.W = TensorT<T>::zeros({l.out_ch, l.in_ch, l.kh, l.kw});
                lp.b = TensorT<T>::zeros({l.out_ch});
            }
        }
        p.layers.push_back(std::move(lp));
    };
    for (const auto& l : spec.trunk) add(l);
    add(spec.policy_head());
    add(spec.value_head());
    return p;
}

// Uniform He-style init, deterministic per seed.
template <typename T>
ParametersT<T> init_params(const ActorCriticSpec& spec, uint64_t seed) {
    infer_shapes(spec);
    ParametersT<T> p = zero_params<T>(spec);
    std::mt19937_64 rng(seed);
    for (auto& lp : p.layers) {
        if (!lp.present) continue;
        int fan_in, fan_out;
        if (lp.W.shape.size() == 2) {
            fan_out = lp.W.shape[0];
            fan_in = lp.W.shape[1];
        } else {
            fan_out = lp.W.shape[0] * lp.W.shape[2] * lp.W.shape[3];
            fan_in = lp.W.shape[1] * lp.W.shape[2] * lp.W.shape[3];
        }
        double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& w : lp.W.data) w = static_cast<T>((uniform01(rng) * 2.0 - 1.0) * limit);
        // biases stay zero
    }
    return p;
}

template <typename T>
struct ForwardCache {
    // acts[0] = input, acts[i+1] = output of trunk layer i (flat)
    std::vector<std::vector<T>> acts;
    std::vector<T> logits;
    T value = T(0);
};

// Evaluates logits and value. The cache holds every intermediate
// activation backward() needs.
template <typename T>
ForwardCache<T> forward(const ActorCriticSpec& spec, const ParametersT<T>& params,
                        const TensorT<T>& input) {
    check_params(spec, params);
    ShapeInfo info = infer_shapes(spec);
    if (input.shape != spec.input_shape && input.numel() != shape_numel(spec.input_shape))
        throw Error("forward: input shape mismatch");

    ForwardCache<T> c;
    c.acts.reserve(spec.trunk.size() + 1);
    c.acts.push_back(input.data);
    for (size_t i = 0; i < spec.trunk.size(); ++i) {
        const LayerSpec& l = spec.trunk[i];
        const std::vector<T>& x = c.acts.back();
        std::vector<T> y;
        if (l.kind == LayerKind::Relu) {
            y = x;
            for (T& v : y) v = std::max(v, T(0));
        } else if (l.kind == LayerKind::Dense) {
            y.resize(l.out_dim);
            kernels::dense_forward(params.layers[i].W.ptr(), params.layers[i].b.ptr(), x.data(),
                                   y.data(), l.out_dim, l.in_dim);
        } else {
            const auto& in_s = info.shapes[i];
            const auto& out_s = info.shapes[i + 1];
            y.resize(shape_numel(out_s));
            kernels::conv2d_forward(params.layers[i].W.ptr(), params.layers[i].b.ptr(), x.data(),
                                    y.data(), in_s[0], in_s[1], in_s[2], l.out_ch, l.kh, l.kw,
                                    l.stride, out_s[1], out_s[2]);
        }
        c.acts.push_back(std::move(y));
    }
    const std::vector<T>& trunk_out = c.acts.back();
    const auto& ph = params.layers[spec.trunk.size()];
    const auto& vh = params.layers[spec.trunk.size() + 1];
    c.logits.resize(spec.action_count);
    kernels::dense_forward(ph.W.ptr(), ph.b.ptr(), trunk_out.data(), c.logits.data(),
                           spec.action_count, spec.trunk_out_dim);
    T v;
    kernels::dense_forward(vh.W.ptr(), vh.b.ptr(), trunk_out.data(), &v, 1, spec.trunk_out_dim);
    c.value = v;
    return c;
}

namespace detail {

template <typename T>
void dense_backward(const LayerSpec& l, const LayerParams<T>& p, const std::vector<T>& x,
                    const std::vector<T>& dy, LayerParams<T>& g, std::vector<T>& dx) {
    for (int o = 0; o < l.out_dim; ++o) {
        g.b.data[o] += dy[o];
        T* grow = g.W.ptr() + static_cast<int64_t>(o) * l.in_dim;
        for (int i = 0; i < l.in_dim; ++i) grow[i] += dy[o] * x[i];
    }
    dx.assign(l.in_dim, T(0));
    for (int o = 0; o < l.out_dim; ++o) {
        const T* row = p.W.ptr() + static_cast<int64_t>(o) * l.in_dim;
        for (int i = 0; i < l.in_dim; ++i) dx[i] += row[i] * dy[o];
    }
}

template <typename T>
void conv_backward(const LayerSpec& l, const LayerParams<T>& p, const std::vector<T>& x,
                   const std::vector<T>& dy, const std::vector<int>& in_s,
                   const std::vector<int>& out_s, LayerParams<T>& g, std::vector<T>& dx) {
    const int ih = in_s[1], iw = in_s[2], oh = out_s[1], ow = out_s[2];
    dx.assign(x.size(), T(0));
    for (int oc = 0; oc < l.out_ch; ++oc) {
        for (int r = 0; r < oh; ++r) {
            for (int c = 0; c < ow; ++c) {
                T d = dy[(static_cast<int64_t>(oc) * oh + r) * ow + c];
                g.b.data[oc] += d;
                for (int ic = 0; ic < l.in_ch; ++ic) {
                    int64_t xbase = (static_cast<int64_t>(ic) * ih + r * l.stride) * iw + c * l.stride;
                    int64_t wbase = ((static_cast<int64_t>(oc) * l.in_ch + ic) * l.kh) * l.kw;
                    for (int i = 0; i < l.kh; ++i) {
                        for (int j = 0; j < l.kw; ++j) {
                            g.W.data[wbase + i * l.kw + j] += d * x[xbase + static_cast<int64_t>(i) * iw + j];
                            dx[xbase + static_cast<int64_t>(i) * iw + j] += d * p.W.data[wbase + i * l.kw + j];
                        }
                    }
                }
            }
        }
    }
}

}  // namespace detail

// Exact backprop through the trunk and both heads. dlogits/dvalue are the
// loss derivatives at the outputs.
template <typename T>
GradientsT<T> backward(const ActorCriticSpec& spec, const ParametersT<T>& params,
                       const ForwardCache<T>& cache, const std::vector<T>& dlogits, T dvalue) {
    if (cache.acts.size() != spec.trunk.size() + 1)
        throw Error("backward: cache does not match spec (stale cache?)");
    if (static_cast<int>(dlogits.size()) != spec.action_count)
        throw Error("backward: dlogits length mismatch");
    ShapeInfo info = infer_shapes(spec);
    GradientsT<T> g = zero_params<T>(spec);
    accumulate_backward(spec, params, cache, dlogits, dvalue, info, g);
    return g;
}

// Accumulating variant used when summing gradients over a batch.
template <typename T>
void accumulate_backward(const ActorCriticSpec& spec, const ParametersT<T>& params,
                         const ForwardCache<T>& cache, const std::vector<T>& dlogits, T dvalue,
                         const ShapeInfo& info, GradientsT<T>& g) {
    const size_t nt = spec.trunk.size();
    const std::vector<T>& trunk_out = cache.acts.back();
    // heads
    std::vector<T> dtrunk(trunk_out.size(), T(0));
    {
        const auto& ph = params.layers[nt];
        auto& gp = g.layers[nt];
        for (int o = 0; o < spec.action_count; ++o) {
            gp.b.data[o] += dlogits[o];
            const T* row = ph.W.ptr() + static_cast<int64_t>(o) * spec.trunk_out_dim;
            T* grow = gp.W.ptr() + static_cast<int64_t>(o) * spec.trunk_out_dim;
            for (int i = 0; i < spec.trunk_out_dim; ++i) {
                grow[i] += dlogits[o] * trunk_out[i];
                dtrunk[i] += row[i] * dlogits[o];
            }
        }
        const auto& vh = params.layers[nt + 1];
        auto& gv = g.layers[nt + 1];
        gv.b.data[0] += dvalue;
        for (int i = 0; i < spec.trunk_out_dim; ++i) {
            gv.W.data[i] += dvalue * trunk_out[i];
            dtrunk[i] += vh.W.data[i] * dvalue;
        }
    }
    // trunk, reversed
    std::vector<T> dy = std::move(dtrunk);
    for (size_t ii = nt; ii-- > 0;) {
        const LayerSpec& l = spec.trunk[ii];
        const std::vector<T>& x = cache.acts[ii];
        std::vector<T> dx;
        if (l.kind == LayerKind::Relu) {
            dx = dy;
            for (size_t k = 0; k < dx.size(); ++k)
                if (x[k] <= T(0)) dx[k] = T(0);
        } else if (l.kind == LayerKind::Dense) {
            detail::dense_backward(l, params.layers[ii], x, dy, g.layers[ii], dx);
        } else {
            detail::conv_backward(l, params.layers[ii], x, dy, info.shapes[ii], info.shapes[ii + 1],
                                  g.layers[ii], dx);
        }
        dy = std::move(dx);
    }
}

template <typename T, typename U>
ParametersT<T> params_cast(const ParametersT<U>& src) {
    ParametersT<T> out;
    out.layers.reserve(src.layers.size());
    for (const auto& l : src.layers) {
        LayerParams<T> lp;
        lp.present = l.present;
        if (l.present) {
            lp.W = tensor_cast<T>(l.W);
            lp.b = tensor_cast<T>(l.b);
        }
        out.layers.push_back(std::move(lp));
    }
    return out;
}

}  // namespace accerl
