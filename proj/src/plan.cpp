#include "accerl/plan.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "accerl/kernels.hpp"

namespace accerl {

bool op_is_quant(OpKind k) {
    return k == OpKind::QDense || k == OpKind::QDenseRelu || k == OpKind::QConv ||
           k == OpKind::QConvRelu;
}
bool op_is_conv(OpKind k) {
    return k == OpKind::Conv || k == OpKind::ConvRelu || k == OpKind::QConv ||
           k == OpKind::QConvRelu;
}
bool op_is_parametric(OpKind k) { return k != OpKind::Relu; }

int quant_max(int bits) {
    if (bits != 8 && bits != 16) throw Error("quantization bits must be 8 or 16");
    return (1 << (bits - 1)) - 1;
}

QuantizedTensor quantize_tensor(const std::vector<float>& w, int bits) {
    const int qmax = quant_max(bits);
    float max_abs = 0.0f;
    for (float v : w) max_abs = std::max(max_abs, std::abs(v));
    QuantizedTensor out;
    out.scale = max_abs > 0.0f ? max_abs / static_cast<float>(qmax) : 1.0f;
    out.q.resize(w.size());
    for (size_t i = 0; i < w.size(); ++i) {
        // round half away from zero
        double q = std::round(static_cast<double>(w[i]) / out.scale);
        out.q[i] = static_cast<int32_t>(std::clamp<double>(q, -qmax, qmax));
    }
    return out;
}

CompiledPolicy build_plan(const PolicySnapshot& snap) {
    check_params(snap.spec, snap.params);
    ShapeInfo info = infer_shapes(snap.spec);
    CompiledPolicy p;
    p.spec = snap.spec;
    p.prov.source_version = snap.version;
    p.buf_sizes.push_back(static_cast<int>(shape_numel(snap.spec.input_shape)));
    int cur_buf = 0;
    for (size_t i = 0; i < snap.spec.trunk.size(); ++i) {
        const LayerSpec& l = snap.spec.trunk[i];
        PlanOp op;
        op.in_buf = cur_buf;
        if (l.kind == LayerKind::Relu) {
            op.kind = OpKind::Relu;
            op.in_dim = op.out_dim = static_cast<int>(shape_numel(info.shapes[i]));
        } else if (l.kind == LayerKind::Dense) {
            op.kind = OpKind::Dense;
            op.in_dim = l.in_dim;
            op.out_dim = l.out_dim;
            op.W = snap.params.layers[i].W.data;
            op.b = snap.params.layers[i].b.data;
        } else {
            op.kind = OpKind::Conv;
            op.in_ch = l.in_ch;
            op.out_ch = l.out_ch;
            op.kh = l.kh;
            op.kw = l.kw;
            op.stride = l.stride;
            op.ih = info.shapes[i][1];
            op.iw = info.shapes[i][2];
            op.oh = info.shapes[i + 1][1];
            op.ow = info.shapes[i + 1][2];
            op.in_dim = static_cast<int>(shape_numel(info.shapes[i]));
            op.out_dim = static_cast<int>(shape_numel(info.shapes[i + 1]));
            op.W = snap.params.layers[i].W.data;
            op.b = snap.params.layers[i].b.data;
        }
        p.buf_sizes.push_back(op.out_dim);
        op.out_buf = static_cast<int>(p.buf_sizes.size()) - 1;
        cur_buf = op.out_buf;
        p.ops.push_back(std::move(op));
    }
    const size_t nt = snap.spec.trunk.size();
    auto add_head = [&](const LayerParams<float>& lp, int out_dim) {
        PlanOp op;
        op.kind = OpKind::Dense;
        op.in_buf = cur_buf;
        op.in_dim = snap.spec.trunk_out_dim;
        op.out_dim = out_dim;
        op.W = lp.W.data;
        op.b = lp.b.data;
        p.buf_sizes.push_back(out_dim);
        op.out_buf = static_cast<int>(p.buf_sizes.size()) - 1;
        p.ops.push_back(std::move(op));
        return op.out_buf;
    };
    p.logits_buf = add_head(snap.params.layers[nt], snap.spec.action_count);
    p.value_buf = add_head(snap.params.layers[nt + 1], 1);
    p.checksum = p.compute_checksum();
    return p;
}

void fuse_plan(CompiledPolicy& plan) {
    std::vector<PlanOp> out;
    for (size_t i = 0; i < plan.ops.size(); ++i) {
        PlanOp op = plan.ops[i];
        if (i + 1 < plan.ops.size() && plan.ops[i + 1].kind == OpKind::Relu &&
            plan.ops[i + 1].in_buf == op.out_buf) {
            bool merged = true;
            switch (op.kind) {
                case OpKind::Dense: op.kind = OpKind::DenseRelu; break;
                case OpKind::Conv: op.kind = OpKind::ConvRelu; break;
                case OpKind::QDense: op.kind = OpKind::QDenseRelu; break;
                case OpKind::QConv: op.kind = OpKind::QConvRelu; break;
                default: merged = false;
            }
            if (merged) {
                op.out_buf = plan.ops[i + 1].out_buf;
                ++i;
            }
        }
        out.push_back(std::move(op));
    }
    plan.ops = std::move(out);
    plan.fused = true;
    plan.prov.stages.push_back("fuse");
    plan.checksum = plan.compute_checksum();
}

void freeze_plan(CompiledPolicy& plan) {
    plan.frozen = true;
    plan.prov.stages.push_back("freeze");
    plan.checksum = plan.compute_checksum();
}

void quantize_plan(CompiledPolicy& plan, const std::vector<Tensor>& calibration, int bits) {
    if (calibration.empty()) throw Error("quantize: no calibration observations");
    const int qmax = quant_max(bits);
    // Per-op running max of |input| over the calibration set, collected by
    // executing the current (fp32) plan.
    std::vector<float> in_max(plan.ops.size(), 0.0f);
    {
        std::vector<std::vector<float>> bufs(plan.buf_sizes.size());
        for (size_t i = 0; i < bufs.size(); ++i) bufs[i].assign(plan.buf_sizes[i], 0.0f);
        for (const Tensor& obs : calibration) {
            std::copy(obs.data.begin(), obs.data.end(), bufs[0].begin());
            for (size_t oi = 0; oi < plan.ops.size(); ++oi) {
                const PlanOp& op = plan.ops[oi];
                const auto& x = bufs[op.in_buf];
                if (op_is_parametric(op.kind)) {
                    for (float v : x) in_max[oi] = std::max(in_max[oi], std::abs(v));
                }
                auto& y = bufs[op.out_buf];
                if (op.kind == OpKind::Relu) {
                    for (size_t k = 0; k < x.size(); ++k) y[k] = std::max(x[k], 0.0f);
                } else if (op_is_conv(op.kind)) {
                    kernels::conv2d_forward_ref(op.W.data(), op.b.data(), x.data(), y.data(),
                                                op.in_ch, op.ih, op.iw, op.out_ch, op.kh, op.kw,
                                                op.stride, op.oh, op.ow);
                    if (op.kind == OpKind::ConvRelu)
                        for (auto& v : y) v = std::max(v, 0.0f);
                } else {
                    kernels::dense_forward_ref(op.W.data(), op.b.data(), x.data(), y.data(),
                                               op.out_dim, op.in_dim);
                    if (op.kind == OpKind::DenseRelu)
                        for (auto& v : y) v = std::max(v, 0.0f);
                }
            }
        }
    }
    for (size_t oi = 0; oi < plan.ops.size(); ++oi) {
        PlanOp& op = plan.ops[oi];
        if (!op_is_parametric(op.kind) || op_is_quant(op.kind)) continue;
        QuantizedTensor qt = quantize_tensor(op.W, bits);
        op.Wq = std::move(qt.q);
        op.w_scale = qt.scale;
        op.x_scale = in_max[oi] > 0.0f ? in_max[oi] / static_cast<float>(qmax) : 1.0f;
        op.bits = bits;
        op.W.clear();
        switch (op.kind) {
            case OpKind::Dense: op.kind = OpKind::QDense; break;
            case OpKind::DenseRelu: op.kind = OpKind::QDenseRelu; break;
            case OpKind::Conv: op.kind = OpKind::QConv; break;
            case OpKind::ConvRelu: op.kind = OpKind::QConvRelu; break;
            default: break;
        }
    }
    plan.prov.bits = bits;
    plan.prov.stages.push_back("quant:" + std::to_string(bits));
    plan.checksum = plan.compute_checksum();
}

// --------------------------------------------------------------- execution

PlanRunner::PlanRunner(PlanPtr plan) : plan_(std::move(plan)) {
    if (plan_->checksum != plan_->compute_checksum())
        throw Error("torn plan artifact: checksum mismatch");
    if (plan_->frozen) ensure_buffers();
}

void PlanRunner::ensure_buffers() {
    bufs_.resize(plan_->buf_sizes.size());
    for (size_t i = 0; i < bufs_.size(); ++i) bufs_[i].assign(plan_->buf_sizes[i], 0.0f);
    int max_in = 1;
    for (const PlanOp& op : plan_->ops)
        if (op_is_quant(op.kind)) max_in = std::max(max_in, op.in_dim);
    qscratch_.assign(max_in, 0);
    dist_scratch_.assign(plan_->spec.action_count, 0.0f);
}

const std::vector<float>& PlanRunner::infer(const Tensor& obs) {
    if (obs.numel() != plan_->buf_sizes[0]) throw Error("plan run: input shape mismatch");
    if (!plan_->frozen) ensure_buffers();  // dynamic mode allocates per call
    std::copy(obs.data.begin(), obs.data.end(), bufs_[0].begin());
    for (const PlanOp& op : plan_->ops) {
        const auto& x = bufs_[op.in_buf];
        auto& y = bufs_[op.out_buf];
        switch (op.kind) {
            case OpKind::Relu:
                for (int k = 0; k < op.in_dim; ++k) y[k] = std::max(x[k], 0.0f);
                break;
            case OpKind::Dense:
                kernels::dense_forward(op.W.data(), op.b.data(), x.data(), y.data(), op.out_dim,
                                       op.in_dim);
                break;
            case OpKind::DenseRelu:
                kernels::dense_forward<float, true>(op.W.data(), op.b.data(), x.data(), y.data(),
                                                    op.out_dim, op.in_dim);
                break;
            case OpKind::Conv:
                kernels::conv2d_forward(op.W.data(), op.b.data(), x.data(), y.data(), op.in_ch,
                                        op.ih, op.iw, op.out_ch, op.kh, op.kw, op.stride, op.oh,
                                        op.ow);
                break;
            case OpKind::ConvRelu:
                kernels::conv2d_forward<float, true>(op.W.data(), op.b.data(), x.data(), y.data(),
                                                     op.in_ch, op.ih, op.iw, op.out_ch, op.kh,
                                                     op.kw, op.stride, op.oh, op.ow);
                break;
            case OpKind::QDense:
            case OpKind::QDenseRelu:
            case OpKind::QConv:
            case OpKind::QConvRelu: {
                const int qmax = quant_max(op.bits);
                for (int k = 0; k < op.in_dim; ++k) {
                    double q = std::round(static_cast<double>(x[k]) / op.x_scale);
                    qscratch_[k] = static_cast<int32_t>(std::clamp<double>(q, -qmax, qmax));
                }
                const bool relu = op.kind == OpKind::QDenseRelu || op.kind == OpKind::QConvRelu;
                if (op_is_conv(op.kind)) {
                    auto* fn = relu ? kernels::qconv2d_forward<true> : kernels::qconv2d_forward<false>;
                    fn(op.Wq.data(), op.b.data(), qscratch_.data(), y.data(), op.in_ch, op.ih,
                       op.iw, op.out_ch, op.kh, op.kw, op.stride, op.oh, op.ow, op.w_scale,
                       op.x_scale);
                } else {
                    auto* fn = relu ? kernels::qdense_forward<true> : kernels::qdense_forward<false>;
                    fn(op.Wq.data(), op.b.data(), qscratch_.data(), y.data(), op.out_dim,
                       op.in_dim, op.w_scale, op.x_scale);
                }
                break;
            }
        }
    }
    // softmax into preallocated scratch
    const auto& logits = bufs_[plan_->logits_buf];
    float m = logits[0];
    for (float v : logits) m = std::max(m, v);
    float z = 0.0f;
    for (size_t i = 0; i < logits.size(); ++i) {
        dist_scratch_[i] = std::exp(logits[i] - m);
        z += dist_scratch_[i];
    }
    for (auto& v : dist_scratch_) v /= z;
    value_ = bufs_[plan_->value_buf][0];
    return dist_scratch_;
}

PlanRunner::Output PlanRunner::run(const Tensor& obs) {
    Output out;
    out.dist = infer(obs);
    out.logits = last_logits();
    out.value = value_;
    return out;
}

// ------------------------------------------------------------ provenance

namespace {
template <typename T>
void append_pod(std::vector<uint8_t>& v, const T& x) {
    const auto* p = reinterpret_cast<const uint8_t*>(&x);
    v.insert(v.end(), p, p + sizeof(T));
}
template <typename T>
void append_vec(std::vector<uint8_t>& v, const std::vector<T>& x) {
    append_pod(v, static_cast<uint64_t>(x.size()));
    const auto* p = reinterpret_cast<const uint8_t*>(x.data());
    v.insert(v.end(), p, p + x.size() * sizeof(T));
}
}  // namespace

std::vector<uint8_t> CompiledPolicy::payload_bytes() const {
    std::vector<uint8_t> out;
    append_pod(out, prov.source_version);
    append_pod(out, prov.sparsity);
    append_pod(out, static_cast<int32_t>(prov.bits));
    append_pod(out, static_cast<uint8_t>(frozen));
    append_pod(out, static_cast<uint8_t>(fused));
    append_pod(out, static_cast<uint64_t>(prov.stages.size()));
    for (const auto& s : prov.stages) {
        append_pod(out, static_cast<uint64_t>(s.size()));
        out.insert(out.end(), s.begin(), s.end());
    }
    append_pod(out, static_cast<uint64_t>(ops.size()));
    for (const PlanOp& op : ops) {
        append_pod(out, static_cast<uint8_t>(op.kind));
        append_pod(out, op.in_buf);
        append_pod(out, op.out_buf);
        append_pod(out, op.in_dim);
        append_pod(out, op.out_dim);
        append_pod(out, op.in_ch);
        append_pod(out, op.out_ch);
        append_pod(out, op.kh);
        append_pod(out, op.kw);
        append_pod(out, op.stride);
        append_pod(out, op.ih);
        append_pod(out, op.iw);
        append_pod(out, op.oh);
        append_pod(out, op.ow);
        append_pod(out, op.w_scale);
        append_pod(out, op.x_scale);
        append_pod(out, static_cast<int32_t>(op.bits));
        append_vec(out, op.W);
        append_vec(out, op.b);
        append_vec(out, op.Wq);
    }
    return out;
}

uint64_t CompiledPolicy::compute_checksum() const {
    // FNV-1a over the payload
    uint64_t h = 1469598103934665603ULL;
    for (uint8_t b : payload_bytes()) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace accerl
