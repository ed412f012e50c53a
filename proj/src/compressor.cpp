#include "accerl/compressor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace accerl {

std::string stage_kind_name(StageKind k) {
    switch (k) {
        case StageKind::Prune: return "prune";
        case StageKind::Distill: return "distill";
        case StageKind::Quantize: return "quant";
        case StageKind::Fuse: return "fuse";
        case StageKind::Freeze: return "freeze";
    }
    return "?";
}

CompressorChain& CompressorChain::add(CompressorStage stage) {
    for (const auto& s : stages_)
        if (s.kind == stage.kind)
            throw Error("chain already has a " + stage_kind_name(stage.kind) + " stage");
    if (!stages_.empty() && static_cast<int>(stage.kind) <= static_cast<int>(stages_.back().kind))
        throw Error("chain ordering violated: " + stage_kind_name(stage.kind) + " cannot follow " +
                    stage_kind_name(stages_.back().kind) +
                    " (required order: prune,distill,quant,fuse,freeze)");
    if (stage.kind == StageKind::Prune &&
        (stage.prune.sparsity < 0.0f || stage.prune.sparsity >= 1.0f))
        throw Error("prune sparsity must be in [0,1)");
    if (stage.kind == StageKind::Quantize) quant_max(stage.quant.bits);  // validates
    stages_.push_back(std::move(stage));
    return *this;
}

bool CompressorChain::has(StageKind k) const {
    return std::any_of(stages_.begin(), stages_.end(),
                       [&](const CompressorStage& s) { return s.kind == k; });
}

CompressorStage& CompressorChain::stage(StageKind k) {
    for (auto& s : stages_)
        if (s.kind == k) return s;
    throw Error("chain has no " + stage_kind_name(k) + " stage");
}

void CompressorChain::set_sparsity(float s) {
    if (s < 0.0f || s >= 1.0f) throw Error("sparsity must be in [0,1)");
    stage(StageKind::Prune).prune.sparsity = s;
}

void CompressorChain::set_bits(int bits) {
    quant_max(bits);
    stage(StageKind::Quantize).quant.bits = bits;
}

float CompressorChain::sparsity() const {
    for (const auto& s : stages_)
        if (s.kind == StageKind::Prune) return s.prune.sparsity;
    return 0.0f;
}

int CompressorChain::bits() const {
    for (const auto& s : stages_)
        if (s.kind == StageKind::Quantize) return s.quant.bits;
    return 0;
}

CompressorChain parse_chain(const std::string& config) {
    CompressorChain chain;
    if (config.empty()) return chain;
    std::stringstream ss(config);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        CompressorStage st{};
        if (item.rfind("prune:", 0) == 0) {
            st.kind = StageKind::Prune;
            st.prune.sparsity = std::stof(item.substr(6));
        } else if (item == "distill") {
            st.kind = StageKind::Distill;
        } else if (item.rfind("quant:", 0) == 0) {
            st.kind = StageKind::Quantize;
            st.quant.bits = std::stoi(item.substr(6));
        } else if (item == "fuse") {
            st.kind = StageKind::Fuse;
        } else if (item == "freeze") {
            st.kind = StageKind::Freeze;
        } else {
            throw Error("unknown compressor stage '" + item +
                        "' (prune:<s>|distill|quant:<bits>|fuse|freeze)");
        }
        chain.add(st);
    }
    return chain;
}

std::string render_chain(const CompressorChain& chain) {
    std::ostringstream os;
    bool first = true;
    for (const auto& s : chain.stages()) {
        if (!first) os << ",";
        first = false;
        if (s.kind == StageKind::Prune) {
            os << "prune:" << s.prune.sparsity;
        } else if (s.kind == StageKind::Quantize) {
            os << "quant:" << s.quant.bits;
        } else {
            os << stage_kind_name(s.kind);
        }
    }
    return os.str();
}

// ------------------------------------------------------------------ prune

std::vector<int> prune_keep_indices(const std::vector<float>& norms, float sparsity) {
    const int n = static_cast<int>(norms.size());
    // ceil of the intended fraction; the epsilon absorbs float32 noise in
    // sparsity (0.3f * 100 is slightly above 30) without shifting real cases
    const double frac = static_cast<double>(sparsity) * n;
    int remove = static_cast<int>(std::ceil(frac - 1e-6 * std::max(1.0, frac)));
    remove = std::min(remove, n - 1);  // every layer keeps at least one unit
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    // smallest norm first; ties resolved toward the lower index
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return norms[a] < norms[b]; });
    std::vector<int> keep(order.begin() + remove, order.end());
    std::sort(keep.begin(), keep.end());
    return keep;
}

namespace {

// Gathers rows (axis 0 of a [rows, cols] matrix) by index.
std::vector<float> take_rows(const std::vector<float>& w, int cols, const std::vector<int>& rows) {
    std::vector<float> out;
    out.reserve(rows.size() * static_cast<size_t>(cols));
    for (int r : rows)
        out.insert(out.end(), w.begin() + static_cast<int64_t>(r) * cols,
                   w.begin() + static_cast<int64_t>(r + 1) * cols);
    return out;
}

std::vector<float> take_cols(const std::vector<float>& w, int rows, int cols,
                             const std::vector<int>& keep) {
    std::vector<float> out;
    out.reserve(static_cast<size_t>(rows) * keep.size());
    for (int r = 0; r < rows; ++r)
        for (int c : keep) out.push_back(w[static_cast<int64_t>(r) * cols + c]);
    return out;
}

}  // namespace

PolicySnapshot prune(const PolicySnapshot& snap, float sparsity) {
    if (sparsity < 0.0f || sparsity >= 1.0f) throw Error("prune: sparsity must be in [0,1)");
    const ActorCriticSpec& spec = snap.spec;
    ShapeInfo info = infer_shapes(spec);

    ActorCriticSpec new_spec = spec;
    Parameters new_params = snap.params;

    // Context carried to the next parametric layer: which input units
    // survive. For conv outputs this is a channel list plus the spatial
    // size, so a following dense layer can drop whole channel blocks.
    std::vector<int> kept;        // indices into the previous layer's outputs
    bool kept_is_channels = false;
    int spatial = 1;

    auto drop_dense_cols = [&](LayerSpec& l, LayerParams<float>& p) {
        if (kept.empty()) return;
        std::vector<int> cols;
        if (kept_is_channels) {
            cols.reserve(kept.size() * static_cast<size_t>(spatial));
            for (int c : kept)
                for (int s = 0; s < spatial; ++s) cols.push_back(c * spatial + s);
        } else {
            cols = kept;
        }
        p.W.data = take_cols(p.W.data, l.out_dim, l.in_dim, cols);
        l.in_dim = static_cast<int>(cols.size());
        p.W.shape = {l.out_dim, l.in_dim};
    };

    for (size_t i = 0; i < spec.trunk.size(); ++i) {
        LayerSpec& l = new_spec.trunk[i];
        LayerParams<float>& p = new_params.layers[i];
        if (l.kind == LayerKind::Relu) continue;
        if (l.kind == LayerKind::Dense) {
            drop_dense_cols(l, p);
            // prune output rows by incoming-weight L2 norm
            std::vector<float> norms(l.out_dim);
            for (int r = 0; r < l.out_dim; ++r) {
                double s2 = 0.0;
                for (int c = 0; c < l.in_dim; ++c) {
                    float v = p.W.data[static_cast<int64_t>(r) * l.in_dim + c];
                    s2 += static_cast<double>(v) * v;
                }
                norms[r] = static_cast<float>(std::sqrt(s2));
            }
            std::vector<int> keep = prune_keep_indices(norms, sparsity);
            p.W.data = take_rows(p.W.data, l.in_dim, keep);
            std::vector<float> nb;
            for (int r : keep) nb.push_back(p.b.data[r]);
            p.b.data = std::move(nb);
            l.out_dim = static_cast<int>(keep.size());
            p.W.shape = {l.out_dim, l.in_dim};
            p.b.shape = {l.out_dim};
            kept = std::move(keep);
            kept_is_channels = false;
        } else {
            // drop input channels per upstream pruning
            if (!kept.empty()) {
                if (!kept_is_channels) throw Error("prune: dense feeding conv is unsupported");
                const int slice = l.kh * l.kw;
                std::vector<float> nw;
                nw.reserve(static_cast<size_t>(l.out_ch) * kept.size() * slice);
                for (int oc = 0; oc < l.out_ch; ++oc)
                    for (int ic : kept) {
                        int64_t base = (static_cast<int64_t>(oc) * l.in_ch + ic) * slice;
                        nw.insert(nw.end(), p.W.data.begin() + base, p.W.data.begin() + base + slice);
                    }
                p.W.data = std::move(nw);
                l.in_ch = static_cast<int>(kept.size());
            }
            // prune output channels by kernel-slice L2 norm
            const int slice = l.in_ch * l.kh * l.kw;
            std::vector<float> norms(l.out_ch);
            for (int oc = 0; oc < l.out_ch; ++oc) {
                double s2 = 0.0;
                for (int k = 0; k < slice; ++k) {
                    float v = p.W.data[static_cast<int64_t>(oc) * slice + k];
                    s2 += static_cast<double>(v) * v;
                }
                norms[oc] = static_cast<float>(std::sqrt(s2));
            }
            std::vector<int> keep = prune_keep_indices(norms, sparsity);
            p.W.data = take_rows(p.W.data, slice, keep);
            std::vector<float> nb;
            for (int oc : keep) nb.push_back(p.b.data[oc]);
            p.b.data = std::move(nb);
            l.out_ch = static_cast<int>(keep.size());
            p.W.shape = {l.out_ch, l.in_ch, l.kh, l.kw};
            p.b.shape = {l.out_ch};
            kept = std::move(keep);
            kept_is_channels = true;
            spatial = info.shapes[i + 1][1] * info.shapes[i + 1][2];
        }
    }
    // heads: drop input columns, output dims unchanged
    const size_t nt = spec.trunk.size();
    for (size_t hi : {nt, nt + 1}) {
        int out_dim = hi == nt ? spec.action_count : 1;
        LayerSpec head = LayerSpec::dense(spec.trunk_out_dim, out_dim);
        drop_dense_cols(head, new_params.layers[hi]);
    }
    new_spec.trunk_out_dim = trunk_out_dim(new_spec);
    PolicySnapshot out;
    out.version = snap.version;
    out.spec = std::move(new_spec);
    out.params = std::move(new_params);
    out.created_at_ms = snap.created_at_ms;
    check_params(out.spec, out.params);
    return out;
}

// ---------------------------------------------------------------- distill

DistillResult distill(const PolicySnapshot& teacher, const ActorCriticSpec& student_spec,
                      Parameters student_params, AdamState& adam, const StateSource& states,
                      const DistillerConfig& cfg, uint64_t seed) {
    if (student_spec.action_count != teacher.spec.action_count)
        throw Error("distill: student/teacher head dims differ");
    if (cfg.steps_per_cycle < 1) throw Error("distill: steps_per_cycle must be >= 1");
    (void)seed;
    double loss_sum = 0.0;
    int64_t loss_n = 0;
    const int workers = std::min(std::max(1, cfg.workers), cfg.batch_size);
    const ShapeInfo sinfo = infer_shapes(student_spec);
    // loss + gradient for a contiguous slice of the batch
    auto slice_grads = [&](const std::vector<Tensor>& batch, size_t lo, size_t hi,
                           GradientsT<float>& grads) {
        double slice_loss = 0.0;
        for (size_t i = lo; i < hi; ++i) {
            const Tensor& s = batch[i];
            auto tcache = forward(teacher.spec, teacher.params, s);
            std::vector<float> tp = softmax(tcache.logits);
            auto scache = forward(student_spec, student_params, s);
            std::vector<float> sp = softmax(scache.logits);
            float h = entropy(sp);
            float loss = kl_divergence(tp, sp);
            float dv = scache.value - tcache.value;
            loss += 0.5f * dv * dv - cfg.beta * h;
            std::vector<float> dlogits(sp.size());
            for (size_t a = 0; a < sp.size(); ++a) {
                float d = sp[a] - tp[a];
                d += cfg.beta * sp[a] *
                     (std::log(std::max(sp[a], static_cast<float>(kEpsProb))) + h);
                dlogits[a] = d / static_cast<float>(batch.size());
            }
            accumulate_backward(student_spec, student_params, scache, dlogits,
                                dv / static_cast<float>(batch.size()), sinfo, grads);
            slice_loss += loss;
        }
        return slice_loss;
    };
    for (int step = 0; step < cfg.steps_per_cycle; ++step) {
        std::vector<Tensor> batch = states(cfg.batch_size);
        if (batch.empty()) break;  // no experience yet
        GradientsT<float> grads = zero_params<float>(student_spec);
        double batch_loss = 0.0;
        if (workers == 1) {
            batch_loss = slice_grads(batch, 0, batch.size(), grads);
        } else {
            // each worker sums its own slice; partials are reduced in
            // worker order so results are reproducible per worker count
            std::vector<GradientsT<float>> partial(static_cast<size_t>(workers));
            std::vector<double> partial_loss(static_cast<size_t>(workers), 0.0);
            std::vector<std::thread> pool;
            const size_t chunk = (batch.size() + static_cast<size_t>(workers) - 1) /
                                 static_cast<size_t>(workers);
            for (int w = 0; w < workers; ++w) {
                partial[static_cast<size_t>(w)] = zero_params<float>(student_spec);
                const size_t lo = std::min(batch.size(), static_cast<size_t>(w) * chunk);
                const size_t hi = std::min(batch.size(), lo + chunk);
                pool.emplace_back([&, w, lo, hi] {
                    partial_loss[static_cast<size_t>(w)] =
                        slice_grads(batch, lo, hi, partial[static_cast<size_t>(w)]);
                });
            }
            for (auto& t : pool) t.join();
            for (int w = 0; w < workers; ++w) {
                batch_loss += partial_loss[static_cast<size_t>(w)];
                for (size_t l = 0; l < grads.layers.size(); ++l) {
                    if (!grads.layers[l].present) continue;
                    const auto& src = partial[static_cast<size_t>(w)].layers[l];
                    for (size_t k = 0; k < grads.layers[l].W.data.size(); ++k)
                        grads.layers[l].W.data[k] += src.W.data[k];
                    for (size_t k = 0; k < grads.layers[l].b.data.size(); ++k)
                        grads.layers[l].b.data[k] += src.b.data[k];
                }
            }
        }
        student_params = adam_step(student_params, grads, adam);
        loss_sum += batch_loss / static_cast<double>(batch.size());
        loss_n++;
    }
    DistillResult r;
    r.params = std::move(student_params);
    r.mean_loss = loss_n > 0 ? loss_sum / static_cast<double>(loss_n) : 0.0;
    return r;
}

// --------------------------------------------------------------- compiler

Compressor::Compressor(CompressorChain chain, StateSource states, uint64_t seed)
    : chain_(std::move(chain)), states_(std::move(states)), seed_(seed) {}

PlanPtr Compressor::compile(const SnapshotPtr& snapshot) {
    cycle_++;
    PolicySnapshot cur = *snapshot;
    std::vector<std::string> pre_stages;
    for (const auto& st : chain_.stages()) {
        if (st.kind == StageKind::Prune) {
            cur = prune(cur, st.prune.sparsity);
            std::ostringstream os;
            os << "prune:" << st.prune.sparsity;
            pre_stages.push_back(os.str());
        } else if (st.kind == StageKind::Distill) {
            // teacher refresh honors the sync interval; between refreshes
            // the distiller keeps training toward the retained teacher
            if (!distiller_.initialized || !(distiller_.spec == cur.spec)) {
                distiller_.spec = cur.spec;
                distiller_.params = cur.params;
                distiller_.adam = AdamState::make(cur.spec, st.distill.distill_lr);
                distiller_.initialized = true;
                distiller_.teacher_version = snapshot->version;
                distiller_.teacher = snapshot;
            } else if (snapshot->version >=
                       distiller_.teacher_version + st.distill.teacher_sync_interval) {
                distiller_.teacher = snapshot;
                distiller_.teacher_version = snapshot->version;
            }
            const PolicySnapshot& teacher = distiller_.teacher ? *distiller_.teacher : *snapshot;
            DistillResult r = distill(teacher, distiller_.spec, distiller_.params,
                                      distiller_.adam, states_, st.distill, seed_ + cycle_);
            distiller_.params = r.params;
            cur.spec = distiller_.spec;
            cur.params = distiller_.params;
            pre_stages.push_back("distill");
        }
    }
    CompiledPolicy plan = build_plan(cur);
    plan.prov.source_version = snapshot->version;
    plan.prov.stages = pre_stages;
    plan.prov.sparsity = chain_.sparsity();
    for (const auto& st : chain_.stages()) {
        if (st.kind == StageKind::Quantize) {
            std::vector<Tensor> calib = states_(st.quant.calibration_window);
            quantize_plan(plan, calib, st.quant.bits);
        } else if (st.kind == StageKind::Fuse) {
            fuse_plan(plan);
        } else if (st.kind == StageKind::Freeze) {
            freeze_plan(plan);
        }
    }
    plan.checksum = plan.compute_checksum();
    // measured per-inference latency on a calibration state
    {
        auto probe_states = states_(1);
        Tensor probe = probe_states.empty()
                           ? Tensor::zeros(plan.spec.input_shape)
                           : probe_states[0];
        auto shared = std::make_shared<CompiledPolicy>(plan);
        PlanRunner runner(shared);
        runner.infer(probe);  // warmup
        const int reps = 3;
        auto t0 = std::chrono::steady_clock::now();
        for (int i = 0; i < reps; ++i) runner.infer(probe);
        auto t1 = std::chrono::steady_clock::now();
        plan.latency_ms_estimate =
            std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
    }
    return std::make_shared<CompiledPolicy>(std::move(plan));
}

}  // namespace accerl
