#include "accerl/policy.hpp"

#include <cstring>
#include <fstream>

namespace accerl {

SnapshotPtr make_snapshot(ActorCriticSpec spec, Parameters params, uint64_t version,
                          int64_t created_at_ms) {
    check_params(spec, params);
    auto s = std::make_shared<PolicySnapshot>();
    s->version = version;
    s->spec = std::move(spec);
    s->params = std::move(params);
    s->created_at_ms = created_at_ms;
    return s;
}

namespace {

struct ConvRow {
    int oc, k;
};

ActorCriticSpec conv_preset(const std::string& name, const std::vector<ConvRow>& convs, int fc,
                            const std::vector<int>& input_shape, int action_count,
                            std::vector<int> strides) {
    if (input_shape.size() != 3)
        throw Error("preset '" + name + "' needs a CxHxW input shape");
    if (strides.empty()) strides = {4, 2, 1};
    if (strides.size() < convs.size())
        throw Error("preset '" + name + "': " + std::to_string(convs.size()) +
                    " strides required");
    ActorCriticSpec spec;
    spec.input_shape = input_shape;
    spec.action_count = action_count;
    spec.preset_name = name;
    int ch = input_shape[0];
    for (size_t i = 0; i < convs.size(); ++i) {
        spec.trunk.push_back(LayerSpec::conv2d(ch, convs[i].oc, convs[i].k, strides[i]));
        spec.trunk.push_back(LayerSpec::relu());
        ch = convs[i].oc;
    }
    // minimum spatial size check with a clear message
    {
        int h = input_shape[1], w = input_shape[2];
        int min_h = 1, min_w = 1;
        for (size_t i = convs.size(); i-- > 0;) {
            min_h = (min_h - 1) * strides[i] + convs[i].k;
            min_w = (min_w - 1) * strides[i] + convs[i].k;
        }
        if (h < min_h || w < min_w)
            throw Error("preset '" + name + "' requires input of at least " +
                        std::to_string(min_h) + "x" + std::to_string(min_w) + ", got " +
                        std::to_string(h) + "x" + std::to_string(w));
    }
    {
        ActorCriticSpec probe = spec;
        probe.action_count = action_count;
        auto info = infer_shapes(probe);
        int flat = static_cast<int>(shape_numel(info.shapes.back()));
        spec.trunk.push_back(LayerSpec::dense(flat, fc));
        spec.trunk.push_back(LayerSpec::relu());
    }
    spec.trunk_out_dim = trunk_out_dim(spec);
    return spec;
}

}  // namespace

ActorCriticSpec build_preset(const std::string& name, const std::vector<int>& input_shape,
                             int action_count, const std::vector<int>& strides) {
    if (action_count < 1) throw Error("build_preset: action_count must be positive");
    if (name == "Original" || name == "original")
        return conv_preset("Original", {{32, 8}, {64, 4}, {64, 3}}, 2048, input_shape,
                           action_count, strides);
    if (name == "Net1" || name == "net1")
        return conv_preset("Net1", {{16, 8}, {32, 4}}, 256, input_shape, action_count, strides);
    if (name == "Net2" || name == "net2")
        return conv_preset("Net2", {{8, 8}, {16, 4}}, 128, input_shape, action_count, strides);
    if (name == "Net3" || name == "net3")
        return conv_preset("Net3", {{4, 8}, {4, 4}}, 32, input_shape, action_count, strides);
    if (name.rfind("mlp:", 0) == 0) {
        int hidden = std::stoi(name.substr(4));
        if (hidden < 1) throw Error("mlp preset: hidden width must be positive");
        ActorCriticSpec spec;
        spec.input_shape = input_shape;
        spec.action_count = action_count;
        spec.preset_name = name;
        int flat = static_cast<int>(shape_numel(input_shape));
        spec.trunk.push_back(LayerSpec::dense(flat, hidden));
        spec.trunk.push_back(LayerSpec::relu());
        spec.trunk_out_dim = hidden;
        return spec;
    }
    throw Error("unknown preset '" + name + "' (Original|Net1|Net2|Net3|mlp:<hidden>)");
}

// ----------------------------------------------------------- serialization

namespace {

constexpr char kMagic[4] = {'A', 'C', 'R', 'L'};
constexpr uint32_t kFormatVersion = 1;

struct Writer {
    std::ofstream f;
    explicit Writer(const std::string& path) : f(path, std::ios::binary) {
        if (!f) throw Error("cannot open '" + path + "' for writing");
    }
    template <typename T>
    void put(T v) {
        f.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void put_str(const std::string& s) {
        put<uint32_t>(static_cast<uint32_t>(s.size()));
        f.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
};

struct Reader {
    std::ifstream f;
    explicit Reader(const std::string& path) : f(path, std::ios::binary) {
        if (!f) throw Error("cannot open '" + path + "' for reading");
    }
    template <typename T>
    T get() {
        T v;
        f.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (!f) throw Error("checkpoint truncated");
        return v;
    }
    std::string get_str() {
        uint32_t n = get<uint32_t>();
        if (n > (1u << 20)) throw Error("checkpoint corrupt: absurd string length");
        std::string s(n, '\0');
        f.read(s.data(), n);
        if (!f) throw Error("checkpoint truncated");
        return s;
    }
};

}  // namespace

void save_snapshot(const PolicySnapshot& snap, const std::string& path) {
    check_params(snap.spec, snap.params);
    Writer w(path);
    w.f.write(kMagic, 4);
    w.put<uint32_t>(kFormatVersion);
    w.put<uint64_t>(snap.version);
    w.put<int64_t>(snap.created_at_ms);
    w.put_str(snap.spec.preset_name);
    w.put<uint32_t>(static_cast<uint32_t>(snap.spec.input_shape.size()));
    for (int d : snap.spec.input_shape) w.put<int32_t>(d);
    w.put<uint32_t>(static_cast<uint32_t>(snap.spec.action_count));
    w.put<uint32_t>(static_cast<uint32_t>(snap.spec.trunk.size()));
    for (const auto& l : snap.spec.trunk) {
        w.put<uint8_t>(static_cast<uint8_t>(l.kind));
        if (l.kind == LayerKind::Dense) {
            w.put<uint32_t>(static_cast<uint32_t>(l.in_dim));
            w.put<uint32_t>(static_cast<uint32_t>(l.out_dim));
        } else if (l.kind == LayerKind::Conv2d) {
            w.put<uint32_t>(static_cast<uint32_t>(l.in_ch));
            w.put<uint32_t>(static_cast<uint32_t>(l.out_ch));
            w.put<uint32_t>(static_cast<uint32_t>(l.kh));
            w.put<uint32_t>(static_cast<uint32_t>(l.kw));
            w.put<uint32_t>(static_cast<uint32_t>(l.stride));
        }
    }
    for (const auto& lp : snap.params.layers) {
        if (!lp.present) continue;
        for (float v : lp.W.data) w.put<float>(v);
        for (float v : lp.b.data) w.put<float>(v);
    }
    if (!w.f) throw Error("write failed for '" + path + "'");
}

PolicySnapshot load_snapshot(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.f.read(magic, 4);
    if (!r.f || std::memcmp(magic, kMagic, 4) != 0)
        throw Error("bad checkpoint magic in '" + path + "'");
    uint32_t fmt = r.get<uint32_t>();
    if (fmt != kFormatVersion)
        throw Error("checkpoint format version " + std::to_string(fmt) + " unsupported (want " +
                    std::to_string(kFormatVersion) + ")");
    PolicySnapshot snap;
    snap.version = r.get<uint64_t>();
    snap.created_at_ms = r.get<int64_t>();
    snap.spec.preset_name = r.get_str();
    uint32_t nd = r.get<uint32_t>();
    for (uint32_t i = 0; i < nd; ++i) snap.spec.input_shape.push_back(r.get<int32_t>());
    snap.spec.action_count = static_cast<int>(r.get<uint32_t>());
    uint32_t nl = r.get<uint32_t>();
    for (uint32_t i = 0; i < nl; ++i) {
        auto kind = static_cast<LayerKind>(r.get<uint8_t>());
        if (kind == LayerKind::Dense) {
            int in = static_cast<int>(r.get<uint32_t>());
            int out = static_cast<int>(r.get<uint32_t>());
            snap.spec.trunk.push_back(LayerSpec::dense(in, out));
        } else if (kind == LayerKind::Conv2d) {
            LayerSpec l;
            l.kind = LayerKind::Conv2d;
            l.in_ch = static_cast<int>(r.get<uint32_t>());
            l.out_ch = static_cast<int>(r.get<uint32_t>());
            l.kh = static_cast<int>(r.get<uint32_t>());
            l.kw = static_cast<int>(r.get<uint32_t>());
            l.stride = static_cast<int>(r.get<uint32_t>());
            snap.spec.trunk.push_back(l);
        } else if (kind == LayerKind::Relu) {
            snap.spec.trunk.push_back(LayerSpec::relu());
        } else {
            throw Error("checkpoint corrupt: unknown layer kind");
        }
    }
    snap.spec.trunk_out_dim = trunk_out_dim(snap.spec);
    snap.params = zero_params<float>(snap.spec);
    for (auto& lp : snap.params.layers) {
        if (!lp.present) continue;
        for (auto& v : lp.W.data) v = r.get<float>();
        for (auto& v : lp.b.data) v = r.get<float>();
    }
    return snap;
}

}  // namespace accerl
