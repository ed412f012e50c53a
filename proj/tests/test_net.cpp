#include <cmath>
#include <random>

#include "accerl/adam.hpp"
#include "accerl/net.hpp"
#include "accerl/policy.hpp"
#include "doctest.h"

using namespace accerl;

namespace {

ActorCriticSpec tiny_spec() { return build_preset("mlp:6", {4}, 3); }

// scalar projection of the network outputs so the whole backward pass is
// exercised by one finite difference
template <typename T>
T projected_output(const ActorCriticSpec& spec, const ParametersT<T>& p, const TensorT<T>& x,
                   const std::vector<T>& wlogits, T wvalue) {
    auto cache = forward(spec, p, x);
    T s = wvalue * cache.value;
    for (size_t i = 0; i < wlogits.size(); ++i) s += wlogits[i] * cache.logits[i];
    return s;
}

}  // namespace

TEST_CASE("infer_shapes rejects inconsistent specs and names the layer") {
    ActorCriticSpec spec = tiny_spec();
    spec.trunk[0].in_dim = 7;  // input is 4
    CHECK_THROWS_WITH_AS(infer_shapes(spec), doctest::Contains("dense[0]"), Error);

    ActorCriticSpec conv = build_preset("Net3", {4, 84, 84}, 6);
    conv.trunk[2].in_ch = 99;
    CHECK_THROWS_AS(infer_shapes(conv), Error);

    CHECK_THROWS_AS(build_preset("Net1", {4, 8, 8}, 6), Error);  // too small spatially
}

TEST_CASE("forward matches a hand computation on a 1-hidden-unit net") {
    ActorCriticSpec spec;
    spec.input_shape = {2};
    spec.trunk = {LayerSpec::dense(2, 1), LayerSpec::relu()};
    spec.trunk_out_dim = 1;
    spec.action_count = 2;
    Parameters p = zero_params<float>(spec);
    p.layers[0].W.data = {0.5f, -1.0f};
    p.layers[0].b.data = {0.25f};
    p.layers[2].W.data = {2.0f, -3.0f};  // policy head
    p.layers[2].b.data = {0.1f, 0.2f};
    p.layers[3].W.data = {4.0f};  // value head
    p.layers[3].b.data = {-1.0f};

    Tensor x = Tensor::zeros({2});
    x.data = {1.0f, 0.5f};
    auto cache = forward(spec, p, x);
    // hidden = relu(0.5*1 - 1*0.5 + 0.25) = 0.25
    CHECK(cache.logits[0] == doctest::Approx(2.0 * 0.25 + 0.1));
    CHECK(cache.logits[1] == doctest::Approx(-3.0 * 0.25 + 0.2));
    CHECK(cache.value == doctest::Approx(4.0 * 0.25 - 1.0));

    // relu gate: negative preactivation kills the path
    x.data = {0.0f, 1.0f};
    cache = forward(spec, p, x);
    CHECK(cache.value == doctest::Approx(-1.0));
}

TEST_CASE("backward matches central finite differences in fp64") {
    ActorCriticSpec spec = tiny_spec();
    std::mt19937_64 rng(5);
    ParametersT<double> p = params_cast<double>(init_params<float>(spec, 5));
    TensorT<double> x = TensorT<double>::zeros({4});
    for (double& v : x.data) v = uniform01(rng) * 2.0 - 1.0;
    std::vector<double> wl = {0.3, -0.7, 1.1};
    const double wv = 0.9;

    auto cache = forward(spec, p, x);
    GradientsT<double> g = backward(spec, p, cache, wl, wv);

    const double h = 1e-6;
    for (size_t l = 0; l < p.layers.size(); ++l) {
        if (!p.layers[l].present) continue;
        for (auto [data, grad] : {std::pair{&p.layers[l].W.data, &g.layers[l].W.data},
                                  std::pair{&p.layers[l].b.data, &g.layers[l].b.data}}) {
            for (size_t k = 0; k < data->size(); ++k) {
                double orig = (*data)[k];
                (*data)[k] = orig + h;
                double lp = projected_output(spec, p, x, wl, wv);
                (*data)[k] = orig - h;
                double lm = projected_output(spec, p, x, wl, wv);
                (*data)[k] = orig;
                double fd = (lp - lm) / (2.0 * h);
                CHECK((*grad)[k] == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("adam step reproduces the textbook update on one parameter") {
    ActorCriticSpec spec;
    spec.input_shape = {1};
    spec.trunk = {LayerSpec::dense(1, 1)};
    spec.trunk_out_dim = 1;
    spec.action_count = 1;
    Parameters p = zero_params<float>(spec);
    p.layers[0].W.data = {1.0f};
    GradientsT<float> g = zero_params<float>(spec);
    g.layers[0].W.data = {0.5f};
    AdamState st = AdamState::make(spec, 0.1f);

    Parameters q = adam_step(p, g, st);
    // step 1: m=0.05, v=0.00025; mhat=0.5, vhat=0.25
    const double want = 1.0 - 0.1 * 0.5 / (std::sqrt(0.25) + 1e-8);
    CHECK(q.layers[0].W.data[0] == doctest::Approx(want).epsilon(1e-6));
    CHECK(p.layers[0].W.data[0] == 1.0f);  // inputs untouched
    CHECK(st.step == 1);

    g.layers[0].W.data = {std::numeric_limits<float>::quiet_NaN()};
    CHECK_THROWS_WITH_AS(adam_step(q, g, st), doctest::Contains("layer 0"), Error);
}

TEST_CASE("init_params is deterministic per seed with zero biases") {
    ActorCriticSpec spec = tiny_spec();
    Parameters a = init_params<float>(spec, 42), b = init_params<float>(spec, 42),
               c = init_params<float>(spec, 43);
    CHECK(a.layers[0].W.data == b.layers[0].W.data);
    CHECK(a.layers[0].W.data != c.layers[0].W.data);
    for (float v : a.layers[0].b.data) CHECK(v == 0.0f);
}
