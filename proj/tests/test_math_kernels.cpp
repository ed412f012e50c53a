#include <cmath>
#include <random>

#include "accerl/kernels.hpp"
#include "accerl/math.hpp"
#include "doctest.h"

using namespace accerl;

TEST_CASE("softmax is shift invariant and normalized") {
    std::vector<double> logits = {1.0, 2.0, 3.0};
    auto p = softmax(logits);
    double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    CHECK(p[0] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(std::exp(3.0) / z).epsilon(1e-12));
    std::vector<double> shifted = {1001.0, 1002.0, 1003.0};
    auto q = softmax(shifted);
    for (size_t i = 0; i < p.size(); ++i) CHECK(q[i] == doctest::Approx(p[i]).epsilon(1e-12));
    CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("entropy and KL against direct formulas") {
    std::vector<double> p = {0.7, 0.2, 0.1};
    double h = -(0.7 * std::log(0.7) + 0.2 * std::log(0.2) + 0.1 * std::log(0.1));
    CHECK(entropy(p) == doctest::Approx(h).epsilon(1e-12));

    // degenerate distribution: 0 log 0 = 0
    std::vector<double> d = {1.0, 0.0};
    CHECK(entropy(d) == 0.0);

    std::vector<double> q = {0.5, 0.25, 0.25};
    double kl = 0.7 * std::log(0.7 / 0.5) + 0.2 * std::log(0.2 / 0.25) + 0.1 * std::log(0.1 / 0.25);
    CHECK(kl_divergence(p, q) == doctest::Approx(kl).epsilon(1e-12));
    CHECK(kl_divergence(p, p) == 0.0);
    CHECK(kl_divergence(p, q) >= 0.0);
}

TEST_CASE("uniform01 stays in [0,1) and is deterministic per seed") {
    std::mt19937_64 a(7), b(7);
    for (int i = 0; i < 10000; ++i) {
        double u = uniform01(a);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == uniform01(b));
    }
}

TEST_CASE("categorical sampling matches probabilities statistically") {
    std::vector<float> p = {0.5f, 0.3f, 0.2f};
    std::mt19937_64 rng(11);
    const int n = 200000;
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) counts[sample_categorical(p, rng)]++;
    for (int a = 0; a < 3; ++a) {
        double freq = static_cast<double>(counts[a]) / n;
        // 5 sigma of a binomial proportion
        double sigma = std::sqrt(p[a] * (1.0 - p[a]) / n);
        CHECK(std::abs(freq - p[a]) < 5.0 * sigma);
    }
}

TEST_CASE("dense kernel equals naive matmul oracle; parallel is bit-identical") {
    std::mt19937_64 rng(3);
    const int out = 37, in = 53;
    std::vector<float> W(static_cast<size_t>(out) * in), b(out), x(in);
    for (auto* v : {&W, &b, &x})
        for (float& f : *v) f = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
    std::vector<float> y(out), yref(out), oracle(out);
    for (int o = 0; o < out; ++o) {
        float acc = b[static_cast<size_t>(o)];
        for (int i = 0; i < in; ++i)
            acc += W[static_cast<size_t>(o) * in + static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
        oracle[static_cast<size_t>(o)] = acc;
    }
    kernels::dense_forward_ref(W.data(), b.data(), x.data(), yref.data(), out, in);
    kernels::dense_forward(W.data(), b.data(), x.data(), y.data(), out, in);
    for (int o = 0; o < out; ++o) {
        CHECK(yref[static_cast<size_t>(o)] == oracle[static_cast<size_t>(o)]);
        CHECK(y[static_cast<size_t>(o)] == yref[static_cast<size_t>(o)]);  // bit identical
    }
}

TEST_CASE("conv kernel equals direct correlation oracle; parallel bit-identical") {
    std::mt19937_64 rng(4);
    const int ic = 3, oc = 5, ih = 11, iw = 9, k = 3, stride = 2;
    const int oh = (ih - k) / stride + 1, ow = (iw - k) / stride + 1;
    std::vector<float> W(static_cast<size_t>(oc) * ic * k * k), b(oc),
        x(static_cast<size_t>(ic) * ih * iw);
    for (auto* v : {&W, &b, &x})
        for (float& f : *v) f = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
    std::vector<float> y(static_cast<size_t>(oc) * oh * ow), yp(y.size());
    kernels::conv2d_forward_ref(W.data(), b.data(), x.data(), y.data(), ic, ih, iw, oc, k, k,
                                stride, oh, ow);
    kernels::conv2d_forward(W.data(), b.data(), x.data(), yp.data(), ic, ih, iw, oc, k, k, stride,
                            oh, ow);
    for (int o = 0; o < oc; ++o)
        for (int r = 0; r < oh; ++r)
            for (int c = 0; c < ow; ++c) {
                float acc = b[static_cast<size_t>(o)];
                for (int i = 0; i < ic; ++i)
                    for (int u = 0; u < k; ++u)
                        for (int v = 0; v < k; ++v)
                            acc += W[((static_cast<size_t>(o) * ic + i) * k + u) * k + v] *
                                   x[(static_cast<size_t>(i) * ih + r * stride + u) * iw +
                                     c * stride + v];
                size_t idx = (static_cast<size_t>(o) * oh + r) * ow + c;
                CHECK(y[idx] == doctest::Approx(acc).epsilon(1e-5));
                CHECK(y[idx] == yp[idx]);
            }
}

TEST_CASE("quantized gemv uses wide accumulation and matches the scalar form") {
    const int out = 2, in = 3;
    std::vector<int32_t> Wq = {100, -50, 25, 7, 0, -127};
    std::vector<int32_t> xq = {90, -80, 127};
    std::vector<float> b = {0.5f, -0.25f};
    const float ws = 0.01f, xs = 0.02f;
    std::vector<float> y(out), yp(out);
    kernels::qdense_forward_ref(Wq.data(), b.data(), xq.data(), y.data(), out, in, ws, xs);
    kernels::qdense_forward(Wq.data(), b.data(), xq.data(), yp.data(), out, in, ws, xs);
    for (int o = 0; o < out; ++o) {
        int64_t acc = 0;
        for (int i = 0; i < in; ++i)
            acc += static_cast<int64_t>(Wq[static_cast<size_t>(o * in + i)]) *
                   xq[static_cast<size_t>(i)];
        float want = static_cast<float>(static_cast<double>(acc) * ws * xs) +
                     b[static_cast<size_t>(o)];
        CHECK(y[static_cast<size_t>(o)] == doctest::Approx(want).epsilon(1e-7));
        CHECK(y[static_cast<size_t>(o)] == yp[static_cast<size_t>(o)]);
    }
}
