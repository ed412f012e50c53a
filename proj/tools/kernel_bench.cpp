// Compares the serial reference kernels against the parallel variants:
// correctness (bit-identical outputs) and throughput on sized problems.

#include <chrono>
#include <cstring>
#include <iomanip>
#include <iostream>
#include <random>
#include <thread>
#include <vector>

#include "accerl/kernels.hpp"
#include "accerl/math.hpp"

using namespace accerl;

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double time_ms(const Fn& fn, int reps) {
    fn();  // warmup
    auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
}

std::vector<float> random_vec(size_t n, std::mt19937_64& rng) {
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
    return v;
}

void row(const std::string& name, double serial_ms, double parallel_ms, bool identical) {
    std::cout << std::left << std::setw(22) << name << std::right << std::fixed
              << std::setprecision(4) << std::setw(12) << serial_ms << std::setw(12) << parallel_ms
              << std::setw(10) << (serial_ms / std::max(parallel_ms, 1e-9)) << std::setw(12)
              << (identical ? "identical" : "DIFFER") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    int reps = argc > 1 ? std::atoi(argv[1]) : 20;
    std::mt19937_64 rng(9);
    std::cout << "threads=" << std::thread::hardware_concurrency() << " reps=" << reps << "\n";
    std::cout << std::left << std::setw(22) << "kernel" << std::right << std::setw(12)
              << "serial_ms" << std::setw(12) << "parallel_ms" << std::setw(10) << "speedup"
              << std::setw(12) << "outputs" << "\n";

    {
        const int out = 2048, in = 2048;
        auto W = random_vec(static_cast<size_t>(out) * in, rng);
        auto b = random_vec(static_cast<size_t>(out), rng);
        auto x = random_vec(static_cast<size_t>(in), rng);
        std::vector<float> ys(static_cast<size_t>(out)), yp(static_cast<size_t>(out));
        double ts = time_ms([&] { kernels::dense_forward_ref(W.data(), b.data(), x.data(),
                                                             ys.data(), out, in); }, reps);
        double tp = time_ms([&] { kernels::dense_forward(W.data(), b.data(), x.data(), yp.data(),
                                                         out, in); }, reps);
        row("dense 2048x2048", ts, tp, std::memcmp(ys.data(), yp.data(), out * sizeof(float)) == 0);
    }
    {
        const int ic = 32, oc = 64, ih = 40, iw = 40, k = 4, stride = 2;
        const int oh = (ih - k) / stride + 1, ow = (iw - k) / stride + 1;
        auto W = random_vec(static_cast<size_t>(oc) * ic * k * k, rng);
        auto b = random_vec(static_cast<size_t>(oc), rng);
        auto x = random_vec(static_cast<size_t>(ic) * ih * iw, rng);
        std::vector<float> ys(static_cast<size_t>(oc) * oh * ow), yp(ys.size());
        double ts = time_ms([&] { kernels::conv2d_forward_ref(W.data(), b.data(), x.data(),
                                                              ys.data(), ic, ih, iw, oc, k, k,
                                                              stride, oh, ow); }, reps);
        double tp = time_ms([&] { kernels::conv2d_forward(W.data(), b.data(), x.data(), yp.data(),
                                                          ic, ih, iw, oc, k, k, stride, oh, ow); },
                            reps);
        row("conv 32->64 40x40", ts, tp,
            std::memcmp(ys.data(), yp.data(), ys.size() * sizeof(float)) == 0);
    }
    {
        const int out = 2048, in = 2048;
        std::vector<int32_t> W(static_cast<size_t>(out) * in);
        std::vector<int32_t> x(static_cast<size_t>(in));
        for (auto& v : W) v = static_cast<int32_t>(uniform01(rng) * 255.0) - 127;
        for (auto& v : x) v = static_cast<int32_t>(uniform01(rng) * 255.0) - 127;
        auto b = random_vec(static_cast<size_t>(out), rng);
        std::vector<float> ys(static_cast<size_t>(out)), yp(static_cast<size_t>(out));
        const float ws = 0.01f, xs = 0.02f;
        double ts = time_ms([&] { kernels::qdense_forward_ref(W.data(), b.data(), x.data(),
                                                              ys.data(), out, in, ws, xs); }, reps);
        double tp = time_ms([&] { kernels::qdense_forward(W.data(), b.data(), x.data(), yp.data(),
                                                          out, in, ws, xs); }, reps);
        row("qdense 2048x2048", ts, tp,
            std::memcmp(ys.data(), yp.data(), out * sizeof(float)) == 0);
    }
    return 0;
}
