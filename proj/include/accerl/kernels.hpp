#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

// Inner-loop kernels. Each kernel has a serial reference version (*_ref)
// and an OpenMP version parallelized over independent output elements,
// so the two produce bit-identical results. Tests assert the parity and
// tools/kernel_bench.cpp compares their throughput.

namespace accerl::kernels {

// Work threshold below which the OpenMP versions stay serial; toy-env
// networks sit far under it, the Atari-size presets sit above.
inline constexpr int64_t kParallelMinWork = 1 << 16;

// y[o] = b[o] + sum_i W[o*in+i] * x[i]
template <typename T>
void dense_forward_ref(const T* W, const T* b, const T* x, T* y, int out_dim, int in_dim) {
    for (int o = 0; o < out_dim; ++o) {
        T acc = b[o];
        const T* row = W + static_cast<int64_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
}

// Relu, when requested, is applied in the epilogue so fused plan ops make a
// single pass over the output.
template <typename T, bool Relu = false>
void dense_forward(const T* W, const T* b, const T* x, T* y, int out_dim, int in_dim) {
    const int64_t work = static_cast<int64_t>(out_dim) * in_dim;
#ifdef ACCERL_OPENMP
#pragma omp parallel for schedule(static) if (work > kParallelMinWork)
#endif
    for (int o = 0; o < out_dim; ++o) {
        T acc = b[o];
        const T* row = W + static_cast<int64_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) acc += row[i] * x[i];
        y[o] = Relu ? std::max(acc, T(0)) : acc;
    }
    (void)work;
}

// Valid-padding conv2d. x: [ic, ih, iw], W: [oc, ic, kh, kw], y: [oc, oh, ow].
template <typename T>
void conv2d_forward_ref(const T* W, const T* b, const T* x, T* y, int in_ch, int ih, int iw,
                        int out_ch, int kh, int kw, int stride, int oh, int ow) {
    for (int oc = 0; oc < out_ch; ++oc) {
        for (int r = 0; r < oh; ++r) {
            for (int c = 0; c < ow; ++c) {
                T acc = b[oc];
                for (int ic = 0; ic < in_ch; ++ic) {
                    const T* xin = x + (static_cast<int64_t>(ic) * ih + r * stride) * iw + c * stride;
                    const T* wrow = W + ((static_cast<int64_t>(oc) * in_ch + ic) * kh) * kw;
                    for (int i = 0; i < kh; ++i)
                        for (int j = 0; j < kw; ++j) acc += wrow[i * kw + j] * xin[static_cast<int64_t>(i) * iw + j];
                }
                y[(static_cast<int64_t>(oc) * oh + r) * ow + c] = acc;
            }
        }
    }
}

template <typename T, bool Relu = false>
void conv2d_forward(const T* W, const T* b, const T* x, T* y, int in_ch, int ih, int iw,
                    int out_ch, int kh, int kw, int stride, int oh, int ow) {
    const int64_t work = static_cast<int64_t>(out_ch) * oh * ow * in_ch * kh * kw;
#ifdef ACCERL_OPENMP
#pragma omp parallel for schedule(static) if (work > kParallelMinWork)
#endif
    for (int oc = 0; oc < out_ch; ++oc) {
        for (int r = 0; r < oh; ++r) {
            for (int c = 0; c < ow; ++c) {
                T acc = b[oc];
                for (int ic = 0; ic < in_ch; ++ic) {
                    const T* xin = x + (static_cast<int64_t>(ic) * ih + r * stride) * iw + c * stride;
                    const T* wrow = W + ((static_cast<int64_t>(oc) * in_ch + ic) * kh) * kw;
                    for (int i = 0; i < kh; ++i)
                        for (int j = 0; j < kw; ++j) acc += wrow[i * kw + j] * xin[static_cast<int64_t>(i) * iw + j];
                }
                y[(static_cast<int64_t>(oc) * oh + r) * ow + c] = Relu ? std::max(acc, T(0)) : acc;
            }
        }
    }
    (void)work;
}

// Quantized gemv: integer weights and activations, wide accumulation,
// one dequantization per output element.
inline void qdense_forward_ref(const int32_t* Wq, const float* b, const int32_t* xq, float* y,
                               int out_dim, int in_dim, float w_scale, float x_scale) {
    const double s = static_cast<double>(w_scale) * static_cast<double>(x_scale);
    for (int o = 0; o < out_dim; ++o) {
        int64_t acc = 0;
        const int32_t* row = Wq + static_cast<int64_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) acc += static_cast<int64_t>(row[i]) * xq[i];
        y[o] = static_cast<float>(acc * s) + b[o];
    }
}

template <bool Relu = false>
inline void qdense_forward(const int32_t* Wq, const float* b, const int32_t* xq, float* y,
                           int out_dim, int in_dim, float w_scale, float x_scale) {
    const double s = static_cast<double>(w_scale) * static_cast<double>(x_scale);
    const int64_t work = static_cast<int64_t>(out_dim) * in_dim;
#ifdef ACCERL_OPENMP
#pragma omp parallel for schedule(static) if (work > kParallelMinWork)
#endif
    for (int o = 0; o < out_dim; ++o) {
        int64_t acc = 0;
        const int32_t* row = Wq + static_cast<int64_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) acc += static_cast<int64_t>(row[i]) * xq[i];
        const float v = static_cast<float>(acc * s) + b[o];
        y[o] = Relu ? std::max(v, 0.0f) : v;
    }
    (void)work;
}

inline void qconv2d_forward_ref(const int32_t* Wq, const float* b, const int32_t* xq, float* y,
                                int in_ch, int ih, int iw, int out_ch, int kh, int kw, int stride,
                                int oh, int ow, float w_scale, float x_scale) {
    const double s = static_cast<double>(w_scale) * static_cast<double>(x_scale);
    for (int oc = 0; oc < out_ch; ++oc) {
        for (int r = 0; r < oh; ++r) {
            for (int c = 0; c < ow; ++c) {
                int64_t acc = 0;
                for (int ic = 0; ic < in_ch; ++ic) {
                    const int32_t* xin = xq + (static_cast<int64_t>(ic) * ih + r * stride) * iw + c * stride;
                    const int32_t* wrow = Wq + ((static_cast<int64_t>(oc) * in_ch + ic) * kh) * kw;
                    for (int i = 0; i < kh; ++i)
                        for (int j = 0; j < kw; ++j)
                            acc += static_cast<int64_t>(wrow[i * kw + j]) * xin[static_cast<int64_t>(i) * iw + j];
                }
                y[(static_cast<int64_t>(oc) * oh + r) * ow + c] = static_cast<float>(acc * s) + b[oc];
            }
        }
    }
}

template <bool Relu = false>
inline void qconv2d_forward(const int32_t* Wq, const float* b, const int32_t* xq, float* y,
                            int in_ch, int ih, int iw, int out_ch, int kh, int kw, int stride,
                            int oh, int ow, float w_scale, float x_scale) {
    const double s = static_cast<double>(w_scale) * static_cast<double>(x_scale);
    const int64_t work = static_cast<int64_t>(out_ch) * oh * ow * in_ch * kh * kw;
#ifdef ACCERL_OPENMP
#pragma omp parallel for schedule(static) if (work > kParallelMinWork)
#endif
    for (int oc = 0; oc < out_ch; ++oc) {
        for (int r = 0; r < oh; ++r) {
            for (int c = 0; c < ow; ++c) {
                int64_t acc = 0;
                for (int ic = 0; ic < in_ch; ++ic) {
                    const int32_t* xin = xq + (static_cast<int64_t>(ic) * ih + r * stride) * iw + c * stride;
                    const int32_t* wrow = Wq + ((static_cast<int64_t>(oc) * in_ch + ic) * kh) * kw;
                    for (int i = 0; i < kh; ++i)
                        for (int j = 0; j < kw; ++j)
                            acc += static_cast<int64_t>(wrow[i * kw + j]) * xin[static_cast<int64_t>(i) * iw + j];
                }
                const float v = static_cast<float>(acc * s) + b[oc];
                y[(static_cast<int64_t>(oc) * oh + r) * ow + c] = Relu ? std::max(v, 0.0f) : v;
            }
        }
    }
    (void)work;
}

}  // namespace accerl::kernels
