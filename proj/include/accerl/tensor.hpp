#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace accerl {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

// Dense row-major tensor. T is float in production; tests instantiate
// double so oracles can use tight tolerances.
template <typename T>
struct TensorT {
    std::vector<int> shape;
    std::vector<T> data;

    TensorT() = default;
    TensorT(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (shape_numel(shape) != static_cast<int64_t>(data.size()))
            throw Error("tensor: shape/data size mismatch");
    }

    static TensorT zeros(std::vector<int> s) {
        TensorT t;
        t.data.assign(static_cast<size_t>(shape_numel(s)), T(0));
        t.shape = std::move(s);
        return t;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }
};

using Tensor = TensorT<float>;

template <typename T, typename U>
TensorT<T> tensor_cast(const TensorT<U>& src) {
    TensorT<T> out;
    out.shape = src.shape;
    out.data.reserve(src.data.size());
    for (U v : src.data) out.data.push_back(static_cast<T>(v));
    return out;
}

template <typename T>
bool all_finite(const TensorT<T>& t) {
    for (T v : t.data)
        if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
}

}  // namespace accerl
