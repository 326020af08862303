#pragma once

#include <stdexcept>

#include "vcn/autodiff.hpp"
#include "vcn/nn_ops.hpp"

namespace vcn {

struct NumericsConfig {
    double epsilon = 1e-6;
    double grad_check_step = 1e-3;
};

// Default epsilon per dtype: 1e-6 in 32-bit training, 1e-8 in 64-bit
// verification runs.
template <class T>
constexpr T default_eps() {
    return sizeof(T) == 4 ? T(1e-6) : T(1e-8);
}

// mu(Y, T) = sum(Y .* T) / (eps + sum(T)), per channel.
// Y is (h, w, c); the weight map is (h, w, 1). Result is (1, 1, c).
template <class T>
Var<T> masked_mean(const Var<T>& y, const Var<T>& t, T eps = default_eps<T>()) {
    if (y.dims()[0] != t.dims()[0] || y.dims()[1] != t.dims()[1])
        throw std::invalid_argument("masked_mean: spatial dims disagree");
    Var<T> num = reduce_sum(mul(y, t), {0, 1});
    Var<T> den = add_scalar(reduce_sum(t, {0, 1}), eps);
    return divide(num, den);
}

// sigma(Y, T) = sqrt( sum(T .* (Y - mu)^2) / (eps + sum(T)) + eps ).
// Deviation weighting: the squared residual of each pixel is weighted by
// its mask value rather than masking Y before subtracting the mean.
template <class T>
Var<T> masked_std(const Var<T>& y, const Var<T>& t, T eps = default_eps<T>()) {
    Var<T> mu = masked_mean(y, t, eps);
    Var<T> dev = sub(y, mu);
    Var<T> num = reduce_sum(mul(t, square(dev)), {0, 1});
    Var<T> den = add_scalar(reduce_sum(t, {0, 1}), eps);
    return sqrt(add_scalar(divide(num, den), eps));
}

// Plain-tensor nearest-neighbor downsample for masks.
template <class T>
Tensor<T> nn_downsample(const Tensor<T>& mask, std::int64_t h2, std::int64_t w2) {
    if (h2 < 1 || w2 < 1) throw std::invalid_argument("nn_downsample: empty target");
    if (h2 > mask.dims[0] || w2 > mask.dims[1])
        throw std::invalid_argument("nn_downsample: target larger than source");
    return resize_nearest_tensor(mask, h2, w2);
}

} // namespace vcn
