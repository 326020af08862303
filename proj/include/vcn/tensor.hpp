#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "vcn/rng.hpp"

namespace vcn {

using Dims = std::vector<std::int64_t>;

inline std::int64_t dims_numel(const Dims& d) {
    std::int64_t n = 1;
    for (auto v : d) n *= v;
    return n;
}

inline std::string dims_str(const Dims& d) {
    std::string s = "(";
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(d[i]);
    }
    return s + ")";
}

// Dense row-major tensor with value semantics. Rank 0 is a scalar,
// images are (h, w, c), conv kernels (kh, kw, ci, co).
template <class T>
struct Tensor {
    Dims dims;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(Dims d) : dims(std::move(d)), data(static_cast<std::size_t>(dims_numel(dims)), T(0)) {}
    Tensor(Dims d, std::vector<T> v) : dims(std::move(d)), data(std::move(v)) {
        if (static_cast<std::int64_t>(data.size()) != dims_numel(dims))
            throw std::invalid_argument("tensor data size does not match dims " + dims_str(dims));
    }

    static Tensor zeros(Dims d) { return Tensor(std::move(d)); }
    static Tensor full(Dims d, T v) {
        Tensor t(std::move(d));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }
    static Tensor ones(Dims d) { return full(std::move(d), T(1)); }
    static Tensor scalar(T v) {
        Tensor t;
        t.data.assign(1, v);
        return t;
    }
    static Tensor from(Dims d, std::initializer_list<T> v) { return Tensor(std::move(d), std::vector<T>(v)); }

    static Tensor randn(Dims d, Rng& rng, T scale = T(1)) {
        Tensor t(std::move(d));
        for (auto& x : t.data) x = static_cast<T>(rng.normal()) * scale;
        return t;
    }
    static Tensor rand_uniform(Dims d, Rng& rng, T lo = T(0), T hi = T(1)) {
        Tensor t(std::move(d));
        for (auto& x : t.data) x = static_cast<T>(rng.uniform(lo, hi));
        return t;
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(dims.size()); }

    T& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

    T& at(std::int64_t i, std::int64_t j) { return data[static_cast<std::size_t>(i * dims[1] + j)]; }
    const T& at(std::int64_t i, std::int64_t j) const { return data[static_cast<std::size_t>(i * dims[1] + j)]; }

    T& at(std::int64_t i, std::int64_t j, std::int64_t k) {
        return data[static_cast<std::size_t>((i * dims[1] + j) * dims[2] + k)];
    }
    const T& at(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return data[static_cast<std::size_t>((i * dims[1] + j) * dims[2] + k)];
    }

    bool same_shape(const Tensor& o) const { return dims == o.dims; }

    T item() const {
        if (numel() != 1) throw std::invalid_argument("item() on non-scalar tensor " + dims_str(dims));
        return data[0];
    }

    Tensor reshaped(Dims d) const {
        if (dims_numel(d) != numel())
            throw std::invalid_argument("reshape " + dims_str(dims) + " -> " + dims_str(d));
        return Tensor(std::move(d), data);
    }

    bool all_finite() const {
        for (auto v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.dims = dims;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

// NumPy-style right-aligned broadcast of two shapes.
inline Dims broadcast_dims(const Dims& a, const Dims& b) {
    const std::size_t r = std::max(a.size(), b.size());
    Dims out(r, 1);
    for (std::size_t i = 0; i < r; ++i) {
        std::int64_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
        std::int64_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
        if (da != db && da != 1 && db != 1)
            throw std::invalid_argument("shapes not broadcastable: " + dims_str(a) + " vs " + dims_str(b));
        out[i] = std::max(da, db);
    }
    return out;
}

namespace detail {

// Row-major strides with 0 on broadcast axes, right-aligned to rank r.
inline std::vector<std::int64_t> bcast_strides(const Dims& d, std::size_t r, const Dims& out) {
    std::vector<std::int64_t> strides(r, 0);
    std::int64_t s = 1;
    for (std::size_t i = d.size(); i-- > 0;) {
        std::size_t oi = i + (r - d.size());
        strides[oi] = (d[i] == 1 && out[oi] != 1) ? 0 : s;
        s *= d[i];
    }
    return strides;
}

} // namespace detail

template <class T, class F>
Tensor<T> elementwise_binary(const Tensor<T>& a, const Tensor<T>& b, F&& f) {
    if (a.dims == b.dims) {
        Tensor<T> out(a.dims);
        const std::int64_t n = a.numel();
        for (std::int64_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
        return out;
    }
    Dims od = broadcast_dims(a.dims, b.dims);
    const std::size_t r = od.size();
    auto sa = detail::bcast_strides(a.dims, r, od);
    auto sb = detail::bcast_strides(b.dims, r, od);
    Tensor<T> out(od);
    std::vector<std::int64_t> coord(r, 0);
    std::int64_t ia = 0, ib = 0;
    const std::int64_t n = out.numel();
    for (std::int64_t i = 0; i < n; ++i) {
        out[i] = f(a[ia], b[ib]);
        for (std::size_t k = r; k-- > 0;) {
            ++coord[k];
            ia += sa[k];
            ib += sb[k];
            if (coord[k] < od[k]) break;
            ia -= sa[k] * od[k];
            ib -= sb[k] * od[k];
            coord[k] = 0;
        }
    }
    return out;
}

template <class T, class F>
Tensor<T> elementwise_unary(const Tensor<T>& a, F&& f) {
    Tensor<T> out(a.dims);
    const std::int64_t n = a.numel();
    for (std::int64_t i = 0; i < n; ++i) out[i] = f(a[i]);
    return out;
}

// Sum over the axes where `target` (right-aligned) has extent 1 or is
// missing; the reverse of broadcasting. Result has shape `target`.
template <class T>
Tensor<T> reduce_to_dims(const Tensor<T>& g, const Dims& target) {
    if (g.dims == target) return g;
    const std::size_t r = g.dims.size();
    auto st = detail::bcast_strides(target, r, g.dims);
    Tensor<T> out(target);
    std::vector<std::int64_t> coord(r, 0);
    std::int64_t it = 0;
    const std::int64_t n = g.numel();
    for (std::int64_t i = 0; i < n; ++i) {
        out[it] += g[i];
        for (std::size_t k = r; k-- > 0;) {
            ++coord[k];
            it += st[k];
            if (coord[k] < g.dims[k]) break;
            it -= st[k] * g.dims[k];
            coord[k] = 0;
        }
    }
    return out;
}

// Sum over `axes`, keeping them as size-1 dims.
template <class T>
Tensor<T> reduce_sum_axes(const Tensor<T>& a, const std::vector<int>& axes) {
    Dims target = a.dims;
    for (int ax : axes) {
        if (ax < 0 || ax >= a.rank()) throw std::invalid_argument("reduce axis out of range");
        target[static_cast<std::size_t>(ax)] = 1;
    }
    return reduce_to_dims(a, target);
}

} // namespace vcn
