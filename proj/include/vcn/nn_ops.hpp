#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "vcn/autodiff.hpp"

namespace vcn {

// Convolution family. The three bilinear maps (forward, input-grad,
// weight-grad) are each primitives whose VJPs are expressed through the
// other two, which keeps the set closed under repeated differentiation.

struct ConvGeom {
    std::int64_t k = 3;
    std::int64_t stride = 1;
    std::int64_t pad = 1;
    std::int64_t out_extent(std::int64_t in) const { return (in + 2 * pad - k) / stride + 1; }
};

template <class T>
Tensor<T> im2col_tensor(const Tensor<T>& x, ConvGeom g) {
    const std::int64_t h = x.dims[0], w = x.dims[1], c = x.dims[2];
    const std::int64_t ho = g.out_extent(h), wo = g.out_extent(w);
    if (ho < 1 || wo < 1) throw std::invalid_argument("conv: kernel larger than padded input");
    Tensor<T> cols({ho * wo, g.k * g.k * c});
    std::int64_t row = 0;
    for (std::int64_t oy = 0; oy < ho; ++oy) {
        for (std::int64_t ox = 0; ox < wo; ++ox, ++row) {
            T* dst = &cols.at(row, 0);
            for (std::int64_t ky = 0; ky < g.k; ++ky) {
                const std::int64_t y = oy * g.stride + ky - g.pad;
                for (std::int64_t kx = 0; kx < g.k; ++kx) {
                    const std::int64_t xx = ox * g.stride + kx - g.pad;
                    if (y >= 0 && y < h && xx >= 0 && xx < w) {
                        const T* src = &x.at(y, xx, 0);
                        for (std::int64_t ci = 0; ci < c; ++ci) *dst++ = src[ci];
                    } else {
                        for (std::int64_t ci = 0; ci < c; ++ci) *dst++ = T(0);
                    }
                }
            }
        }
    }
    return cols;
}

template <class T>
Tensor<T> col2im_tensor(const Tensor<T>& cols, std::int64_t h, std::int64_t w, std::int64_t c,
                        ConvGeom g) {
    const std::int64_t ho = g.out_extent(h), wo = g.out_extent(w);
    Tensor<T> x({h, w, c});
    std::int64_t row = 0;
    for (std::int64_t oy = 0; oy < ho; ++oy) {
        for (std::int64_t ox = 0; ox < wo; ++ox, ++row) {
            const T* src = &cols.at(row, 0);
            for (std::int64_t ky = 0; ky < g.k; ++ky) {
                const std::int64_t y = oy * g.stride + ky - g.pad;
                for (std::int64_t kx = 0; kx < g.k; ++kx) {
                    const std::int64_t xx = ox * g.stride + kx - g.pad;
                    if (y >= 0 && y < h && xx >= 0 && xx < w) {
                        T* dst = &x.at(y, xx, 0);
                        for (std::int64_t ci = 0; ci < c; ++ci) dst[ci] += src[ci];
                        src += c;
                    } else {
                        src += c;
                    }
                }
            }
        }
    }
    return x;
}

template <class T>
Tensor<T> conv2d_tensor(const Tensor<T>& x, const Tensor<T>& w, ConvGeom g) {
    if (x.rank() != 3 || w.rank() != 4 || w.dims[0] != g.k || w.dims[1] != g.k ||
        w.dims[2] != x.dims[2])
        throw std::invalid_argument("conv2d: bad shapes " + dims_str(x.dims) + " w " + dims_str(w.dims));
    const std::int64_t ho = g.out_extent(x.dims[0]), wo = g.out_extent(x.dims[1]);
    const std::int64_t co = w.dims[3];
    Tensor<T> cols = im2col_tensor(x, g);
    Tensor<T> wm = w.reshaped({g.k * g.k * w.dims[2], co});
    return matmul_tensors(cols, wm).reshaped({ho, wo, co});
}

template <class T>
Tensor<T> conv2d_dinput_tensor(const Tensor<T>& gout, const Tensor<T>& w, ConvGeom g,
                               std::int64_t h, std::int64_t wdt) {
    const std::int64_t ci = w.dims[2], co = w.dims[3];
    Tensor<T> gm = gout.reshaped({gout.dims[0] * gout.dims[1], co});
    Tensor<T> wm = w.reshaped({g.k * g.k * ci, co});
    // cols = gm * wm^T
    Tensor<T> cols({gm.dims[0], wm.dims[0]});
    EigenMapRMConst<T> A(gm.data.data(), gm.dims[0], gm.dims[1]);
    EigenMapRMConst<T> B(wm.data.data(), wm.dims[0], wm.dims[1]);
    EigenMapRM<T> C(cols.data.data(), cols.dims[0], cols.dims[1]);
    C.noalias() = A * B.transpose();
    return col2im_tensor(cols, h, wdt, ci, g);
}

template <class T>
Tensor<T> conv2d_dweight_tensor(const Tensor<T>& x, const Tensor<T>& gout, ConvGeom g) {
    const std::int64_t c = x.dims[2], co = gout.dims[2];
    Tensor<T> cols = im2col_tensor(x, g);
    Tensor<T> gm = gout.reshaped({gout.dims[0] * gout.dims[1], co});
    Tensor<T> wm({cols.dims[1], co});
    EigenMapRMConst<T> A(cols.data.data(), cols.dims[0], cols.dims[1]);
    EigenMapRMConst<T> B(gm.data.data(), gm.dims[0], gm.dims[1]);
    EigenMapRM<T> C(wm.data.data(), wm.dims[0], wm.dims[1]);
    C.noalias() = A.transpose() * B;
    return wm.reshaped({g.k, g.k, c, co});
}

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, ConvGeom g);
template <class T>
Var<T> conv2d_dinput(const Var<T>& gout, const Var<T>& w, ConvGeom g, std::int64_t h,
                     std::int64_t wdt);
template <class T>
Var<T> conv2d_dweight(const Var<T>& x, const Var<T>& gout, ConvGeom g);

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, ConvGeom g) {
    return make_op<T>("conv2d", conv2d_tensor(x.val(), w.val(), g), {x, w},
                      [g](const Var<T>& self, const Var<T>& cot) {
                          const Var<T>& x = self.input(0);
                          const Var<T>& w = self.input(1);
                          std::vector<Var<T>> gr(2);
                          if (x.requires_grad())
                              gr[0] = conv2d_dinput(cot, w, g, x.dims()[0], x.dims()[1]);
                          if (w.requires_grad()) gr[1] = conv2d_dweight(x, cot, g);
                          return gr;
                      });
}

template <class T>
Var<T> conv2d_dinput(const Var<T>& gout, const Var<T>& w, ConvGeom g, std::int64_t h,
                     std::int64_t wdt) {
    return make_op<T>("conv2d_dinput", conv2d_dinput_tensor(gout.val(), w.val(), g, h, wdt),
                      {gout, w}, [g](const Var<T>& self, const Var<T>& cot) {
                          const Var<T>& go = self.input(0);
                          const Var<T>& w = self.input(1);
                          std::vector<Var<T>> gr(2);
                          if (go.requires_grad()) gr[0] = conv2d(cot, w, g);
                          if (w.requires_grad()) gr[1] = conv2d_dweight(cot, go, g);
                          return gr;
                      });
}

template <class T>
Var<T> conv2d_dweight(const Var<T>& x, const Var<T>& gout, ConvGeom g) {
    return make_op<T>("conv2d_dweight", conv2d_dweight_tensor(x.val(), gout.val(), g), {x, gout},
                      [g](const Var<T>& self, const Var<T>& cot) {
                          const Var<T>& x = self.input(0);
                          const Var<T>& go = self.input(1);
                          std::vector<Var<T>> gr(2);
                          if (x.requires_grad())
                              gr[0] = conv2d_dinput(go, cot, g, x.dims()[0], x.dims()[1]);
                          if (go.requires_grad()) gr[1] = conv2d(x, cot, g);
                          return gr;
                      });
}

// Convolution with bias, the form the networks use.
template <class T>
Var<T> conv2d_bias(const Var<T>& x, const Var<T>& w, const Var<T>& b, ConvGeom g) {
    return add(conv2d(x, w, g), b);
}

// im2col as a differentiable op (patch rows), used by the texture loss.
template <class T>
Var<T> im2col(const Var<T>& x, ConvGeom g) {
    Dims src = x.dims();
    return make_op<T>("im2col", im2col_tensor(x.val(), g), {x},
                      [g, src](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{col2im(cot, src[0], src[1], src[2], g)};
                      });
}

template <class T>
Var<T> col2im(const Var<T>& cols, std::int64_t h, std::int64_t w, std::int64_t c, ConvGeom g) {
    return make_op<T>("col2im", col2im_tensor(cols.val(), h, w, c, g), {cols},
                      [g](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{im2col(cot, g)};
                      });
}

// ---- nearest-neighbor resize --------------------------------------------
// Source index convention: floor(target_index * src_extent / dst_extent),
// i.e. the top-left pixel of the covering block.

inline std::int64_t nn_src_index(std::int64_t i, std::int64_t src, std::int64_t dst) {
    return (i * src) / dst;
}

template <class T>
Tensor<T> resize_nearest_tensor(const Tensor<T>& a, std::int64_t ho, std::int64_t wo) {
    const std::int64_t h = a.dims[0], w = a.dims[1], c = a.dims[2];
    Tensor<T> out({ho, wo, c});
    for (std::int64_t i = 0; i < ho; ++i) {
        const std::int64_t sy = nn_src_index(i, h, ho);
        for (std::int64_t j = 0; j < wo; ++j) {
            const std::int64_t sx = nn_src_index(j, w, wo);
            const T* src = &a.at(sy, sx, 0);
            T* dst = &out.at(i, j, 0);
            for (std::int64_t k = 0; k < c; ++k) dst[k] = src[k];
        }
    }
    return out;
}

template <class T>
Var<T> resize_nearest(const Var<T>& a, std::int64_t ho, std::int64_t wo);
template <class T>
Var<T> resize_nearest_adj(const Var<T>& g, std::int64_t h, std::int64_t w);

template <class T>
Var<T> resize_nearest(const Var<T>& a, std::int64_t ho, std::int64_t wo) {
    if (ho < 1 || wo < 1) throw std::invalid_argument("resize_nearest: empty target");
    Dims src = a.dims();
    return make_op<T>("resize_nn", resize_nearest_tensor(a.val(), ho, wo), {a},
                      [src](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{resize_nearest_adj(cot, src[0], src[1])};
                      });
}

template <class T>
Var<T> resize_nearest_adj(const Var<T>& g, std::int64_t h, std::int64_t w) {
    const std::int64_t ho = g.dims()[0], wo = g.dims()[1], c = g.dims()[2];
    Tensor<T> out({h, w, c});
    for (std::int64_t i = 0; i < ho; ++i) {
        const std::int64_t sy = nn_src_index(i, h, ho);
        for (std::int64_t j = 0; j < wo; ++j) {
            const std::int64_t sx = nn_src_index(j, w, wo);
            const T* src = &g.val().at(i, j, 0);
            T* dst = &out.at(sy, sx, 0);
            for (std::int64_t k = 0; k < c; ++k) dst[k] += src[k];
        }
    }
    return make_op<T>("resize_nn_adj", std::move(out), {g},
                      [ho, wo](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{resize_nearest(cot, ho, wo)};
                      });
}

// ---- channel concat / slice ----------------------------------------------

template <class T>
Var<T> slice_channels(const Var<T>& a, std::int64_t c0, std::int64_t c1);

template <class T>
Var<T> channel_pad(const Var<T>& a, std::int64_t c0, std::int64_t ctotal) {
    const std::int64_t h = a.dims()[0], w = a.dims()[1], c = a.dims()[2];
    Tensor<T> out({h, w, ctotal});
    for (std::int64_t i = 0; i < h; ++i)
        for (std::int64_t j = 0; j < w; ++j)
            for (std::int64_t k = 0; k < c; ++k) out.at(i, j, c0 + k) = a.val().at(i, j, k);
    return make_op<T>("channel_pad", std::move(out), {a},
                      [c0, c](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{slice_channels(cot, c0, c0 + c)};
                      });
}

template <class T>
Var<T> slice_channels(const Var<T>& a, std::int64_t c0, std::int64_t c1) {
    const std::int64_t h = a.dims()[0], w = a.dims()[1], c = a.dims()[2];
    if (c0 < 0 || c1 > c || c0 >= c1) throw std::invalid_argument("slice_channels range");
    Tensor<T> out({h, w, c1 - c0});
    for (std::int64_t i = 0; i < h; ++i)
        for (std::int64_t j = 0; j < w; ++j)
            for (std::int64_t k = c0; k < c1; ++k) out.at(i, j, k - c0) = a.val().at(i, j, k);
    return make_op<T>("slice_ch", std::move(out), {a},
                      [c0, c](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{channel_pad(cot, c0, c)};
                      });
}

template <class T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
    if (a.dims()[0] != b.dims()[0] || a.dims()[1] != b.dims()[1])
        throw std::invalid_argument("concat_channels: spatial mismatch");
    const std::int64_t h = a.dims()[0], w = a.dims()[1];
    const std::int64_t ca = a.dims()[2], cb = b.dims()[2];
    Tensor<T> out({h, w, ca + cb});
    for (std::int64_t i = 0; i < h; ++i)
        for (std::int64_t j = 0; j < w; ++j) {
            for (std::int64_t k = 0; k < ca; ++k) out.at(i, j, k) = a.val().at(i, j, k);
            for (std::int64_t k = 0; k < cb; ++k) out.at(i, j, ca + k) = b.val().at(i, j, k);
        }
    return make_op<T>("concat_ch", std::move(out), {a, b},
                      [ca, cb](const Var<T>& self, const Var<T>& cot) {
                          std::vector<Var<T>> g(2);
                          if (self.input(0).requires_grad()) g[0] = slice_channels(cot, 0, ca);
                          if (self.input(1).requires_grad()) g[1] = slice_channels(cot, ca, ca + cb);
                          return g;
                      });
}

// ---- per-row gather / scatter (argmin-style reductions) --------------------

template <class T>
Var<T> scatter_rows(const Var<T>& g, std::vector<std::int64_t> idx, std::int64_t m);

template <class T>
Var<T> gather_rows(const Var<T>& a, std::vector<std::int64_t> idx) {
    const std::int64_t n = a.dims()[0];
    Tensor<T> out({n, 1});
    for (std::int64_t i = 0; i < n; ++i) out.at(i, 0) = a.val().at(i, idx[static_cast<std::size_t>(i)]);
    const std::int64_t m = a.dims()[1];
    return make_op<T>("gather_rows", std::move(out), {a},
                      [idx, m](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{scatter_rows(cot, idx, m)};
                      });
}

template <class T>
Var<T> scatter_rows(const Var<T>& g, std::vector<std::int64_t> idx, std::int64_t m) {
    const std::int64_t n = g.dims()[0];
    Tensor<T> out({n, m});
    for (std::int64_t i = 0; i < n; ++i) out.at(i, idx[static_cast<std::size_t>(i)]) = g.val().at(i, 0);
    return make_op<T>("scatter_rows", std::move(out), {g},
                      [idx](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{gather_rows(cot, idx)};
                      });
}

// Min / max over each row of a rank-2 Var; gradient follows the arg element.
template <class T>
Var<T> row_min(const Var<T>& a) {
    const std::int64_t n = a.dims()[0], m = a.dims()[1];
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n), 0);
    for (std::int64_t i = 0; i < n; ++i) {
        T best = a.val().at(i, 0);
        for (std::int64_t j = 1; j < m; ++j)
            if (a.val().at(i, j) < best) {
                best = a.val().at(i, j);
                idx[static_cast<std::size_t>(i)] = j;
            }
    }
    return gather_rows(a, std::move(idx));
}

template <class T>
Var<T> row_max(const Var<T>& a) {
    const std::int64_t n = a.dims()[0], m = a.dims()[1];
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n), 0);
    for (std::int64_t i = 0; i < n; ++i) {
        T best = a.val().at(i, 0);
        for (std::int64_t j = 1; j < m; ++j)
            if (a.val().at(i, j) > best) {
                best = a.val().at(i, j);
                idx[static_cast<std::size_t>(i)] = j;
            }
    }
    return gather_rows(a, std::move(idx));
}

// ---- pooling / dense ---------------------------------------------------

template <class T>
Var<T> global_avg_pool(const Var<T>& a) {
    const T inv = T(1) / static_cast<T>(a.dims()[0] * a.dims()[1]);
    return scale(reduce_sum(a, {0, 1}), inv); // (1,1,c)
}

// x is (1, n); w is (n, m); b is (m)
template <class T>
Var<T> fully_connected(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
    return add(matmul(x, w), reshape(b, {1, b.dims()[0]}));
}

// 2x nearest upsample, the decoder building block.
template <class T>
Var<T> upsample2x(const Var<T>& a) {
    return resize_nearest(a, a.dims()[0] * 2, a.dims()[1] * 2);
}

} // namespace vcn
