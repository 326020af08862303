#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "vcn/tensor.hpp"

namespace vcn {

// Reverse-mode autodiff over Tensor<T>. Every operation's backward is
// itself composed of recorded operations, so grad() returns Vars that
// can be differentiated again (needed for the gradient penalty).

template <class T>
class Var;

template <class T>
struct Node {
    using VjpFn = std::function<std::vector<Var<T>>(const Var<T>& self, const Var<T>& cot)>;

    Tensor<T> value;
    std::vector<Var<T>> inputs;
    VjpFn vjp;
    bool requires_grad = false;
    const char* op = "leaf";
};

template <class T>
class Var {
public:
    Var() = default;
    explicit Var(Tensor<T> value, bool requires_grad = false)
        : n_(std::make_shared<Node<T>>()) {
        n_->value = std::move(value);
        n_->requires_grad = requires_grad;
    }

    bool defined() const { return n_ != nullptr; }
    const Tensor<T>& val() const { return n_->value; }
    Tensor<T>& mutable_val() { return n_->value; }
    const Dims& dims() const { return n_->value.dims; }
    std::int64_t numel() const { return n_->value.numel(); }
    bool requires_grad() const { return n_ && n_->requires_grad; }
    const char* op() const { return n_->op; }
    const Var& input(std::size_t i) const { return n_->inputs[i]; }
    Node<T>* node() const { return n_.get(); }

    static Var wrap(std::shared_ptr<Node<T>> n) {
        Var v;
        v.n_ = std::move(n);
        return v;
    }
    std::shared_ptr<Node<T>> shared() const { return n_; }

private:
    std::shared_ptr<Node<T>> n_;
};

template <class T>
Var<T> make_op(const char* name, Tensor<T> value, std::vector<Var<T>> inputs,
               typename Node<T>::VjpFn vjp) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->inputs = std::move(inputs);
    n->vjp = std::move(vjp);
    n->op = name;
    for (const auto& in : n->inputs)
        if (in.requires_grad()) n->requires_grad = true;
    return Var<T>::wrap(std::move(n));
}

template <class T>
Var<T> constant(Tensor<T> t) {
    return Var<T>(std::move(t), false);
}

template <class T>
Var<T> leaf(Tensor<T> t) {
    return Var<T>(std::move(t), true);
}

template <class T>
Var<T> detach(const Var<T>& a) {
    return Var<T>(a.val(), false);
}

template <class T>
Var<T> zeros_like(const Var<T>& a) {
    return constant(Tensor<T>::zeros(a.dims()));
}

template <class T>
Var<T> ones_like(const Var<T>& a) {
    return constant(Tensor<T>::ones(a.dims()));
}

// ---- shape utilities -------------------------------------------------

template <class T>
Var<T> reshape(const Var<T>& a, Dims d) {
    Dims src = a.dims();
    return make_op<T>("reshape", a.val().reshaped(d), {a},
                      [src](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{reshape(cot, src)};
                      });
}

template <class T>
Var<T> reduce_sum(const Var<T>& a, const std::vector<int>& axes) {
    Dims src = a.dims();
    return make_op<T>("reduce_sum", reduce_sum_axes(a.val(), axes), {a},
                      [src](const Var<T>& self, const Var<T>& cot) {
                          // broadcast the cotangent back over the summed axes
                          return std::vector<Var<T>>{broadcast_to(cot, src)};
                      });
}

template <class T>
Var<T> broadcast_to(const Var<T>& a, Dims d) {
    Tensor<T> v = elementwise_binary(a.val(), Tensor<T>::zeros(d), [](T x, T) { return x; });
    Dims src = a.dims();
    return make_op<T>("broadcast", std::move(v), {a},
                      [src](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{reduce_to(cot, src)};
                      });
}

// Sum-reduce `g` down to shape `d` (adjoint of broadcasting).
template <class T>
Var<T> reduce_to(const Var<T>& g, const Dims& d) {
    if (g.dims() == d) return g;
    Dims src = g.dims();
    return make_op<T>("reduce_to", reduce_to_dims(g.val(), d), {g},
                      [src](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{broadcast_to(cot, src)};
                      });
}

template <class T>
Var<T> sum(const Var<T>& a) {
    Dims src = a.dims();
    T s = 0;
    for (std::int64_t i = 0; i < a.numel(); ++i) s += a.val()[i];
    return make_op<T>("sum", Tensor<T>::scalar(s), {a},
                      [src](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{broadcast_to(cot, src)};
                      });
}

template <class T>
Var<T> mean(const Var<T>& a) {
    return scale(sum(a), T(1) / static_cast<T>(a.numel()));
}

// ---- elementwise binary ----------------------------------------------

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    return make_op<T>("add", elementwise_binary(a.val(), b.val(), [](T x, T y) { return x + y; }),
                      {a, b}, [](const Var<T>& self, const Var<T>& cot) {
                          std::vector<Var<T>> g(2);
                          if (self.input(0).requires_grad()) g[0] = reduce_to(cot, self.input(0).dims());
                          if (self.input(1).requires_grad()) g[1] = reduce_to(cot, self.input(1).dims());
                          return g;
                      });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    return make_op<T>("sub", elementwise_binary(a.val(), b.val(), [](T x, T y) { return x - y; }),
                      {a, b}, [](const Var<T>& self, const Var<T>& cot) {
                          std::vector<Var<T>> g(2);
                          if (self.input(0).requires_grad()) g[0] = reduce_to(cot, self.input(0).dims());
                          if (self.input(1).requires_grad()) g[1] = reduce_to(neg(cot), self.input(1).dims());
                          return g;
                      });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    return make_op<T>("mul", elementwise_binary(a.val(), b.val(), [](T x, T y) { return x * y; }),
                      {a, b}, [](const Var<T>& self, const Var<T>& cot) {
                          std::vector<Var<T>> g(2);
                          if (self.input(0).requires_grad())
                              g[0] = reduce_to(mul(cot, self.input(1)), self.input(0).dims());
                          if (self.input(1).requires_grad())
                              g[1] = reduce_to(mul(cot, self.input(0)), self.input(1).dims());
                          return g;
                      });
}

template <class T>
Var<T> divide(const Var<T>& a, const Var<T>& b) {
    return make_op<T>("div", elementwise_binary(a.val(), b.val(), [](T x, T y) { return x / y; }),
                      {a, b}, [](const Var<T>& self, const Var<T>& cot) {
                          const Var<T>& x = self.input(0);
                          const Var<T>& y = self.input(1);
                          std::vector<Var<T>> g(2);
                          if (x.requires_grad()) g[0] = reduce_to(divide(cot, y), x.dims());
                          if (y.requires_grad())
                              g[1] = reduce_to(neg(mul(cot, divide(self, y))), y.dims());
                          return g;
                      });
}

// ---- elementwise unary -----------------------------------------------

template <class T>
Var<T> neg(const Var<T>& a) {
    return make_op<T>("neg", elementwise_unary(a.val(), [](T x) { return -x; }), {a},
                      [](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{neg(cot)};
                      });
}

template <class T>
Var<T> scale(const Var<T>& a, T s) {
    return make_op<T>("scale", elementwise_unary(a.val(), [s](T x) { return x * s; }), {a},
                      [s](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{scale(cot, s)};
                      });
}

template <class T>
Var<T> add_scalar(const Var<T>& a, T s) {
    return make_op<T>("addk", elementwise_unary(a.val(), [s](T x) { return x + s; }), {a},
                      [](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{cot};
                      });
}

template <class T>
Var<T> square(const Var<T>& a) {
    return make_op<T>("square", elementwise_unary(a.val(), [](T x) { return x * x; }), {a},
                      [](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{mul(cot, scale(self.input(0), T(2)))};
                      });
}

template <class T>
Var<T> exp(const Var<T>& a) {
    return make_op<T>("exp", elementwise_unary(a.val(), [](T x) { return std::exp(x); }), {a},
                      [](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{mul(cot, self)};
                      });
}

template <class T>
Var<T> log(const Var<T>& a) {
    return make_op<T>("log", elementwise_unary(a.val(), [](T x) { return std::log(x); }), {a},
                      [](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{divide(cot, self.input(0))};
                      });
}

template <class T>
Var<T> sqrt(const Var<T>& a) {
    return make_op<T>("sqrt", elementwise_unary(a.val(), [](T x) { return std::sqrt(x); }), {a},
                      [](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{divide(cot, scale(self, T(2)))};
                      });
}

template <class T>
Var<T> abs(const Var<T>& a) {
    return make_op<T>("abs", elementwise_unary(a.val(), [](T x) { return std::abs(x); }), {a},
                      [](const Var<T>& self, const Var<T>& cot) {
                          Tensor<T> sgn = elementwise_unary(self.input(0).val(),
                                                            [](T x) { return x > 0 ? T(1) : (x < 0 ? T(-1) : T(0)); });
                          return std::vector<Var<T>>{mul(cot, constant(std::move(sgn)))};
                      });
}

template <class T>
Var<T> sigmoid(const Var<T>& a) {
    return make_op<T>("sigmoid",
                      elementwise_unary(a.val(), [](T x) { return T(1) / (T(1) + std::exp(-x)); }), {a},
                      [](const Var<T>& self, const Var<T>& cot) {
                          Var<T> y = self;
                          return std::vector<Var<T>>{mul(cot, mul(y, add_scalar(neg(y), T(1))))};
                      });
}

template <class T>
Var<T> tanh(const Var<T>& a) {
    return make_op<T>("tanh", elementwise_unary(a.val(), [](T x) { return std::tanh(x); }), {a},
                      [](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{mul(cot, add_scalar(neg(square(self)), T(1)))};
                      });
}

template <class T>
Var<T> lrelu(const Var<T>& a, T slope = T(0.2)) {
    return make_op<T>("lrelu",
                      elementwise_unary(a.val(), [slope](T x) { return x > 0 ? x : slope * x; }), {a},
                      [slope](const Var<T>& self, const Var<T>& cot) {
                          Tensor<T> m = elementwise_unary(self.input(0).val(),
                                                          [slope](T x) { return x > 0 ? T(1) : slope; });
                          return std::vector<Var<T>>{mul(cot, constant(std::move(m)))};
                      });
}

template <class T>
Var<T> relu(const Var<T>& a) {
    return lrelu(a, T(0));
}

template <class T>
Var<T> clamp(const Var<T>& a, T lo, T hi) {
    return make_op<T>("clamp",
                      elementwise_unary(a.val(), [lo, hi](T x) { return x < lo ? lo : (x > hi ? hi : x); }),
                      {a}, [lo, hi](const Var<T>& self, const Var<T>& cot) {
                          Tensor<T> m = elementwise_unary(self.input(0).val(),
                                                          [lo, hi](T x) { return (x >= lo && x <= hi) ? T(1) : T(0); });
                          return std::vector<Var<T>>{mul(cot, constant(std::move(m)))};
                      });
}

// ---- rank-2 linear algebra (Eigen-backed) ------------------------------

template <class T>
using EigenMapRM = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class T>
using EigenMapRMConst =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <class T>
Tensor<T> matmul_tensors(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dims[1] != b.dims[0])
        throw std::invalid_argument("matmul shapes " + dims_str(a.dims) + " x " + dims_str(b.dims));
    Tensor<T> out({a.dims[0], b.dims[1]});
    EigenMapRMConst<T> A(a.data.data(), a.dims[0], a.dims[1]);
    EigenMapRMConst<T> B(b.data.data(), b.dims[0], b.dims[1]);
    EigenMapRM<T> C(out.data.data(), out.dims[0], out.dims[1]);
    C.noalias() = A * B;
    return out;
}

template <class T>
Var<T> transpose(const Var<T>& a) {
    if (a.val().rank() != 2) throw std::invalid_argument("transpose expects rank-2");
    Tensor<T> out({a.dims()[1], a.dims()[0]});
    for (std::int64_t i = 0; i < a.dims()[0]; ++i)
        for (std::int64_t j = 0; j < a.dims()[1]; ++j) out.at(j, i) = a.val().at(i, j);
    return make_op<T>("transpose", std::move(out), {a},
                      [](const Var<T>& self, const Var<T>& cot) {
                          return std::vector<Var<T>>{transpose(cot)};
                      });
}

template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
    return make_op<T>("matmul", matmul_tensors(a.val(), b.val()), {a, b},
                      [](const Var<T>& self, const Var<T>& cot) {
                          std::vector<Var<T>> g(2);
                          if (self.input(0).requires_grad()) g[0] = matmul(cot, transpose(self.input(1)));
                          if (self.input(1).requires_grad()) g[1] = matmul(transpose(self.input(0)), cot);
                          return g;
                      });
}

// ---- operators ---------------------------------------------------------

template <class T>
Var<T> operator+(const Var<T>& a, const Var<T>& b) {
    return add(a, b);
}
template <class T>
Var<T> operator-(const Var<T>& a, const Var<T>& b) {
    return sub(a, b);
}
template <class T>
Var<T> operator*(const Var<T>& a, const Var<T>& b) {
    return mul(a, b);
}
template <class T>
Var<T> operator/(const Var<T>& a, const Var<T>& b) {
    return divide(a, b);
}
template <class T>
Var<T> operator-(const Var<T>& a) {
    return neg(a);
}

// ---- reverse pass -------------------------------------------------------

// Cotangents of `output` w.r.t. each Var in `wrt`. The returned Vars are
// part of the graph, so they can be differentiated again. Missing paths
// yield zero tensors.
template <class T>
std::vector<Var<T>> grad(const Var<T>& output, const std::vector<Var<T>>& wrt,
                         Var<T> seed = Var<T>()) {
    if (!output.requires_grad())
        throw std::invalid_argument("grad: output does not depend on any differentiable leaf");

    // topological order over the requires_grad subgraph
    std::vector<Node<T>*> topo;
    std::unordered_map<Node<T>*, int> state; // 0 unseen, 1 open, 2 done
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(output.node(), 0);
    state[output.node()] = 1;
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->inputs.size()) {
            Node<T>* c = n->inputs[idx].node();
            ++idx;
            if (c && n->inputs[idx - 1].requires_grad() && state[c] == 0) {
                state[c] = 1;
                stack.emplace_back(c, 0);
            }
        } else {
            state[n] = 2;
            topo.push_back(n);
            stack.pop_back();
        }
    }

    std::unordered_map<Node<T>*, Var<T>> cot;
    std::unordered_map<Node<T>*, std::shared_ptr<Node<T>>> keep;
    keep[output.node()] = output.shared();
    cot[output.node()] = seed.defined() ? seed : ones_like(output);

    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Node<T>* n = *it;
        auto c = cot.find(n);
        if (c == cot.end() || n->inputs.empty() || !n->vjp) continue;
        Var<T> self = Var<T>::wrap(keep.count(n) ? keep[n] : nullptr);
        if (!self.defined()) {
            // reconstruct a shared_ptr via one of the consumers we stored
            throw std::logic_error("grad: topo node lost ownership");
        }
        std::vector<Var<T>> gs = n->vjp(self, c->second);
        for (std::size_t i = 0; i < n->inputs.size(); ++i) {
            const Var<T>& in = n->inputs[i];
            if (!in.requires_grad() || i >= gs.size() || !gs[i].defined()) continue;
            keep[in.node()] = in.shared();
            auto acc = cot.find(in.node());
            if (acc == cot.end())
                cot[in.node()] = gs[i];
            else
                acc->second = add(acc->second, gs[i]);
        }
    }

    std::vector<Var<T>> out;
    out.reserve(wrt.size());
    for (const auto& w : wrt) {
        auto c = cot.find(w.node());
        out.push_back(c != cot.end() ? c->second : zeros_like(w));
    }
    return out;
}

template <class T>
Var<T> grad_single(const Var<T>& output, const Var<T>& wrt, Var<T> seed = Var<T>()) {
    return grad(output, std::vector<Var<T>>{wrt}, std::move(seed))[0];
}

} // namespace vcn
