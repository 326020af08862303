#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "vcn/autodiff.hpp"
#include "vcn/rng.hpp"

namespace vcn {

// Finite-difference verification of the reverse pass: compares
// central-difference directional derivatives of a scalarized output
// against <analytic gradient, direction> for random directions.

struct GradCheckOptions {
    double step = 1e-3;
    int directions = 3;
    std::uint64_t seed = 0x67c5;
    double rel_floor = 1e-6;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst;
    bool finite = true;

    bool pass(double tolerance) const { return finite && max_rel_err <= tolerance; }
};

// `build` re-runs the computation from the current leaf values and
// returns the output Var. Leaves in `check` are the inputs whose
// gradients get verified; other leaves the output depends on are left
// alone. The output may be any shape; it is scalarized against a fixed
// random cotangent.
template <class T>
GradCheckReport grad_check(const std::function<Var<T>()>& build, std::vector<Var<T>> check,
                           GradCheckOptions opt = {}) {
    Rng rng(opt.seed);
    Var<T> y0 = build();
    Tensor<T> u = Tensor<T>::rand_uniform(y0.dims(), rng, T(-1), T(1));

    auto scalarize = [&u](const Var<T>& y) { return sum(mul(y, constant(u))); };

    Var<T> phi = scalarize(y0);
    std::vector<Var<T>> analytic = grad(phi, check);

    GradCheckReport rep;
    if (!phi.val().all_finite()) {
        rep.finite = false;
        rep.worst = "non-finite output";
        return rep;
    }

    const T h = static_cast<T>(opt.step);
    for (std::size_t i = 0; i < check.size(); ++i) {
        const Tensor<T>& ga = analytic[i].val();
        if (!ga.all_finite()) {
            rep.finite = false;
            rep.worst = "non-finite analytic gradient for input " + std::to_string(i);
            return rep;
        }
        Tensor<T> saved = check[i].val();
        for (int d = 0; d < opt.directions; ++d) {
            Tensor<T> v = Tensor<T>::randn(saved.dims, rng);
            T dot = 0;
            for (std::int64_t k = 0; k < v.numel(); ++k) dot += ga[k] * v[k];

            auto eval_at = [&](T sign_h) {
                Tensor<T> perturbed = saved;
                for (std::int64_t k = 0; k < v.numel(); ++k) perturbed[k] += sign_h * v[k];
                check[i].mutable_val() = std::move(perturbed);
                T out = scalarize(build()).val().item();
                return out;
            };
            T fp = eval_at(h);
            T fm = eval_at(-h);
            check[i].mutable_val() = saved;

            const double fd = (static_cast<double>(fp) - static_cast<double>(fm)) / (2.0 * static_cast<double>(h));
            const double an = static_cast<double>(dot);
            if (!std::isfinite(fd) || !std::isfinite(an)) {
                rep.finite = false;
                rep.worst = "non-finite finite-difference probe for input " + std::to_string(i);
                return rep;
            }
            const double rel =
                std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), opt.rel_floor});
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                std::ostringstream os;
                os << "input " << i << " direction " << d << ": fd=" << fd << " analytic=" << an;
                rep.worst = os.str();
            }
        }
    }
    return rep;
}

// Convenience wrapper for functions of explicit tensor inputs.
template <class T>
GradCheckReport grad_check_fn(const std::function<Var<T>(const std::vector<Var<T>>&)>& f,
                              const std::vector<Tensor<T>>& inputs, GradCheckOptions opt = {}) {
    std::vector<Var<T>> leaves;
    leaves.reserve(inputs.size());
    for (const auto& t : inputs) leaves.push_back(leaf(t));
    auto build = [f, leaves]() { return f(leaves); };
    return grad_check<T>(build, leaves, opt);
}

} // namespace vcn
