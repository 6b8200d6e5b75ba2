#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>

#include "kwlab/errors.hpp"
#include "kwlab/field.hpp"
#include "kwlab/problem.hpp"

namespace kw {

// Principal (smallest) eigenpair of the linearization around a state u:
//
//     L_u phi = (-laplacian - 2 K e^{2u}) phi = lambda phi
//
// in the domain's L2 inner product. lambda > 0 certifies a strict local
// minimizer of the energy; lambda < 0 an unstable critical point.
struct EigenResult {
    double lambda = 0.0;
    ScalarField phi;       // L2-normalized, oriented to nonnegative mean
    std::size_t iterations = 0;
    bool converged = false;
};

struct EigenOptions {
    double tol = 1e-9;          // residual |L phi - lambda phi|_L2 target
    std::size_t max_iter = 500;
    double inner_tol = 1e-12;
    std::size_t inner_max_iter = 0;
    std::uint64_t seed = 0x9e3779b97f4a7c15ull;  // fixed: bit-stable runs
};

namespace detail {
// xorshift64*: cheap deterministic start vectors, no <random> state to drag
inline double unit_noise(std::uint64_t& s) {
    s ^= s >> 12;
    s ^= s << 25;
    s ^= s >> 27;
    return static_cast<double>((s * 0x2545f4914f6cdd1dull) >> 11) /
               static_cast<double>(1ull << 53) - 0.5;
}
} // namespace detail

inline EigenResult principal_eigenpair(const ProblemSpec& spec, const ScalarField& u,
                                       const EigenOptions& opts = {}) {
    const auto& dom = spec.domain;
    const std::size_t n = dom->size();

    // potential term of L_u and a shift pushing the operator strictly
    // positive definite: L_u - sigma >= 1 in form sense
    ScalarField pot(dom);
    const ScalarField e = exp2u(u);
    double pot_min = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        pot[i] = -2.0 * spec.k[i] * e[i];
        pot_min = std::min(pot_min, pot[i]);
    }
    const double sigma = pot_min - 1.0;
    ScalarField shifted(dom);
    for (std::size_t i = 0; i < n; ++i) shifted[i] = pot[i] - sigma;

    ScalarField x(dom);
    std::uint64_t s = opts.seed;
    for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.01 * detail::unit_noise(s);
    x *= 1.0 / l2_norm(x);

    const std::size_t inner_cap = opts.inner_max_iter ? opts.inner_max_iter : 10 * n;
    auto apply_l = [&](const ScalarField& v) {
        ScalarField lv = laplacian(v);
        for (std::size_t i = 0; i < n; ++i) lv[i] = -lv[i] + pot[i] * v[i];
        return lv;
    };

    EigenResult out;
    ScalarField y(dom);
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        dom->helmholtz_var(shifted.values(), x.values(), y.values(), opts.inner_tol,
                           inner_cap);
        y *= 1.0 / l2_norm(y);
        ScalarField ly = apply_l(y);
        const double lambda = l2_inner(ly, y);
        axpy(-lambda, y, ly);
        const double res = l2_norm(ly);
        x = y;
        out.iterations = it;
        out.lambda = lambda;
        if (res <= opts.tol * std::max(1.0, std::abs(lambda))) {
            out.converged = true;
            break;
        }
    }
    if (integrate(x) < 0.0) x *= -1.0;
    out.phi = std::move(x);
    return out;
}

} // namespace kw
