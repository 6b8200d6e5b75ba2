#pragma once

#include <cmath>

#include "kwlab/errors.hpp"
#include "kwlab/field.hpp"
#include "kwlab/problem.hpp"

namespace kw {

// Variational structure. Solutions of
//     -laplacian(u) + alpha = K e^{2u}
// are critical points of
//     F(u) = integral( |grad u|^2 + 2 alpha u - K e^{2u} ).
// The L2 gradient is grad_F(u) = 2(-laplacian(u) + alpha - K e^{2u}), i.e.
// exactly twice the equation residual. Because the Dirichlet term is
// evaluated through the operator (summation by parts), these identities hold
// at the discrete level to round-off.

inline double energy(const ProblemSpec& spec, const ScalarField& u) {
    const ScalarField e = exp2u(u);
    double acc = dirichlet_energy(u);
    acc += 2.0 * spec.alpha * integrate(u);
    acc -= l2_inner(spec.k, e);
    return acc;
}

inline ScalarField energy_gradient(const ProblemSpec& spec, const ScalarField& u) {
    ScalarField g = residual_field(spec, u);
    g *= 2.0;
    return g;
}

// Second variation of F at u in direction phi:
//     d^2/dt^2 F(u + t phi) |_{t=0} = 2 integral( |grad phi|^2 - 2 K e^{2u} phi^2 )
// Reported WITHOUT the leading factor 2, matching the quadratic form of the
// linearized operator  L_u = -laplacian - 2 K e^{2u}; its sign decides local
// minimality.
inline double second_variation(const ProblemSpec& spec, const ScalarField& u,
                               const ScalarField& phi) {
    require_same_domain(u, phi);
    const ScalarField e = exp2u(u);
    double acc = dirichlet_energy(phi);
    ScalarField kphi = phi;
    for (std::size_t i = 0; i < kphi.size(); ++i)
        kphi[i] = spec.k[i] * e[i] * phi[i];
    acc -= 2.0 * l2_inner(kphi, phi);
    return acc;
}

// ---- shifted functional around a known solution -----------------------------

// Weight R = K e^{2 u1} for the shifted problem. Requires u1 to actually
// solve the equation (residual below 1e-6), otherwise the algebra below is
// meaningless and we refuse.
struct ShiftedWeight {
    ScalarField weight;   // R
    double total = 0.0;   // integral of R = alpha |M| up to the residual
};

inline ShiftedWeight shifted_weight(const ProblemSpec& spec, const ScalarField& u1) {
    const double res = residual_linf(spec, u1);
    if (!(res < 1e-6))
        throw error(errc::precondition_violated,
                    "shifted_weight: u1 is not a solution (residual " + std::to_string(res) + ")");
    const ScalarField e = exp2u(u1);
    ScalarField r = pointwise_mul(spec.k, e);
    const double total = integrate(r);
    return {std::move(r), total};
}

// Shifted functional, normalized so J(0) = 0:
//     J(v) = integral( |grad v|^2 + R (2v + 1 - e^{2v}) ).
// It satisfies F(u1 + v) = F(u1) + J(v) exactly when u1 solves the equation,
// so any v with J(v) > 0-level critical value lifts to a second solution
// u2 = u1 + v with F(u2) > F(u1).
inline double shifted_energy(const ScalarField& r_weight, const ScalarField& v) {
    require_same_domain(r_weight, v);
    const ScalarField e = exp2u(v);
    double acc = dirichlet_energy(v);
    ScalarField integrand = v;
    for (std::size_t i = 0; i < integrand.size(); ++i)
        integrand[i] = r_weight[i] * (2.0 * v[i] + 1.0 - e[i]);
    acc += integrate(integrand);
    return acc;
}

// L2 gradient: grad_J(v) = 2(-laplacian(v) + R - R e^{2v}).
inline ScalarField shifted_energy_gradient(const ScalarField& r_weight, const ScalarField& v) {
    require_same_domain(r_weight, v);
    ScalarField g = laplacian(v);
    const ScalarField e = exp2u(v);
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = 2.0 * (-g[i] + r_weight[i] * (1.0 - e[i]));
    return g;
}

inline double shifted_residual_linf(const ScalarField& r_weight, const ScalarField& v) {
    ScalarField g = shifted_energy_gradient(r_weight, v);
    return 0.5 * linf(g);
}

} // namespace kw
