#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "kwlab/errors.hpp"
#include "kwlab/reduce.hpp"

namespace kw {

struct LinSolveResult {
    std::size_t iterations = 0;
    double rel_residual = 0.0;
    bool converged = true;
};

// Residual metric for the CG stopping test. When the operator's diagonal
// spans many orders of magnitude (variable exponential shifts), the
// Euclidean residual is dominated by the stiff rows and says nothing about
// accuracy in the soft ones; the preconditioned norm sqrt(r' P r) weighs
// rows by their own scale.
enum class PcgStop { euclidean, preconditioned };

// Preconditioned conjugate gradients for symmetric positive definite
// operators. `apply` and `precond` map a const span to a same-size span;
// `precond` must be SPD. x is both start value and result.
template <class Apply, class Precond>
LinSolveResult pcg(Apply&& apply, Precond&& precond,
                   std::span<const double> b, std::span<double> x,
                   double tol, std::size_t max_iter,
                   PcgStop stop = PcgStop::euclidean) {
    const std::size_t n = b.size();
    std::vector<double> r(n), z(n), p(n), q(n);

    precond(b, std::span<double>(z));
    const double b_pre = std::sqrt(std::max(dot(b, z), 0.0));
    const double b_euc = std::sqrt(dot(b, b));
    const double bnorm = stop == PcgStop::euclidean ? b_euc : b_pre;
    if (bnorm == 0.0) {
        for (auto& xi : x) xi = 0.0;
        return {0, 0.0, true};
    }

    apply(std::span<const double>(x), std::span<double>(q));
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];

    precond(std::span<const double>(r), std::span<double>(z));
    p = z;
    double rz = dot(r, z);
    if (rz < 0.0) throw error(errc::solver_failure, "cg: preconditioner not positive definite");

    auto metric = [&](double rz_cur) {
        return stop == PcgStop::euclidean ? std::sqrt(dot(r, r)) : std::sqrt(std::max(rz_cur, 0.0));
    };

    LinSolveResult res;
    res.rel_residual = metric(rz) / bnorm;
    if (res.rel_residual <= tol) return res;

    for (std::size_t it = 1; it <= max_iter; ++it) {
        apply(std::span<const double>(p), std::span<double>(q));
        const double pq = dot(p, q);
        if (!(pq > 0.0))
            throw error(errc::solver_failure, "cg: operator not positive definite");
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        precond(std::span<const double>(r), std::span<double>(z));
        const double rz_new = dot(r, z);
        res.iterations = it;
        res.rel_residual = metric(rz_new) / bnorm;
        if (res.rel_residual <= tol) return res;

        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    res.converged = false;
    return res;
}

// Preconditioned MINRES for symmetric (possibly indefinite) operators,
// after Paige & Saunders. The preconditioner must be SPD. Stops on the
// recurrence residual estimate, then reports the true relative residual.
// x must come in zeroed; a warm start is applied by the caller shifting b.
template <class Apply, class Precond>
LinSolveResult minres(Apply&& apply, Precond&& precond,
                      std::span<const double> b, std::span<double> x,
                      double tol, std::size_t max_iter) {
    const std::size_t n = b.size();
    for (auto& xi : x) xi = 0.0;

    std::vector<double> r1(b.begin(), b.end());
    std::vector<double> y(n);
    precond(std::span<const double>(r1), std::span<double>(y));
    double beta1 = dot(r1, y);
    if (beta1 < 0.0)
        throw error(errc::solver_failure, "minres: preconditioner not positive definite");
    if (beta1 == 0.0) return {0, 0.0, true};
    beta1 = std::sqrt(beta1);

    std::vector<double> r2 = r1, v(n), w(n, 0.0), w1(n, 0.0), w2(n, 0.0), av(n);

    double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0;
    double phibar = beta1, cs = -1.0, sn = 0.0, oldeps = 0.0;

    LinSolveResult res;
    for (std::size_t itn = 1; itn <= max_iter; ++itn) {
        const double s = 1.0 / beta;
        for (std::size_t i = 0; i < n; ++i) v[i] = s * y[i];

        apply(std::span<const double>(v), std::span<double>(av));
        if (itn >= 2) {
            const double c = beta / oldb;
            for (std::size_t i = 0; i < n; ++i) av[i] -= c * r1[i];
        }
        const double alfa = dot(v, av);
        {
            const double c = alfa / beta;
            for (std::size_t i = 0; i < n; ++i) av[i] -= c * r2[i];
        }
        r1 = r2;
        r2 = av;
        precond(std::span<const double>(r2), std::span<double>(y));
        oldb = beta;
        beta = dot(r2, y);
        if (beta < 0.0)
            throw error(errc::solver_failure, "minres: preconditioner not positive definite");
        beta = std::sqrt(beta);

        oldeps = epsln;
        const double delta = cs * dbar + sn * alfa;
        const double gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        double gamma = std::sqrt(gbar * gbar + beta * beta);
        gamma = std::max(gamma, std::numeric_limits<double>::epsilon());
        cs = gbar / gamma;
        sn = beta / gamma;
        const double phi = cs * phibar;
        phibar = sn * phibar;

        w1 = w2;
        w2 = w;
        const double denom = 1.0 / gamma;
        for (std::size_t i = 0; i < n; ++i)
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
        for (std::size_t i = 0; i < n; ++i) x[i] += phi * w[i];

        res.iterations = itn;
        if (phibar / beta1 <= tol) break;
    }

    // true residual, unpreconditioned
    apply(std::span<const double>(x), std::span<double>(av));
    for (std::size_t i = 0; i < n; ++i) av[i] = b[i] - av[i];
    const double bnorm = std::sqrt(dot(b, b));
    res.rel_residual = bnorm > 0.0 ? std::sqrt(dot(av, av)) / bnorm : 0.0;
    res.converged = res.rel_residual <= std::max(tol * 100.0, 1e-8) || phibar / beta1 <= tol;
    return res;
}

} // namespace kw
