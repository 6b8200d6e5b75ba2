#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "kwlab/energy.hpp"
#include "kwlab/errors.hpp"
#include "kwlab/field.hpp"
#include "kwlab/problem.hpp"

namespace kw {

// Outcome of any solve attempt. `converged == false` with a populated field
// means the iteration budget ran out; that is information, not an error.
// lambda_min is filled by the spectral layer when requested.
struct SolutionRecord {
    ScalarField u;
    std::string method;
    double residual = 0.0;        // sup norm of the equation residual
    double gap = 0.0;             // integral-balance defect, area-normalized
    double energy_value = 0.0;
    std::optional<double> lambda_min;
    std::size_t iterations = 0;
    bool converged = false;
};

inline SolutionRecord make_record(const ProblemSpec& spec, ScalarField u,
                                  std::string method, std::size_t iterations,
                                  bool converged) {
    SolutionRecord rec;
    rec.residual = residual_linf(spec, u);
    rec.gap = identity_gap(spec, u);
    rec.energy_value = energy(spec, u);
    rec.u = std::move(u);
    rec.method = std::move(method);
    rec.iterations = iterations;
    rec.converged = converged;
    return rec;
}

struct SolveOptions {
    double tol = 1e-10;            // residual sup-norm target
    std::size_t max_iter = 2000;   // outer iterations
    double inner_tol = 1e-12;      // linear solve relative residual
    std::size_t inner_max_iter = 0;  // 0: pick 10 * dof count
};

inline std::size_t inner_budget(const SolveOptions& o, const DomainPtr& dom) {
    return o.inner_max_iter ? o.inner_max_iter : 10 * dom->size();
}

// ---- certified comparison functions ----------------------------------------

// min over x of (-lap(u) + alpha - K e^{2u}); >= 0 certifies a super
// solution, and -max(...) >= 0 a sub solution. The slack callers should
// tolerate scales with the largest term in the residual evaluation.
inline double supersolution_margin(const ProblemSpec& spec, const ScalarField& u) {
    return field_min(residual_field(spec, u));
}

inline double subsolution_margin(const ProblemSpec& spec, const ScalarField& u) {
    return -field_max(residual_field(spec, u));
}

inline double comparison_slack(const ProblemSpec& spec, const ScalarField& u) {
    const ScalarField e = exp2u(u);
    double big = std::abs(spec.alpha);
    for (std::size_t i = 0; i < u.size(); ++i)
        big = std::max(big, std::abs(spec.k[i]) * e[i]);
    big = std::max(big, linf(laplacian(u)));
    return 1e-11 * big + 1e-12;
}

// Constant sub solution for any instance with min K < 0:
//     c = (1/2) log(|alpha| / max(-K)) - 1,
// which leaves margin (1 - e^{-2}) |alpha|. Any more negative constant is
// also a sub solution. If K >= 0 everywhere the integral balance
// integral(K e^{2u}) = alpha |M| < 0 is impossible and we say so.
inline ScalarField constant_subsolution(const ProblemSpec& spec) {
    const double neg_peak = -field_min(spec.k);
    if (!(neg_peak > 0.0))
        throw error(errc::not_solvable,
                    "K is nowhere negative; no solution can exist for negative alpha");
    const double c = 0.5 * std::log(std::abs(spec.alpha) / neg_peak) - 1.0;
    return ScalarField(spec.domain, c);
}

// Super solution for K <= 0 (not identically zero), built from one Poisson
// solve: -lap(w0) = K - mean(K), w = w0 - min(w0) + 1, b = 1.1 max(1,
// |alpha|/|mean K|), and u_super = b w + (1/2) log b. Margin >= 0.1 |alpha|.
// Works for every alpha < 0, which is exactly the unbounded-threshold
// regime this weight class sits in.
inline ScalarField supersolution_nonpositive_k(const ProblemSpec& spec) {
    if (field_max(spec.k) > 0.0)
        throw error(errc::inadmissible, "super solution construction needs K <= 0");
    const double kbar = mean(spec.k);
    if (!(kbar < 0.0))
        throw error(errc::not_solvable, "K vanishes identically");

    ScalarField src = spec.k;
    src += -kbar;
    ScalarField w = poisson(src);
    w += -field_min(w) + 1.0;

    const double b = 1.1 * std::max(1.0, std::abs(spec.alpha) / std::abs(kbar));
    w *= b;
    w += 0.5 * std::log(b);
    return w;
}

// Continuation: a solution at a more negative alpha_prev is a strict super
// solution at alpha (the residual gains alpha - alpha_prev > 0). Verified
// pointwise before being handed out.
inline ScalarField supersolution_from_continuation(const ProblemSpec& spec,
                                                   const ScalarField& u_prev,
                                                   double alpha_prev) {
    if (!(alpha_prev < spec.alpha))
        throw error(errc::invalid_argument,
                    "continuation super solution needs alpha_prev < alpha");
    const double margin = supersolution_margin(spec, u_prev);
    if (margin < -comparison_slack(spec, u_prev))
        throw error(errc::precondition_violated,
                    "continuation candidate is not a super solution here");
    return u_prev;
}

// ---- monotone super/sub iteration -------------------------------------------

// From a verified super solution, iterate
//     (-lap + lam_n) u_{n+1} = lam_n u_n + K e^{2 u_n} - alpha
// with the pointwise shift lam_n(x) = 1 + 2 max(-K(x), 0) e^{2 u_n(x)}.
// Each iterate stays a super solution and decreases pointwise toward the
// maximal solution below it, never dropping under `sub`. The pointwise shift
// matters: a single global
// constant shift of size max induces steps of size residual/max, which
// freezes the iteration wherever K nearly vanishes once the super solution
// sits far above the solution (large |alpha|).
inline SolutionRecord monotone_solve(const ProblemSpec& spec, const ScalarField& sub,
                                     const ScalarField& super, const SolveOptions& opts = {}) {
    require_same_domain(sub, super);
    if (sub.domain().get() != spec.domain.get())
        throw error(errc::invalid_argument, "sub/super live on a different domain");

    const double slack_super = comparison_slack(spec, super);
    if (supersolution_margin(spec, super) < -slack_super)
        throw error(errc::precondition_violated, "monotone_solve: super solution fails its check");
    if (subsolution_margin(spec, sub) < -comparison_slack(spec, sub))
        throw error(errc::precondition_violated, "monotone_solve: sub solution fails its check");
    for (std::size_t i = 0; i < sub.size(); ++i)
        if (sub[i] > super[i] + 1e-9)
            throw error(errc::invalid_argument, "monotone_solve: sub exceeds super");

    const auto& dom = spec.domain;
    ScalarField u = super;
    ScalarField lam(dom), rhs(dom), next(dom);
    const std::size_t inner_cap = inner_budget(opts, dom);

    std::size_t it = 0;
    for (; it < opts.max_iter; ++it) {
        const ScalarField e = exp2u(u);
        double res_inf = 0.0;
        double rhs_inf = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            lam[i] = 1.0 + 2.0 * std::max(-spec.k[i], 0.0) * e[i];
            rhs[i] = lam[i] * u[i] + spec.k[i] * e[i] - spec.alpha;
            rhs_inf = std::max(rhs_inf, std::abs(rhs[i]));
        }
        ScalarField lap = laplacian(u);
        for (std::size_t i = 0; i < u.size(); ++i)
            res_inf = std::max(res_inf, std::abs(-lap[i] + spec.alpha - spec.k[i] * e[i]));
        if (res_inf <= opts.tol) break;

        // couple the inner accuracy to the outer residual: the march only
        // needs the direction while far out, but its error floor must keep
        // dropping below the shrinking residual or the outer loop stalls
        const double itol = std::max(opts.inner_tol,
                                     std::min(1e-6, 1e-3 * res_inf / (1.0 + rhs_inf)));
        dom->helmholtz_var(lam.values(), rhs.values(), next.values(), itol, inner_cap);
        u = next;
    }
    return make_record(spec, std::move(u), "monotone", it, it < opts.max_iter);
}

// ---- damped Newton on the general exponential equation ----------------------

//     G(u) = -lap(u) + a(x) - b(x) e^{2u} = 0
// covers both the original equation (a = alpha, b = K) and the shifted one
// (a = b = R). Jacobian -lap - 2 b e^{2u} may be indefinite; steps come from
// the domain's symmetric Krylov solve and are accepted under a residual-norm
// Armijo test. Line-search collapse ends the iteration with converged=false
// instead of looping the budget out.
struct NewtonResult {
    ScalarField u;
    double residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

inline NewtonResult newton_general(const DomainPtr& dom, const ScalarField& a,
                                   const ScalarField& b, const ScalarField& u0,
                                   const SolveOptions& opts) {
    auto eval = [&](const ScalarField& u, ScalarField& g) -> double {
        ScalarField lap = laplacian(u);
        const ScalarField e = exp2u(u);
        double sup = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            g[i] = -lap[i] + a[i] - b[i] * e[i];
            sup = std::max(sup, std::abs(g[i]));
        }
        return sup;
    };

    NewtonResult out;
    ScalarField u = u0;
    ScalarField g(dom), shift(dom), step(dom), trial(dom), gtrial(dom);
    double res = eval(u, g);
    const std::size_t inner_cap =
        opts.inner_max_iter ? opts.inner_max_iter : std::max<std::size_t>(400, dom->size());

    std::size_t it = 0;
    std::size_t stalls = 0;
    for (; it < opts.max_iter && res > opts.tol; ++it) {
        const ScalarField e = exp2u(u);
        for (std::size_t i = 0; i < u.size(); ++i) shift[i] = -2.0 * b[i] * e[i];
        ScalarField neg_g = g;
        neg_g *= -1.0;
        dom->indefinite_solve(shift.values(), neg_g.values(), step.values(),
                              std::min(1e-10, opts.inner_tol * 100.0), inner_cap);

        double s = 1.0;
        bool accepted = false;
        for (int half = 0; half < 50; ++half) {
            for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] + s * step[i];
            double rt;
            try {
                rt = eval(trial, gtrial);
            } catch (const error& err) {
                if (err.code() != errc::diverged) throw;
                s *= 0.5;
                continue;
            }
            if (rt <= (1.0 - 1e-4 * s) * res) {
                u = trial;
                g = gtrial;
                res = rt;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) {
            ++it;
            break;
        }
        stalls = s < 1e-8 ? stalls + 1 : 0;
        if (stalls >= 3) {
            ++it;
            break;
        }
    }
    out.u = std::move(u);
    out.residual = res;
    out.iterations = it;
    out.converged = res <= opts.tol;
    return out;
}

inline SolutionRecord newton_polish(const ProblemSpec& spec, const ScalarField& u0,
                                    const SolveOptions& opts = {}) {
    const ScalarField a(spec.domain, spec.alpha);
    NewtonResult r = newton_general(spec.domain, a, spec.k, u0, opts);
    return make_record(spec, std::move(r.u), "newton", r.iterations, r.converged);
}

// ---- convex minimization for K <= 0 -----------------------------------------

// When K <= 0 the functional F is strictly convex along non-constant
// directions and coercive for alpha < 0, so damped Newton with an Armijo
// test on F itself converges globally from any start; the Jacobian
// -lap + 2(-K)e^{2u} is positive definite and admits the positive-shift
// solve directly.
inline SolutionRecord convex_minimize(const ProblemSpec& spec, const ScalarField& u0,
                                      const SolveOptions& opts = {}) {
    if (field_max(spec.k) > 0.0)
        throw error(errc::inadmissible, "convex_minimize needs K <= 0");
    if (!(mean(spec.k) < 0.0))
        throw error(errc::not_solvable, "K vanishes identically");

    const auto& dom = spec.domain;
    ScalarField u = u0;
    ScalarField lam(dom), step(dom), trial(dom);
    double f_val = energy(spec, u);
    const std::size_t inner_cap = inner_budget(opts, dom);

    std::size_t it = 0;
    for (; it < opts.max_iter; ++it) {
        ScalarField g = residual_field(spec, u);
        const double res = linf(g);
        if (res <= opts.tol) break;

        const ScalarField e = exp2u(u);
        for (std::size_t i = 0; i < u.size(); ++i)
            lam[i] = std::max(2.0 * (-spec.k[i]) * e[i], 0.0);
        // Newton direction: (-lap + lam) step = g, u moves along -step.
        // grad F = 2 g, so dF/ds at s=0 equals -2 <g, step> < 0 (the
        // Jacobian is positive definite in this regime).
        dom->indefinite_solve(lam.values(), g.values(), step.values(),
                              std::min(1e-10, opts.inner_tol * 100.0), inner_cap);
        const double slope = -2.0 * l2_inner(g, step);

        double s = 1.0;
        bool accepted = false;
        for (int half = 0; half < 60; ++half) {
            for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] - s * step[i];
            double ft;
            try {
                ft = energy(spec, trial);
            } catch (const error& err) {
                if (err.code() != errc::diverged) throw;
                s *= 0.5;
                continue;
            }
            if (ft <= f_val + 1e-4 * s * slope) {
                u = trial;
                f_val = ft;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) {
            ++it;
            break;
        }
    }
    return make_record(spec, std::move(u), "convex-min", it,
                       it < opts.max_iter && residual_linf(spec, u) <= opts.tol);
}

} // namespace kw
