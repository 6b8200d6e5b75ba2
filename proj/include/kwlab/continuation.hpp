#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "kwlab/eigen.hpp"
#include "kwlab/errors.hpp"
#include "kwlab/field.hpp"
#include "kwlab/problem.hpp"
#include "kwlab/solvers.hpp"

namespace kw {

// Solvability of the equation is monotone in alpha: a solution at a more
// negative alpha_prev is a strict super solution at any alpha above it, so
// the solvable set is an up-set (alpha0, 0). Sweeps walk alpha downward from
// the value nearest zero, seeding each solve from its neighbors; the
// threshold estimate bisects, keeping the lower endpoint unsolvable and the
// upper one solved.

struct SweepEntry {
    double alpha = 0.0;
    bool solvable = false;
    std::string strategy;            // which attempt landed (or "none")
    std::optional<SolutionRecord> record;
};

struct ContinuationOptions {
    SolveOptions solve;              // outer/inner budgets for each attempt
    std::size_t newton_max_iter = 40;
    bool fill_lambda_min = true;
    EigenOptions eigen;
};

namespace detail {

// Pool of solved instances available as seeds/super solutions.
struct SolvedPool {
    std::vector<std::pair<double, ScalarField>> entries; // (alpha, u)

    const std::pair<double, ScalarField>* best_below(double alpha) const {
        const std::pair<double, ScalarField>* best = nullptr;
        for (const auto& e : entries)
            if (e.first < alpha && (!best || e.first > best->first)) best = &e;
        return best;
    }
    const std::pair<double, ScalarField>* nearest(double alpha) const {
        const std::pair<double, ScalarField>* best = nullptr;
        for (const auto& e : entries)
            if (!best || std::abs(e.first - alpha) < std::abs(best->first - alpha)) best = &e;
        return best;
    }
};

inline bool acceptable(const SolutionRecord& rec, double tol) {
    return rec.converged && rec.residual <= tol && linf(rec.u) < kExpArgCap;
}

// One full solve attempt at a given alpha, walking the strategy ladder:
// certified monotone descent where a super solution exists, then Newton from
// continuation seeds, then Newton from a fan of constant starts.
inline SweepEntry probe_alpha(const DomainPtr& dom, const ScalarField& k, double alpha,
                              SolvedPool& pool, const ContinuationOptions& opts) {
    SweepEntry entry;
    entry.alpha = alpha;
    ProblemSpec spec(dom, k, alpha);

    SolveOptions newton_opts = opts.solve;
    newton_opts.max_iter = opts.newton_max_iter;

    auto finish = [&](SolutionRecord rec, const std::string& strategy) {
        entry.solvable = true;
        entry.strategy = strategy;
        pool.entries.emplace_back(alpha, rec.u);
        entry.record = std::move(rec);
    };

    // certified route for nonpositive weights
    if (field_max(spec.k) <= 0.0) {
        ScalarField super = supersolution_nonpositive_k(spec);
        ScalarField sub = constant_subsolution(spec);
        SolutionRecord rec = monotone_solve(spec, sub, super, opts.solve);
        if (!acceptable(rec, opts.solve.tol)) {
            SolutionRecord polished = newton_polish(spec, rec.u, newton_opts);
            if (acceptable(polished, opts.solve.tol)) rec = std::move(polished);
        }
        if (acceptable(rec, opts.solve.tol)) {
            finish(std::move(rec), "monotone");
            return entry;
        }
        entry.strategy = "none";
        return entry;
    }

    // monotone descent under a continuation super solution
    if (const auto* below = pool.best_below(alpha)) {
        try {
            ScalarField super = supersolution_from_continuation(spec, below->second, below->first);
            ScalarField sub = constant_subsolution(spec);
            const double floor_c = std::min(field_min(sub), field_min(super) - 1.0);
            ScalarField floor_field(dom, floor_c);
            SolutionRecord rec = monotone_solve(spec, floor_field, super, opts.solve);
            if (!acceptable(rec, opts.solve.tol)) {
                SolutionRecord polished = newton_polish(spec, rec.u, newton_opts);
                if (acceptable(polished, opts.solve.tol)) rec = std::move(polished);
            }
            if (acceptable(rec, opts.solve.tol)) {
                finish(std::move(rec), "monotone-continuation");
                return entry;
            }
        } catch (const error&) {
            // fall through to Newton
        }
    }

    // Newton from the nearest solved neighbor, shifted by the constant that
    // rescales e^{2u} by alpha/alpha_prev
    if (const auto* near = pool.nearest(alpha)) {
        try {
            ScalarField seed = near->second + 0.5 * std::log(alpha / near->first);
            SolutionRecord rec = newton_polish(spec, seed, newton_opts);
            if (acceptable(rec, opts.solve.tol)) {
                finish(std::move(rec), "newton-continuation");
                return entry;
            }
        } catch (const error& err) {
            if (err.code() != errc::diverged) throw;
        }
    }

    // cold starts: the balance-point constant and shifts around it
    const double kbar = mean(spec.k);
    const double base = kbar < 0.0 ? 0.5 * std::log(alpha / kbar) : -1.0;
    const double offsets[5] = {0.0, -0.75, 0.75, -1.5, 1.5};
    for (double off : offsets) {
        try {
            ScalarField seed(dom, base + off);
            SolutionRecord rec = newton_polish(spec, seed, newton_opts);
            if (acceptable(rec, opts.solve.tol)) {
                finish(std::move(rec), "newton-seed");
                return entry;
            }
        } catch (const error& err) {
            if (err.code() != errc::diverged) throw;
        }
    }

    entry.strategy = "none";
    return entry;
}

} // namespace detail

// Solve at every alpha in a strictly increasing, all-negative list.
// Processing order is descending (nearest zero first) so ready solutions
// seed the harder, more negative instances; entries come back in input
// order. An unsolvable alpha is an entry with solvable == false, not an
// error: it is exactly the information a threshold scan needs.
inline std::vector<SweepEntry> alpha_sweep(const DomainPtr& dom, const ScalarField& k,
                                           const std::vector<double>& alphas,
                                           const ContinuationOptions& opts = {}) {
    if (alphas.empty()) throw error(errc::invalid_argument, "alpha list is empty");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] < 0.0))
            throw error(errc::invalid_argument, "alpha values must be negative");
        if (i > 0 && !(alphas[i] > alphas[i - 1]))
            throw error(errc::invalid_argument, "alpha values must be strictly increasing");
    }

    detail::SolvedPool pool;
    std::vector<SweepEntry> out(alphas.size());
    for (std::size_t idx = alphas.size(); idx-- > 0;) {
        out[idx] = detail::probe_alpha(dom, k, alphas[idx], pool, opts);
        if (opts.fill_lambda_min && out[idx].solvable) {
            ProblemSpec spec(dom, k, alphas[idx]);
            EigenResult eig = principal_eigenpair(spec, out[idx].record->u, opts.eigen);
            if (eig.converged) out[idx].record->lambda_min = eig.lambda;
        }
    }
    return out;
}

// Locally minimizing solution for one instance. Nonpositive weights go the
// certified monotone route directly. Sign-changing weights start at an easy
// alpha near zero (where the balance constant seeds Newton reliably) and
// walk a geometric ladder down to the target, each rung seeding the next.
// Newton lands on *some* branch; to certify the minimizing one, overshoot
// slightly past the target and come back up with the monotone iteration,
// whose limit is the maximal solution under the continuation super solution
// (the stable branch). If the overshoot crosses the solvability threshold,
// the plain Newton answer stands.
inline SweepEntry first_solution(const DomainPtr& dom, const ScalarField& k, double alpha,
                                 const ContinuationOptions& opts = {}) {
    if (!(alpha < 0.0)) throw error(errc::invalid_argument, "alpha must be negative");

    detail::SolvedPool pool;
    SweepEntry entry;
    if (field_max(k) <= 0.0 || alpha >= -0.05) {
        entry = detail::probe_alpha(dom, k, alpha, pool, opts);
    } else {
        const double a0 = -0.05;
        const double ratio = alpha / a0;
        const std::size_t rungs =
            static_cast<std::size_t>(std::ceil(std::log(ratio) / std::log(2.0)));
        for (std::size_t j = 0; j < rungs; ++j) {
            const double a =
                a0 * std::pow(ratio, static_cast<double>(j) / static_cast<double>(rungs));
            detail::probe_alpha(dom, k, a, pool, opts); // failures just thin the pool
        }
        entry = detail::probe_alpha(dom, k, alpha, pool, opts);
    }

    if (entry.solvable && field_max(k) > 0.0 && entry.strategy != "monotone-continuation") {
        SweepEntry over = detail::probe_alpha(dom, k, alpha * 1.1, pool, opts);
        if (over.solvable) {
            SweepEntry stable = detail::probe_alpha(dom, k, alpha, pool, opts);
            if (stable.solvable && stable.strategy == "monotone-continuation")
                entry = std::move(stable);
        }
    }

    if (opts.fill_lambda_min && entry.solvable) {
        ProblemSpec spec(dom, k, alpha);
        EigenResult eig = principal_eigenpair(spec, entry.record->u, opts.eigen);
        if (eig.converged) entry.record->lambda_min = eig.lambda;
    }
    return entry;
}

struct ThresholdEstimate {
    double lo = 0.0;                 // unsolvable side
    double hi = 0.0;                 // solvable side
    std::size_t probes = 0;
    std::vector<SweepEntry> transcript;
};

// Bisect the solvability threshold inside [lo, hi]. Requires hi solvable
// and lo unsolvable; a weight with no threshold in the bracket (for example
// K <= 0, solvable all the way down) surfaces as invalid_bracket at the lo
// endpoint check.
inline ThresholdEstimate estimate_critical_alpha(const DomainPtr& dom, const ScalarField& k,
                                                 double lo, double hi, double width_tol,
                                                 const ContinuationOptions& opts = {},
                                                 std::size_t max_probes = 48) {
    if (!(lo < hi) || !(hi < 0.0))
        throw error(errc::invalid_argument, "bracket must satisfy lo < hi < 0");
    if (!(width_tol > 0.0))
        throw error(errc::invalid_argument, "width tolerance must be positive");

    detail::SolvedPool pool;
    ThresholdEstimate est;
    est.lo = lo;
    est.hi = hi;

    auto probe = [&](double alpha) -> const SweepEntry& {
        est.transcript.push_back(detail::probe_alpha(dom, k, alpha, pool, opts));
        ++est.probes;
        SweepEntry& e = est.transcript.back();
        if (opts.fill_lambda_min && e.solvable) {
            ProblemSpec spec(dom, k, alpha);
            EigenResult eig = principal_eigenpair(spec, e.record->u, opts.eigen);
            if (eig.converged) e.record->lambda_min = eig.lambda;
        }
        return e;
    };

    if (!probe(hi).solvable)
        throw error(errc::invalid_bracket, "upper endpoint is not solvable");
    if (probe(lo).solvable)
        throw error(errc::invalid_bracket,
                    "lower endpoint already solvable; no threshold inside the bracket");

    while (est.hi - est.lo > width_tol) {
        if (est.probes >= max_probes)
            throw error(errc::not_found, "probe budget exhausted before the width target");
        const double mid = 0.5 * (est.lo + est.hi);
        if (probe(mid).solvable)
            est.hi = mid;
        else
            est.lo = mid;
    }
    return est;
}

} // namespace kw
