#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "kwlab/eigen.hpp"
#include "kwlab/energy.hpp"
#include "kwlab/errors.hpp"
#include "kwlab/field.hpp"
#include "kwlab/solvers.hpp"

namespace kw {

// Numerical mountain pass on the shifted functional J around a first
// solution u1. The geometry: v = 0 is a local minimizer of J with J(0) = 0,
// and J(t w0) drops below any level for a direction w0 whose positive part
// sits where the weight R = K e^{2u1} is positive. A path from 0 to such a
// far endpoint must cross a ridge; relaxing the path's highest node downhill
// while keeping the endpoints pinned converges to the crossing point, a
// second critical point at level >= 0.

struct MountainPassOptions {
    std::size_t nodes = 21;          // path resolution, odd and >= 9
    double eps_factor = 0.1;         // bump support threshold, fraction of max R
    double relax_tol = 1e-5;         // H1 norm of preconditioned gradient at peak
    std::size_t max_sweeps = 4000;
    double t_cap = 1e6;              // endpoint scale search gives up here
    double distinct_tol = 0.1;       // |u2 - u1|_inf must beat this
    SolveOptions newton;             // peak polish + final polish
};

struct TraceRow {
    std::size_t sweep = 0;
    std::size_t peak = 0;
    double j_peak = 0.0;      // crest value when the sweep started
    double grad_norm = 0.0;
    double j_node_max = 0.0;  // node-wise max after the sweep's moves
};

struct MountainPassResult {
    ScalarField u;                   // polished crossing point of J
    double level = 0.0;              // J at the crossing point
    double t0 = 0.0;                 // endpoint scale actually used
    std::vector<ScalarField> path;
    std::vector<double> j_path;
    std::size_t peak_index = 0;
    std::size_t sweeps = 0;
    bool converged = false;
    std::vector<TraceRow> trace;
};

// Crossing direction: a smooth bump over the region where R is most
// positive, minus a balancing bump over the most negative region, scaled to
// zero mean and unit max. Radial profile (1 + cos(pi d / rho)) / 2.
inline ScalarField bump_direction(const ScalarField& r_weight, double eps_factor) {
    const auto& dom = r_weight.domain();
    const double rmax = field_max(r_weight);
    const double rmin = field_min(r_weight);
    if (!(rmax > 0.0))
        throw error(errc::inadmissible, "bump direction needs R positive somewhere");
    if (!(rmin < 0.0))
        throw error(errc::inadmissible, "bump direction needs R negative somewhere");
    const double eps_hi = eps_factor * rmax;
    const double eps_lo = eps_factor * (-rmin);

    const std::size_t c_hi = argmax(r_weight);
    const std::size_t c_lo = argmin(r_weight);
    const auto d_hi = dom->distance_from(c_hi);
    const auto d_lo = dom->distance_from(c_lo);

    auto support_radius = [&](const std::vector<double>& dist, auto inside) {
        double rho = dom->bump_radius_cap();
        for (std::size_t i = 0; i < dist.size(); ++i)
            if (!inside(i)) rho = std::min(rho, dist[i]);
        return rho;
    };
    const double rho_hi =
        support_radius(d_hi, [&](std::size_t i) { return r_weight[i] >= 0.5 * eps_hi; });
    const double rho_lo =
        support_radius(d_lo, [&](std::size_t i) { return r_weight[i] <= -0.5 * eps_lo; });
    if (!(rho_hi > 0.0) || !(rho_lo > 0.0))
        throw error(errc::construction_failure, "bump support degenerate");

    auto bump = [&](const std::vector<double>& dist, double rho) {
        ScalarField b(dom);
        for (std::size_t i = 0; i < b.size(); ++i)
            b[i] = dist[i] < rho
                       ? 0.5 * (1.0 + std::cos(std::numbers::pi * dist[i] / rho))
                       : 0.0;
        return b;
    };
    ScalarField pos = bump(d_hi, rho_hi);
    ScalarField neg = bump(d_lo, rho_lo);
    const double scale = integrate(pos) / integrate(neg);
    ScalarField w0 = pos;
    axpy(-scale, neg, w0);
    const double m = field_max(w0);
    if (!(m > 0.0)) throw error(errc::construction_failure, "bump direction has no positive part");
    w0 *= 1.0 / m;
    return w0;
}

// Smallest power-of-two scale t with J(t w0) < -1. Divergence of the
// evaluation means the exponential left double range before the level test
// could certify anything; that counts as not found.
inline double find_descent_scale(const ScalarField& r_weight, const ScalarField& w0,
                                 double t_cap = 1e6) {
    double t = 1.0;
    while (t <= t_cap) {
        double j;
        try {
            j = shifted_energy(r_weight, t * w0);
        } catch (const error& err) {
            if (err.code() != errc::diverged) throw;
            throw error(errc::not_found, "descent scale search left the representable range");
        }
        if (j < -1.0) return t;
        t *= 2.0;
    }
    throw error(errc::not_found, "no scale with J(t w0) < -1 below the cap");
}

namespace detail {

// Re-space a run of path nodes to equal H1 arc length, endpoints fixed.
// Linear interpolation along the existing polyline.
inline std::vector<ScalarField> respace(const std::vector<ScalarField>& seg) {
    const std::size_t m = seg.size();
    if (m <= 2) return seg;
    std::vector<double> cum(m, 0.0);
    for (std::size_t i = 1; i < m; ++i) {
        ScalarField d = seg[i] - seg[i - 1];
        cum[i] = cum[i - 1] + h1_norm(d);
    }
    const double total = cum[m - 1];
    if (!(total > 0.0)) return seg;
    std::vector<ScalarField> out;
    out.reserve(m);
    out.push_back(seg.front());
    std::size_t cell = 0;
    for (std::size_t j = 1; j + 1 < m; ++j) {
        const double target = total * static_cast<double>(j) / static_cast<double>(m - 1);
        while (cell + 2 < m && cum[cell + 1] < target) ++cell;
        const double len = cum[cell + 1] - cum[cell];
        const double frac = len > 0.0 ? (target - cum[cell]) / len : 0.0;
        ScalarField p = seg[cell];
        p *= 1.0 - frac;
        axpy(frac, seg[cell + 1], p);
        out.push_back(std::move(p));
    }
    out.push_back(seg.back());
    return out;
}

// Maximum of J along the straight segment (1-theta) a + theta b, golden
// section on theta. Divergent evaluations count as bottomless (the segment
// end hangs into the exponential well); J along a segment near the ridge is
// unimodal enough that a local maximum is all the relaxation needs.
struct SegmentMax {
    double theta = 0.0;
    double value = -std::numeric_limits<double>::infinity();
};

inline SegmentMax segment_max(const ScalarField& r_weight, const ScalarField& a,
                              const ScalarField& b) {
    auto eval = [&](double th) {
        ScalarField p = a;
        p *= 1.0 - th;
        axpy(th, b, p);
        try {
            return shifted_energy(r_weight, p);
        } catch (const error& err) {
            if (err.code() != errc::diverged) throw;
            return -std::numeric_limits<double>::infinity();
        }
    };
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 0.0, hi = 1.0;
    double t1 = hi - inv_phi * (hi - lo);
    double t2 = lo + inv_phi * (hi - lo);
    double f1 = eval(t1);
    double f2 = eval(t2);
    for (int it = 0; it < 30; ++it) {
        if (f1 < f2) {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + inv_phi * (hi - lo);
            f2 = eval(t2);
        } else {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - inv_phi * (hi - lo);
            f1 = eval(t1);
        }
    }
    SegmentMax out;
    out.theta = f1 > f2 ? t1 : t2;
    out.value = std::max(f1, f2);
    return out;
}

} // namespace detail

inline MountainPassResult mountain_pass_solve(const ScalarField& r_weight,
                                              const ScalarField& w0, double t0,
                                              const MountainPassOptions& opts = {}) {
    const auto& dom = r_weight.domain();
    const std::size_t p_count = opts.nodes;
    if (p_count < 9 || p_count % 2 == 0)
        throw error(errc::invalid_argument, "path needs an odd node count >= 9");
    if (!(t0 > 0.0)) throw error(errc::invalid_argument, "endpoint scale must be positive");
    {
        const double j_end = shifted_energy(r_weight, t0 * w0);
        if (!(j_end < -1.0))
            throw error(errc::invalid_argument, "endpoint does not sit below the J = -1 level");
    }

    std::vector<ScalarField> path;
    std::vector<double> j_path(p_count);
    path.reserve(p_count);
    for (std::size_t i = 0; i < p_count; ++i) {
        const double t = t0 * static_cast<double>(i) / static_cast<double>(p_count - 1);
        path.push_back(t * w0);
        j_path[i] = shifted_energy(r_weight, path[i]);
    }

    auto peak_of = [&](const std::vector<double>& js) {
        std::size_t p = 0;
        for (std::size_t i = 1; i < js.size(); ++i)
            if (js[i] > js[p]) p = i;
        return p;
    };

    MountainPassResult out;
    out.t0 = t0;
    double s_prev = 1.0;
    std::size_t sweep = 0;
    std::size_t peak = peak_of(j_path);

    bool relaxed = false;
    for (; sweep < opts.max_sweeps; ++sweep) {
        peak = peak_of(j_path);

        // Locate the peak on the polyline itself, not just at the nodes: the
        // level sup_t J(gamma(t)) lives on the whole path, and once nodes
        // straddle the ridge the crossing hides inside a segment (the
        // node-wise maximum then under-reports the level and can even sit at
        // a pinned endpoint). Park the nearest interior node on the crest.
        {
            detail::SegmentMax left, right;
            if (peak > 0)
                left = detail::segment_max(r_weight, path[peak - 1], path[peak]);
            if (peak + 1 < p_count)
                right = detail::segment_max(r_weight, path[peak], path[peak + 1]);
            if (left.value > j_path[peak] || right.value > j_path[peak]) {
                const bool take_left = left.value >= right.value;
                const detail::SegmentMax& sm = take_left ? left : right;
                const std::size_t anchor = take_left ? peak - 1 : peak;
                ScalarField crest = path[anchor];
                crest *= 1.0 - sm.theta;
                axpy(sm.theta, path[anchor + 1], crest);
                std::size_t mover = peak;
                if (peak == 0)
                    mover = 1;
                else if (peak + 1 == p_count)
                    mover = p_count - 2;
                path[mover] = std::move(crest);
                j_path[mover] = sm.value;
                peak = mover;
            }
        }
        if (peak == 0 || peak + 1 == p_count)
            throw error(errc::degenerate_path, "path peak reached an endpoint");

        ScalarField g = shifted_energy_gradient(r_weight, path[peak]);
        ScalarField d = precondition_gradient(g);
        const double gd_full = l2_inner(g, d);       // = |d|_H1^2, exactly
        const double gnorm = std::sqrt(std::max(gd_full, 0.0));
        out.trace.push_back({sweep, peak, j_path[peak], gnorm, j_path[peak]});
        if (gnorm < opts.relax_tol) {
            relaxed = true;
            break;
        }

        // Drop the tangential component of the descent direction: along the
        // path it is pure reparametrization (the re-spread undoes it), and
        // unprojected it walks the peak down the near side of the ridge into
        // the basin of the pinned start point. H1 projection keeps the
        // identity l2_inner(g, d) = |d|_H1^2 for the remainder.
        {
            ScalarField tau = path[peak + 1] - path[peak - 1];
            const double tn2 = h1_inner(tau, tau);
            if (tn2 > 0.0) axpy(-(h1_inner(d, tau) / tn2), tau, d);
        }
        const double gd = l2_inner(g, d);
        const double dn = std::sqrt(std::max(gd, 0.0));
        if (!(dn > 0.0)) break; // gradient purely tangential: stuck

        // Armijo backtracking, trust-limited to half the local inter-node
        // spacing: sufficient decrease alone would accept a step that dives
        // arbitrarily deep into the exponential well, and once one node
        // out-runs its neighbours the re-spread threads the whole path
        // through that hole and the discrete maximum loses the ridge.
        const double span = 0.5 * (h1_norm(path[peak] - path[peak - 1]) +
                                   h1_norm(path[peak + 1] - path[peak]));
        double s = std::min(2.0 * s_prev, 4.0);
        if (span > 0.0) s = std::min(s, 0.5 * span / dn);
        bool accepted = false;
        ScalarField trial(dom);
        double j_trial = 0.0;
        while (s > 1e-14) {
            trial = path[peak];
            axpy(-s, d, trial);
            bool ok = true;
            try {
                j_trial = shifted_energy(r_weight, trial);
            } catch (const error& err) {
                if (err.code() != errc::diverged) throw;
                ok = false;
            }
            if (ok && j_trial <= j_path[peak] - 1e-4 * s * gd) {
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) break; // numerically stuck on the ridge
        s_prev = s;
        const double old_max = j_path[peak];
        path[peak] = trial;
        j_path[peak] = j_trial;

        // re-spread nodes along both half-paths, but never let the spread
        // lift the path maximum back up
        std::vector<ScalarField> candidate;
        candidate.reserve(p_count);
        {
            std::vector<ScalarField> left(path.begin(), path.begin() + peak + 1);
            std::vector<ScalarField> right(path.begin() + peak, path.end());
            auto new_left = detail::respace(left);
            auto new_right = detail::respace(right);
            candidate.insert(candidate.end(), new_left.begin(), new_left.end());
            candidate.insert(candidate.end(), new_right.begin() + 1, new_right.end());
        }
        std::vector<double> j_cand(p_count);
        bool cand_ok = true;
        double cand_max = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < p_count && cand_ok; ++i) {
            try {
                j_cand[i] = shifted_energy(r_weight, candidate[i]);
            } catch (const error& err) {
                if (err.code() != errc::diverged) throw;
                cand_ok = false;
            }
            if (cand_ok) cand_max = std::max(cand_max, j_cand[i]);
        }
        if (cand_ok && cand_max <= old_max + 1e-12) {
            path = std::move(candidate);
            j_path = std::move(j_cand);
        }
        out.trace.back().j_node_max = j_path[peak_of(j_path)];
    }
    out.sweeps = sweep;
    peak = peak_of(j_path);

    // polish the crossing point: Newton on grad J = 0 (a = b = R); the
    // relaxation is only the globalization phase, so success means the
    // polished point is a genuine critical point
    NewtonResult polished =
        newton_general(dom, r_weight, r_weight, path[peak], opts.newton);
    out.u = std::move(polished.u);
    out.level = shifted_energy(r_weight, out.u);
    out.converged = relaxed && polished.converged;
    if (out.level < -1e-8)
        throw error(errc::degenerate_path, "pass level fell below zero");
    path[peak] = out.u;
    j_path[peak] = out.level;
    out.path = std::move(path);
    out.j_path = std::move(j_path);
    out.peak_index = peak;
    return out;
}

// End-to-end second solution: shift around u1, build the crossing direction,
// find the far endpoint, run the pass, lift back, polish on the original
// equation, and certify distinctness.
struct SecondSolutionResult {
    SolutionRecord record;
    MountainPassResult pass;
};

inline SecondSolutionResult second_solution(const ProblemSpec& spec, const ScalarField& u1,
                                            const MountainPassOptions& opts = {}) {
    ShiftedWeight shifted = shifted_weight(spec, u1);
    const ScalarField w0 = bump_direction(shifted.weight, opts.eps_factor);
    const double t0 = find_descent_scale(shifted.weight, w0, opts.t_cap);
    MountainPassResult pass = mountain_pass_solve(shifted.weight, w0, t0, opts);

    ScalarField u2 = u1 + pass.u;
    SolutionRecord rec = newton_polish(spec, u2, opts.newton);
    rec.method = "mountain-pass";
    rec.iterations = pass.sweeps;

    const double separation = linf(rec.u - u1);
    if (separation <= opts.distinct_tol)
        throw error(errc::collapsed_to_first,
                    "second solution landed on the first (separation " +
                        std::to_string(separation) + ")");
    return {std::move(rec), std::move(pass)};
}

} // namespace kw
