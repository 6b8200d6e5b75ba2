// Acceptance gate: one line per criterion, nonzero exit when any fails.
// Unlike the unit suite this runs whole pipelines at working resolution and
// pins the quantitative targets next to the measurements that gate them.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kwlab/kwlab.hpp"

using namespace kw;

namespace {

std::shared_ptr<TorusGrid> torus(std::size_t n,
                                 TorusGrid::Backend b = TorusGrid::Backend::spectral) {
    return std::make_shared<TorusGrid>(n, 1.0, b);
}

int g_failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("criterion %d: %s  [%s]\n", id, ok ? "pass" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

template <typename Fn>
void criterion(int id, Fn&& body) {
    try {
        std::string detail;
        const bool ok = body(detail);
        report(id, ok, detail);
    } catch (const std::exception& err) {
        report(id, false, std::string("exception: ") + err.what());
    }
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Shared reference instance (the config the CLI walkthrough uses): both
// solutions plus the path data, consumed by criteria 4 and 5.
struct ReferenceRun {
    DomainPtr dom;
    ScalarField k;
    double alpha = 0.0;
    SweepEntry first;
    SecondSolutionResult second;
    std::string error;

    ReferenceRun() {
        try {
            Config cfg = Config::parse_file(std::string(KWLAB_CONFIG_DIR) + "/reference.cfg",
                                            known_config_keys());
            dom = build_domain(cfg);
            k = build_family_field(cfg, dom, "weight");
            alpha = cfg.require_double("problem.alpha");
            first = first_solution(dom, k, alpha, ContinuationOptions{});
            if (!first.solvable || !first.record) {
                error = "reference instance reported unsolvable";
                return;
            }
            ProblemSpec spec(dom, k, alpha);
            second = second_solution(spec, first.record->u, MountainPassOptions{});
        } catch (const std::exception& err) {
            error = err.what();
        }
    }

    bool ready() const { return error.empty(); }
};

} // namespace

int main() {
    // 1. Manufactured recovery. The cosine target at amplitude 0.3 has
    //    lambda_min about -4.25, i.e. it is an unstable critical point, so no
    //    monotone scheme can reach it: the monotone route is checked against
    //    the stable amplitude-0.1 target and the 0.3 target is recovered by
    //    the crossing-point search, which is built for exactly that branch.
    //    The FD backend keeps the 0.3 amplitude: Newton started at the
    //    sampled target converges locally regardless of stability, and the
    //    gap to the continuum solution must shrink at order 2.
    criterion(1, [](std::string& detail) {
        auto dom = torus(64);
        const double alpha = -1.0;

        ScalarField us_stable = cosine_field(dom, 0.1, 0.0);
        ScalarField k_stable = manufactured_weight(us_stable, alpha);
        ContinuationOptions co;
        co.fill_lambda_min = false;
        SweepEntry mono = first_solution(dom, k_stable, alpha, co);
        const double err_mono =
            mono.solvable ? linf(mono.record->u - us_stable) : 1e300;
        bool ok = mono.solvable && mono.record->converged && err_mono < 1e-9;

        ScalarField us = cosine_field(dom, 0.3, 0.0);
        ScalarField k = manufactured_weight(us, alpha);
        ProblemSpec spec(dom, k, alpha);
        EigenResult star = principal_eigenpair(spec, us);
        ok = ok && star.converged && star.lambda < 0.0; // the 0.3 target really is unstable
        SweepEntry base = first_solution(dom, k, alpha, co);
        ok = ok && base.solvable && base.record->converged;
        double err_pass = 1e300;
        if (base.solvable) {
            SecondSolutionResult sec = second_solution(spec, base.record->u);
            err_pass = linf(sec.record.u - us);
            ok = ok && sec.record.converged && err_pass < 1e-9;
        }

        double errs[3] = {0, 0, 0};
        bool fd_ok = true;
        const double w = 2.0 * std::numbers::pi;
        int idx = 0;
        for (std::size_t n : {32, 64, 128}) {
            auto dfd = torus(n, TorusGrid::Backend::fd);
            ScalarField cosw = cosine_field(dfd, 1.0, 0.0);
            ScalarField target(dfd), weight(dfd);
            for (std::size_t i = 0; i < target.size(); ++i) {
                target[i] = 0.3 * cosw[i];
                weight[i] = (0.3 * w * w * cosw[i] + alpha) * std::exp(-2.0 * target[i]);
            }
            SolveOptions so;
            so.tol = 1e-11;
            NewtonResult nr =
                newton_general(dfd, constant_field(dfd, alpha), weight, target, so);
            fd_ok = fd_ok && nr.converged;
            errs[idx++] = linf(nr.u - target);
        }
        const double r0 = errs[0] / errs[1], r1 = errs[1] / errs[2];
        fd_ok = fd_ok && std::abs(r0 - 4.0) <= 0.3 && std::abs(r1 - 4.0) <= 0.3;
        ok = ok && fd_ok;

        detail = fmt("monotone(0.1) err=%.2e; crossing(0.3) err=%.2e lam*=%.3f; "
                     "fd errs %.2e/%.2e/%.2e ratios %.3f %.3f",
                     err_mono, err_pass, star.lambda, errs[0], errs[1], errs[2], r0, r1);
        return ok;
    });

    // 2. Constant exact solution: K = -2, alpha = -1, u = (1/2) ln(1/2),
    //    lambda_min = -2 alpha = 2.
    criterion(2, [](std::string& detail) {
        auto dom = torus(64);
        ScalarField k = constant_field(dom, -2.0);
        SweepEntry e = first_solution(dom, k, -1.0, ContinuationOptions{});
        if (!e.solvable || !e.record) {
            detail = "constant instance reported unsolvable";
            return false;
        }
        const double u_exact = 0.5 * std::log(0.5);
        const double du = linf(e.record->u - u_exact);
        const double lam = e.record->lambda_min.value_or(1e300);
        const bool ok = e.record->converged && du < 1e-10 &&
                        std::abs(lam - 2.0) < 1e-6 && e.record->gap < 1e-10;
        detail = fmt("|u - 0.5 ln 0.5| = %.2e, lambda_min = %.8f, identity gap = %.2e",
                     du, lam, e.record->gap);
        return ok;
    });

    // 3. Gradient consistency: central differences of both functionals match
    //    the L2 pairing with their gradients on 20 random field pairs.
    criterion(3, [](std::string& detail) {
        auto dom = torus(64);
        ScalarField r = cosine_field(dom, 0.5, -0.1);
        ProblemSpec spec(dom, r, -1.0);
        std::mt19937 rng(20240915);
        std::uniform_real_distribution<double> dist(-0.5, 0.5);
        const double h = 1e-5;
        double worst_f = 0.0, worst_j = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            ScalarField u(dom), phi(dom);
            for (std::size_t i = 0; i < u.size(); ++i) {
                u[i] = dist(rng);
                phi[i] = dist(rng);
            }
            ScalarField up = u, dn = u;
            axpy(h, phi, up);
            axpy(-h, phi, dn);
            const double fd_f = (energy(spec, up) - energy(spec, dn)) / (2.0 * h);
            const double pair_f = l2_inner(energy_gradient(spec, u), phi);
            worst_f = std::max(worst_f, std::abs(fd_f - pair_f) / std::abs(pair_f));
            const double fd_j = (shifted_energy(r, up) - shifted_energy(r, dn)) / (2.0 * h);
            const double pair_j = l2_inner(shifted_energy_gradient(r, u), phi);
            worst_j = std::max(worst_j, std::abs(fd_j - pair_j) / std::abs(pair_j));
        }
        detail = fmt("worst rel err: F %.2e, shifted J %.2e (20 pairs, h = 1e-5)",
                     worst_f, worst_j);
        return worst_f < 1e-6 && worst_j < 1e-6;
    });

    ReferenceRun ref;

    // 4. Two distinct solutions on the recorded reference instance.
    criterion(4, [&ref](std::string& detail) {
        if (!ref.ready()) {
            detail = ref.error;
            return false;
        }
        const SolutionRecord& u1 = *ref.first.record;
        const SolutionRecord& u2 = ref.second.record;
        ProblemSpec spec(ref.dom, ref.k, ref.alpha);
        EigenResult eig2 = principal_eigenpair(spec, u2.u);
        const double sep = linf(u2.u - u1.u);
        const double lam1 = u1.lambda_min.value_or(-1e300);
        bool ok = u1.converged && u2.converged;
        ok = ok && u1.residual < 1e-8 && u2.residual < 1e-8;
        ok = ok && u1.gap < 1e-6 && u2.gap < 1e-6;
        ok = ok && sep > 0.1;
        ok = ok && u1.energy_value < u2.energy_value;
        ok = ok && lam1 >= -1e-8;
        ok = ok && eig2.converged;
        detail = fmt("alpha=%g sep=%.3f F1=%.5f < F2=%.5f lam1=%.4f lam2=%.4f "
                     "res=%.1e/%.1e",
                     ref.alpha, sep, u1.energy_value, u2.energy_value, lam1, eig2.lambda,
                     u1.residual, u2.residual);
        return ok;
    });

    // 5. Structure of the accepted path: within each sweep the node-wise max
    //    never exceeds the crest the sweep started from, the level is
    //    nonnegative to round-off, the far endpoint sits well below zero, and
    //    the crossing point satisfies the constant-direction identity
    //    integral(R (1 - e^{2v})) = 0 to 1e-6 |M|.
    criterion(5, [&ref](std::string& detail) {
        if (!ref.ready()) {
            detail = ref.error;
            return false;
        }
        const MountainPassResult& pass = ref.second.pass;
        double worst_within = -1e300;
        for (const TraceRow& row : pass.trace)
            worst_within = std::max(worst_within, row.j_node_max - row.j_peak);
        bool ok = !pass.trace.empty() && worst_within <= 1e-12;
        ok = ok && pass.level >= -1e-8;
        ok = ok && pass.j_path.back() < -1.0;

        ProblemSpec spec(ref.dom, ref.k, ref.alpha);
        ShiftedWeight shifted = shifted_weight(spec, ref.first.record->u);
        ScalarField v = ref.second.record.u - ref.first.record->u;
        ScalarField one_minus = exp2u(v);
        for (std::size_t i = 0; i < one_minus.size(); ++i)
            one_minus[i] = 1.0 - one_minus[i];
        const double ps = std::abs(integrate(pointwise_mul(shifted.weight, one_minus)));
        ok = ok && ps < 1e-6 * ref.dom->area();
        detail = fmt("sweeps=%zu worst(node max - crest)=%.1e level=%.6f "
                     "J(t0 w0)=%.1f |int R(1-e^{2v})|=%.1e",
                     pass.sweeps, worst_within, pass.level, pass.j_path.back(), ps);
        return ok;
    });

    // 6. Nonpositive-weight dichotomy and the threshold for the sign-changing
    //    weight: every alpha solvable on the monotone route and agreeing with
    //    the convex minimizer; the threshold bracket narrows below 0.01 within
    //    the probe budget and the probe outcomes are monotone in alpha.
    criterion(6, [](std::string& detail) {
        auto dom = torus(64);
        ScalarField kneg = cosine_field(dom, -0.5, -0.5); // -(1 + cos)/2, touches 0
        ContinuationOptions co;
        co.fill_lambda_min = false;
        auto entries = alpha_sweep(dom, kneg, {-10.0, -5.0, -1.0, -0.1}, co);
        bool ok = entries.size() == 4;
        double worst_agree = 0.0;
        for (const SweepEntry& e : entries) {
            ok = ok && e.solvable && e.record && e.record->converged &&
                 e.strategy == "monotone";
            if (!e.record) continue;
            ProblemSpec spec(dom, kneg, e.alpha);
            SolutionRecord cv = convex_minimize(spec, ScalarField(dom, 0.0));
            worst_agree = std::max(worst_agree, linf(e.record->u - cv.u));
            ok = ok && cv.converged;
        }
        ok = ok && worst_agree < 1e-6;

        ScalarField kref = cosine_field(dom, 1.0, -0.2);
        ThresholdEstimate est =
            estimate_critical_alpha(dom, kref, -1.0, -0.05, 0.01, co, 20);
        ok = ok && (est.hi - est.lo) < 0.01 && est.probes <= 20;
        std::vector<std::pair<double, bool>> probes;
        for (const SweepEntry& e : est.transcript) probes.emplace_back(e.alpha, e.solvable);
        std::sort(probes.begin(), probes.end());
        bool seen_solvable = false, upset = true;
        for (const auto& [a, solvable] : probes) {
            if (solvable)
                seen_solvable = true;
            else if (seen_solvable)
                upset = false; // an unsolvable alpha above a solvable one
        }
        ok = ok && upset;
        detail = fmt("sweep solvable, |monotone - convex| = %.1e; alpha0 in "
                     "[%.6f, %.6f] width %.6f in %zu probes, outcomes monotone=%d",
                     worst_agree, est.lo, est.hi, est.hi - est.lo, est.probes,
                     upset ? 1 : 0);
        return ok;
    });

    // 7. Certificates carry their stated margins and the monotone iterates
    //    stay inside the bracket at every budget cutoff.
    criterion(7, [](std::string& detail) {
        auto dom = torus(64);
        ScalarField kneg = cosine_field(dom, -0.5, -0.5);
        ProblemSpec spec(dom, kneg, -1.0);
        ScalarField up = supersolution_nonpositive_k(spec);
        ScalarField lo = constant_subsolution(spec);

        const double m_up = supersolution_margin(spec, up);
        const double m_lo = subsolution_margin(spec, lo);
        const double a = std::abs(spec.alpha);
        bool ok = m_up >= 0.1 * a * (1.0 - 1e-9);                    // stated: 0.1 |alpha|
        ok = ok && m_lo >= (1.0 - std::exp(-2.0)) * a * (1.0 - 1e-9); // stated: (1-e^{-2})|alpha|

        double worst_sub = 1e300;
        const double c = lo[0];
        for (std::size_t i = 0; i < kneg.size(); ++i)
            worst_sub = std::min(worst_sub, kneg[i] * std::exp(2.0 * c) - spec.alpha);
        ok = ok && worst_sub > 0.0; // K e^{2c} - alpha > 0 at every node

        ContinuationOptions co;
        co.fill_lambda_min = false;
        SweepEntry prev = first_solution(dom, kneg, -1.0, co);
        ProblemSpec spec_hi(dom, kneg, -0.5);
        ScalarField cont =
            supersolution_from_continuation(spec_hi, prev.record->u, -1.0);
        const double m_cont = supersolution_margin(spec_hi, cont);
        ok = ok && m_cont >= 0.5 - 1e-6; // gains alpha - alpha_prev exactly

        double worst_low = 0.0, worst_high = 0.0;
        for (std::size_t budget : {1ul, 2ul, 3ul, 5ul, 8ul, 13ul, 21ul, 200ul}) {
            SolveOptions so;
            so.max_iter = budget;
            SolutionRecord rec = monotone_solve(spec, lo, up, so);
            worst_low = std::min(worst_low, field_min(rec.u - lo));
            worst_high = std::min(worst_high, field_min(up - rec.u));
        }
        ok = ok && worst_low >= -1e-12 && worst_high >= -1e-12;
        detail = fmt("margins: super %.4f, sub %.4f, continuation %.4f, "
                     "min(K e^{2c} - alpha) = %.4f; containment %.1e / %.1e",
                     m_up, m_lo, m_cont, worst_sub, worst_low, worst_high);
        return ok;
    });

    // 8. Mesh backend on the shipped genus-2 surface: chi = -2 by count, the
    //    constant instance lands within 1e-6, gradients consistent to 1e-4.
    criterion(8, [](std::string& detail) {
        auto mesh = TriangleMesh::load_off(std::string(KWLAB_DATA_DIR) + "/genus2.off");
        bool ok = mesh->euler_characteristic() == -2;
        DomainPtr dom = mesh;

        ScalarField k = constant_field(dom, -2.0);
        ContinuationOptions co;
        co.solve.tol = 1e-8;
        SweepEntry e = first_solution(dom, k, -1.0, co);
        if (!e.solvable || !e.record) {
            detail = "mesh constant instance reported unsolvable";
            return false;
        }
        const double du = linf(e.record->u - 0.5 * std::log(0.5));
        const double lam = e.record->lambda_min.value_or(1e300);
        ok = ok && e.record->converged && du < 1e-6 && std::abs(lam - 2.0) < 1e-6 &&
             e.record->gap < 1e-6;

        std::mt19937 rng(77);
        std::uniform_real_distribution<double> dist(-0.5, 0.5);
        ScalarField r(dom);
        for (std::size_t i = 0; i < r.size(); ++i)
            r[i] = std::sin(dom->position(i)[1]) - 0.1;
        ProblemSpec spec(dom, r, -1.0);
        const double h = 1e-5;
        double worst_f = 0.0, worst_j = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            ScalarField u(dom), phi(dom);
            for (std::size_t i = 0; i < u.size(); ++i) {
                u[i] = dist(rng);
                phi[i] = dist(rng);
            }
            ScalarField upf = u, dnf = u;
            axpy(h, phi, upf);
            axpy(-h, phi, dnf);
            const double fd_f = (energy(spec, upf) - energy(spec, dnf)) / (2.0 * h);
            const double pair_f = l2_inner(energy_gradient(spec, u), phi);
            worst_f = std::max(worst_f, std::abs(fd_f - pair_f) / std::abs(pair_f));
            const double fd_j = (shifted_energy(r, upf) - shifted_energy(r, dnf)) / (2.0 * h);
            const double pair_j = l2_inner(shifted_energy_gradient(r, u), phi);
            worst_j = std::max(worst_j, std::abs(fd_j - pair_j) / std::abs(pair_j));
        }
        ok = ok && worst_f < 1e-4 && worst_j < 1e-4;
        detail = fmt("chi=%ld |u - 0.5 ln 0.5|=%.2e lambda_min=%.6f gap=%.1e; "
                     "gradient rel err F %.1e, J %.1e",
                     mesh->euler_characteristic(), du, lam, e.record->gap, worst_f,
                     worst_j);
        return ok;
    });

    if (g_failures == 0) {
        std::printf("acceptance: all 8 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return 1;
}
