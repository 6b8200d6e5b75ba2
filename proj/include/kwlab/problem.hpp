#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "kwlab/domain.hpp"
#include "kwlab/errors.hpp"
#include "kwlab/field.hpp"

namespace kw {

// One instance of the curvature problem
//
//     -laplacian(u) + alpha = K e^{2u},   alpha < 0,
//
// on a closed domain: the domain, the prescribed weight K, and the constant
// alpha. Immutable once built; alpha < 0 is enforced at construction.
struct ProblemSpec {
    DomainPtr domain;
    ScalarField k;
    double alpha = -1.0;

    ProblemSpec(DomainPtr dom, ScalarField k_field, double a)
        : domain(std::move(dom)), k(std::move(k_field)), alpha(a) {
        if (k.domain().get() != domain.get())
            throw error(errc::invalid_argument, "K lives on a different domain");
        if (!(alpha < 0.0))
            throw error(errc::invalid_argument, "alpha must be negative");
        k.check_finite();
    }
};

// Sanity summary of an instance. admissible_for_two_solutions reflects the
// hypotheses under which a second solution is expected: K attains positive
// values somewhere but has negative mean.
struct ValidationReport {
    double k_min = 0.0;
    double k_max = 0.0;
    double k_mean = 0.0;
    bool sign_changing = false;
    bool admissible_for_two_solutions = false;
};

// Works on any weight/alpha pair, including ones ProblemSpec would reject;
// inadmissibility is a finding, not a failure.
inline ValidationReport validate_raw(const ScalarField& k, double alpha) {
    ValidationReport r;
    r.k_min = field_min(k);
    r.k_max = field_max(k);
    r.k_mean = mean(k);
    r.sign_changing = r.k_min < 0.0 && r.k_max > 0.0;
    r.admissible_for_two_solutions = r.k_max > 0.0 && r.k_mean < 0.0 && alpha < 0.0;
    return r;
}

inline ValidationReport validate_spec(const ProblemSpec& spec) {
    return validate_raw(spec.k, spec.alpha);
}

// Pointwise equation residual -laplacian(u) + alpha - K e^{2u} and the two
// scalar diagnostics every solver reports.
inline ScalarField residual_field(const ProblemSpec& spec, const ScalarField& u) {
    ScalarField r = laplacian(u);
    const ScalarField e = exp2u(u);
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = -r[i] + spec.alpha - spec.k[i] * e[i];
    return r;
}

inline double residual_linf(const ProblemSpec& spec, const ScalarField& u) {
    return linf(residual_field(spec, u));
}

// |∫ K e^{2u} - alpha |M|| / |M|: how far u is from the necessary integral
// balance. For any u this is bounded by the residual sup norm because the
// Laplacian integrates to zero.
inline double identity_gap(const ProblemSpec& spec, const ScalarField& u) {
    const ScalarField e = exp2u(u);
    const double lhs = l2_inner(spec.k, e);
    return std::abs(lhs - spec.alpha * spec.domain->area()) / spec.domain->area();
}

// ---- curvature candidate generators ----------------------------------------

inline ScalarField constant_field(const DomainPtr& dom, double value) {
    return ScalarField(dom, value);
}

// amp * cos(2 pi x / Lx) + offset, where x is the first coordinate and Lx its
// extent. On the torus the grid mean equals offset exactly; on a mesh this is
// simply a smooth sign-structured sample with no mean guarantee.
inline ScalarField cosine_field(const DomainPtr& dom, double amplitude, double offset) {
    double xmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dom->size(); ++i)
        xmin = std::min(xmin, dom->position(i)[0]);
    const double span = dom->coordinate_span();
    ScalarField f(dom);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = dom->position(i)[0];
        f[i] = amplitude * std::cos(2.0 * std::numbers::pi * (x - xmin) / span) + offset;
    }
    return f;
}

// Two opposite Gaussian bumps (positive at node hi, negative at node lo,
// radial in the domain's own metric), shifted so the weighted mean is
// exactly the requested value.
inline ScalarField two_bumps_field(const DomainPtr& dom, double amplitude, double sigma,
                                   double target_mean) {
    if (!(sigma > 0.0)) throw error(errc::invalid_argument, "two-bumps: sigma must be positive");
    // deterministic centers: positive bump at the node with the largest
    // first coordinate, negative bump at the node farthest from it in the
    // domain's own metric (coordinate extremes can be neighbors on a torus)
    std::size_t hi = 0;
    for (std::size_t i = 1; i < dom->size(); ++i)
        if (dom->position(i)[0] > dom->position(hi)[0]) hi = i;
    const auto dhi = dom->distance_from(hi);
    std::size_t lo = 0;
    for (std::size_t i = 1; i < dom->size(); ++i)
        if (dhi[i] > dhi[lo]) lo = i;
    const auto dlo = dom->distance_from(lo);
    ScalarField f(dom);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double a = dhi[i] / sigma, b = dlo[i] / sigma;
        f[i] = amplitude * (std::exp(-0.5 * a * a) - std::exp(-0.5 * b * b));
    }
    const double m = mean(f);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += target_mean - m;
    return f;
}

// Reverse-engineer the weight K for which a chosen u* solves the equation at
// the given alpha: K = (-laplacian(u*) + alpha) e^{-2u*}. Exact at the
// discrete level, so solvers can be measured against a known answer.
inline ScalarField manufactured_weight(const ScalarField& u_star, double alpha) {
    ScalarField k = laplacian(u_star);
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double num = -k[i] + alpha;
        k[i] = num * std::exp(-2.0 * u_star[i]);
    }
    k.check_finite();
    return k;
}

} // namespace kw
