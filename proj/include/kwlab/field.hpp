#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "kwlab/domain.hpp"
#include "kwlab/errors.hpp"
#include "kwlab/reduce.hpp"

namespace kw {

// The cap on u before e^{2u} is declared out of range. exp(600) is near the
// top of double range; anything that pushes an iterate past this has left
// the regime where the model means anything.
inline constexpr double kExpArgCap = 300.0;

// A scalar function sampled on a domain's degrees of freedom. Value type:
// copies are independent. Construction validates finiteness so NaN/Inf never
// propagate silently through the solvers.
class ScalarField {
public:
    ScalarField() = default;

    ScalarField(DomainPtr dom, double fill = 0.0)
        : dom_(std::move(dom)), v_(dom_->size(), fill) {}

    ScalarField(DomainPtr dom, std::vector<double> values)
        : dom_(std::move(dom)), v_(std::move(values)) {
        if (v_.size() != dom_->size())
            throw error(errc::invalid_argument, "field size does not match domain");
        check_finite();
    }

    const DomainPtr& domain() const { return dom_; }
    std::size_t size() const { return v_.size(); }

    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }

    std::span<const double> values() const { return v_; }
    std::span<double> values() { return v_; }

    void check_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) throw error(errc::diverged, "field has non-finite entries");
    }

private:
    DomainPtr dom_;
    std::vector<double> v_;
};

inline void require_same_domain(const ScalarField& a, const ScalarField& b) {
    if (a.domain().get() != b.domain().get())
        throw error(errc::invalid_argument, "fields live on different domains");
}

// ---- pointwise algebra ----------------------------------------------------

inline ScalarField& operator+=(ScalarField& a, const ScalarField& b) {
    require_same_domain(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline ScalarField& operator-=(ScalarField& a, const ScalarField& b) {
    require_same_domain(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline ScalarField& operator*=(ScalarField& a, double s) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= s;
    return a;
}

inline ScalarField& operator+=(ScalarField& a, double s) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += s;
    return a;
}

inline ScalarField operator+(ScalarField a, const ScalarField& b) { a += b; return a; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { a -= b; return a; }
inline ScalarField operator*(double s, ScalarField a) { a *= s; return a; }
inline ScalarField operator+(ScalarField a, double s) { a += s; return a; }
inline ScalarField operator-(ScalarField a, double s) { a += -s; return a; }

inline void axpy(double s, const ScalarField& x, ScalarField& y) {
    require_same_domain(x, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

inline ScalarField pointwise_mul(const ScalarField& a, const ScalarField& b) {
    require_same_domain(a, b);
    ScalarField r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] *= b[i];
    return r;
}

// e^{2u}, with the range cap. Out-of-range iterates signal divergence rather
// than producing Inf that would poison every norm afterwards.
inline ScalarField exp2u(const ScalarField& u) {
    ScalarField r = u;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] > kExpArgCap) throw error(errc::diverged, "exp(2u) out of range");
        r[i] = std::exp(2.0 * r[i]);
    }
    return r;
}

// ---- reductions and norms -------------------------------------------------

inline double field_min(const ScalarField& f) {
    return *std::min_element(f.values().begin(), f.values().end());
}

inline double field_max(const ScalarField& f) {
    return *std::max_element(f.values().begin(), f.values().end());
}

// Lowest linear index attaining the max/min; deterministic tie-break.
inline std::size_t argmax(const ScalarField& f) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
        if (f[i] > f[best]) best = i;
    return best;
}

inline std::size_t argmin(const ScalarField& f) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
        if (f[i] < f[best]) best = i;
    return best;
}

inline double linf(const ScalarField& f) {
    double m = 0.0;
    for (double x : f.values()) m = std::max(m, std::abs(x));
    return m;
}

inline double integrate(const ScalarField& f) {
    return dot(f.values(), f.domain()->weights());
}

inline double mean(const ScalarField& f) {
    return integrate(f) / f.domain()->area();
}

inline double l2_inner(const ScalarField& a, const ScalarField& b) {
    require_same_domain(a, b);
    return weighted_dot(a.values(), b.values(), a.domain()->weights());
}

inline double l2_norm(const ScalarField& a) { return std::sqrt(l2_inner(a, a)); }

// ---- operator wrappers ----------------------------------------------------

inline ScalarField laplacian(const ScalarField& u) {
    ScalarField out(u.domain());
    u.domain()->laplacian(u.values(), out.values());
    return out;
}

inline ScalarField poisson(const ScalarField& f) {
    ScalarField w(f.domain());
    f.domain()->poisson(f.values(), w.values());
    return w;
}

inline ScalarField helmholtz(double lam, const ScalarField& f) {
    ScalarField w(f.domain());
    f.domain()->helmholtz(lam, f.values(), w.values());
    return w;
}

// Dirichlet energy via the operator: integral of |grad u|^2 computed as
// l2_inner(-laplacian(u), u). Summation by parts is exact for every backend,
// so the discrete energy gradient identities hold to round-off.
inline double dirichlet_energy(const ScalarField& u) {
    ScalarField mlap = laplacian(u);
    mlap *= -1.0;
    return l2_inner(mlap, u);
}

inline double h1_inner(const ScalarField& a, const ScalarField& b) {
    ScalarField mlap = laplacian(a);
    mlap *= -1.0;
    return l2_inner(a, b) + l2_inner(mlap, b);
}

inline double h1_norm(const ScalarField& a) {
    double q = h1_inner(a, a);
    return std::sqrt(std::max(q, 0.0));
}

// Smoothing preconditioner: one (-Delta + 1) solve. Turns L2 gradients into
// descent directions with mesh-independent step sizes.
inline ScalarField precondition_gradient(const ScalarField& g) {
    return helmholtz(1.0, g);
}

} // namespace kw
