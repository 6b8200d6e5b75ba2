#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace kw {

struct IndefiniteSolveResult {
    std::size_t iterations = 0;
    double rel_residual = 0.0;
    bool converged = true;
};

// A closed 2-dimensional computational domain: degrees of freedom carry
// quadrature weights summing to the total area, and the domain knows how to
// apply its Laplace operator and invert the standard elliptic problems on it.
//
// Sign conventions, used everywhere downstream:
//   laplacian(u)            computes  Δu   (negative semi-definite)
//   poisson(f)              solves   -Δw = f          with mean(w) = 0
//   helmholtz(lam, f)       solves  (-Δ + lam) w = f  for constant lam > 0
//   helmholtz_var(lam, f)   solves  (-Δ + lam(x)) w = f, lam(x) > 0 pointwise
//
// Implementations are immutable after construction; all methods are const
// and safe to call repeatedly. Scratch buffers are allocated per call.
class Domain {
public:
    virtual ~Domain() = default;

    virtual std::size_t size() const = 0;
    virtual double area() const = 0;

    // Quadrature weight per degree of freedom; sums to area().
    virtual std::span<const double> weights() const = 0;

    virtual void laplacian(std::span<const double> u, std::span<double> out) const = 0;

    // Requires |mean(f)| small relative to |f| (compatibility); the result is
    // exactly mean-free.
    virtual void poisson(std::span<const double> f, std::span<double> w) const = 0;

    virtual void helmholtz(double lam, std::span<const double> f,
                           std::span<double> w) const = 0;

    // Returns the iteration count of the inner solver (0 for direct methods).
    virtual std::size_t helmholtz_var(std::span<const double> lam,
                                      std::span<const double> f,
                                      std::span<double> w,
                                      double tol, std::size_t max_iter) const = 0;

    // Solves (-Δ + diag(d)) x = g where d may take either sign (linearized
    // operators around non-minimizing states). Symmetric Krylov method; a
    // non-converged result is reported, not thrown, since an inexact step
    // may still serve as a descent direction.
    virtual IndefiniteSolveResult indefinite_solve(std::span<const double> d,
                                                   std::span<const double> g,
                                                   std::span<double> x,
                                                   double tol,
                                                   std::size_t max_iter) const = 0;

    virtual std::array<double, 3> position(std::size_t i) const = 0;

    // Distance field from one node, suitable for building radial bumps
    // (min-image metric on flat domains, graph geodesics on meshes).
    virtual std::vector<double> distance_from(std::size_t i) const = 0;

    // Largest radius at which a radial bump still fits comfortably.
    virtual double bump_radius_cap() const = 0;

    // Natural extent of the first coordinate, used as the period of analytic
    // field profiles. On a periodic grid this is the side length (the grid
    // samples [0, L), so max - min would fall one spacing short).
    virtual double coordinate_span() const = 0;

    virtual std::string describe() const = 0;
};

using DomainPtr = std::shared_ptr<const Domain>;

} // namespace kw
