#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <vector>

#include "kwlab/domain.hpp"
#include "kwlab/errors.hpp"
#include "kwlab/linsolve.hpp"

namespace kw {

// Uniform N x N grid on the flat square torus of side L. Two Laplacians:
//   spectral : exact trigonometric differentiation (Fourier symbol -|k|^2)
//   fd       : 5-point stencil (symbol -(4/h^2) sin^2 form), second order
// Poisson and constant-shift Helmholtz problems are diagonal in Fourier
// space for both backends, so those solves are direct and exact for the
// chosen discrete operator. Variable-shift Helmholtz uses Jacobi-PCG.
//
// Node layout is row-major: linear index i = iy*N + ix, position
// (ix*h, iy*h) with h = L/N. Quadrature weight h^2 per node.
class TorusGrid final : public Domain {
public:
    enum class Backend { spectral, fd };

    TorusGrid(std::size_t n, double length, Backend backend)
        : n_(n), length_(length), backend_(backend) {
        if (n_ < 4 || n_ % 2 != 0)
            throw error(errc::invalid_argument, "torus resolution must be even and >= 4");
        if (!(length_ > 0.0))
            throw error(errc::invalid_argument, "torus side length must be positive");
        h_ = length_ / static_cast<double>(n_);
        weights_.assign(n_ * n_, h_ * h_);
        build_symbol();

        std::vector<double> re(n_ * n_);
        std::vector<std::complex<double>> cp(n_ * (n_ / 2 + 1));
        const int ni = static_cast<int>(n_);
        plan_r2c_ = fftw_plan_dft_r2c_2d(ni, ni, re.data(),
                                         reinterpret_cast<fftw_complex*>(cp.data()),
                                         FFTW_ESTIMATE | FFTW_UNALIGNED);
        plan_c2r_ = fftw_plan_dft_c2r_2d(ni, ni,
                                         reinterpret_cast<fftw_complex*>(cp.data()),
                                         re.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plan_r2c_ || !plan_c2r_)
            throw error(errc::construction_failure, "fftw plan creation failed");
    }

    ~TorusGrid() override {
        fftw_destroy_plan(plan_r2c_);
        fftw_destroy_plan(plan_c2r_);
    }

    TorusGrid(const TorusGrid&) = delete;
    TorusGrid& operator=(const TorusGrid&) = delete;

    std::size_t size() const override { return n_ * n_; }
    double area() const override { return length_ * length_; }
    std::span<const double> weights() const override { return weights_; }

    std::size_t resolution() const { return n_; }
    double side() const { return length_; }
    double coordinate_span() const override { return length_; }
    double spacing() const { return h_; }
    Backend backend() const { return backend_; }

    void laplacian(std::span<const double> u, std::span<double> out) const override {
        if (backend_ == Backend::fd) {
            stencil(u, out);
            return;
        }
        std::vector<std::complex<double>> hat(spec_size());
        forward(u, hat);
        for (std::size_t k = 0; k < hat.size(); ++k) hat[k] *= -symbol_[k];
        inverse(hat, out);
    }

    void poisson(std::span<const double> f, std::span<double> w) const override {
        const double total = dot(f, weights_);
        double fmax = 0.0;
        for (double x : f) fmax = std::max(fmax, std::abs(x));
        if (std::abs(total) > 1e-10 * (1.0 + fmax) * area())
            throw error(errc::not_solvable, "poisson: source has nonzero mean");
        std::vector<std::complex<double>> hat(spec_size());
        forward(f, hat);
        hat[0] = 0.0; // mean-free result
        for (std::size_t k = 1; k < hat.size(); ++k) hat[k] /= symbol_[k];
        inverse(hat, w);
    }

    void helmholtz(double lam, std::span<const double> f,
                   std::span<double> w) const override {
        if (!(lam > 0.0))
            throw error(errc::invalid_argument, "helmholtz shift must be positive");
        std::vector<std::complex<double>> hat(spec_size());
        forward(f, hat);
        for (std::size_t k = 0; k < hat.size(); ++k) hat[k] /= (symbol_[k] + lam);
        inverse(hat, w);
    }

    std::size_t helmholtz_var(std::span<const double> lam, std::span<const double> f,
                              std::span<double> w, double tol,
                              std::size_t max_iter) const override {
        double lam_min = lam[0], lam_max = lam[0], lam_sum = 0.0;
        for (double l : lam) {
            if (!(l > 0.0))
                throw error(errc::invalid_argument, "helmholtz shift must be positive");
            lam_min = std::min(lam_min, l);
            lam_max = std::max(lam_max, l);
            lam_sum += l;
        }
        auto apply = [&](std::span<const double> in, std::span<double> out) {
            laplacian(in, out);
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = -out[i] + lam[i] * in[i];
        };
        for (auto& wi : w) wi = 0.0;

        LinSolveResult r;
        if (lam_max / lam_min <= 1e3) {
            // near-constant shift: one Fourier solve is an excellent SPD
            // preconditioner, iteration counts stay O(10)
            const double c = lam_sum / static_cast<double>(lam.size());
            auto precond = [&](std::span<const double> in, std::span<double> out) {
                helmholtz(c, in, out);
            };
            r = pcg(apply, precond, f, w, tol, max_iter, PcgStop::preconditioned);
        } else {
            // wild shift range: Jacobi scaling; the very stiff rows decouple
            // and the stopping metric weighs residuals by local scale
            const double diag_est = backend_ == Backend::fd ? 4.0 / (h_ * h_) : mean_symbol_;
            auto precond = [&](std::span<const double> in, std::span<double> out) {
                for (std::size_t i = 0; i < out.size(); ++i)
                    out[i] = in[i] / (diag_est + lam[i]);
            };
            r = pcg(apply, precond, f, w, tol, max_iter, PcgStop::preconditioned);
        }
        if (!r.converged)
            throw error(errc::solver_failure, "helmholtz_var: cg stalled");
        return r.iterations;
    }

    IndefiniteSolveResult indefinite_solve(std::span<const double> d,
                                           std::span<const double> g, std::span<double> x,
                                           double tol, std::size_t max_iter) const override {
        double dmin = d[0];
        for (double v : d) dmin = std::min(dmin, v);
        const double c = 1.0 + std::max(0.0, -dmin);
        auto apply = [&](std::span<const double> in, std::span<double> out) {
            laplacian(in, out);
            for (std::size_t i = 0; i < out.size(); ++i)
                out[i] = -out[i] + d[i] * in[i];
        };
        auto precond = [&](std::span<const double> in, std::span<double> out) {
            helmholtz(c, in, out);
        };
        LinSolveResult r = minres(apply, precond, g, x, tol, max_iter);
        return {r.iterations, r.rel_residual, r.converged};
    }

    std::array<double, 3> position(std::size_t i) const override {
        const std::size_t ix = i % n_, iy = i / n_;
        return {static_cast<double>(ix) * h_, static_cast<double>(iy) * h_, 0.0};
    }

    std::vector<double> distance_from(std::size_t i) const override {
        std::vector<double> d(size());
        const std::size_t ix = i % n_, iy = i / n_;
        for (std::size_t j = 0; j < size(); ++j) {
            const std::size_t jx = j % n_, jy = j / n_;
            const double dx = min_image(static_cast<double>(jx) - static_cast<double>(ix));
            const double dy = min_image(static_cast<double>(jy) - static_cast<double>(iy));
            d[j] = std::hypot(dx * h_, dy * h_);
        }
        return d;
    }

    double bump_radius_cap() const override { return 0.45 * length_; }

    std::string describe() const override {
        std::ostringstream os;
        os << "torus N=" << n_ << " L=" << length_
           << " backend=" << (backend_ == Backend::spectral ? "spectral" : "fd");
        return os.str();
    }

private:
    std::size_t spec_size() const { return n_ * (n_ / 2 + 1); }

    double min_image(double dk) const {
        const double nn = static_cast<double>(n_);
        dk = std::fmod(dk, nn);
        if (dk > nn / 2) dk -= nn;
        if (dk < -nn / 2) dk += nn;
        return dk;
    }

    // symbol_[k] holds the eigenvalue of -Laplacian (>= 0) for the r2c bin.
    void build_symbol() {
        const std::size_t half = n_ / 2 + 1;
        symbol_.resize(n_ * half);
        const double two_pi_over_l = 2.0 * std::numbers::pi / length_;
        double acc = 0.0;
        for (std::size_t ky = 0; ky < n_; ++ky) {
            const double kyw = ky <= n_ / 2 ? static_cast<double>(ky)
                                            : static_cast<double>(ky) - static_cast<double>(n_);
            for (std::size_t kx = 0; kx < half; ++kx) {
                double mu;
                if (backend_ == Backend::spectral) {
                    const double a = two_pi_over_l * kyw;
                    const double b = two_pi_over_l * static_cast<double>(kx);
                    mu = a * a + b * b;
                } else {
                    const double sy = std::sin(std::numbers::pi * static_cast<double>(ky) /
                                               static_cast<double>(n_));
                    const double sx = std::sin(std::numbers::pi * static_cast<double>(kx) /
                                               static_cast<double>(n_));
                    mu = 4.0 / (h_ * h_) * (sy * sy + sx * sx);
                }
                symbol_[ky * half + kx] = mu;
                acc += mu;
            }
        }
        mean_symbol_ = acc / static_cast<double>(symbol_.size());
    }

    void forward(std::span<const double> u, std::vector<std::complex<double>>& hat) const {
        std::vector<double> in(u.begin(), u.end());
        fftw_execute_dft_r2c(plan_r2c_, in.data(),
                             reinterpret_cast<fftw_complex*>(hat.data()));
    }

    void inverse(std::vector<std::complex<double>>& hat, std::span<double> out) const {
        std::vector<double> re(n_ * n_);
        fftw_execute_dft_c2r(plan_c2r_, reinterpret_cast<fftw_complex*>(hat.data()),
                             re.data());
        const double scale = 1.0 / static_cast<double>(n_ * n_);
        for (std::size_t i = 0; i < re.size(); ++i) out[i] = re[i] * scale;
    }

    void stencil(std::span<const double> u, std::span<double> out) const {
        const double inv_h2 = 1.0 / (h_ * h_);
        for (std::size_t iy = 0; iy < n_; ++iy) {
            const std::size_t up = (iy + 1) % n_ * n_;
            const std::size_t dn = (iy + n_ - 1) % n_ * n_;
            const std::size_t row = iy * n_;
            for (std::size_t ix = 0; ix < n_; ++ix) {
                const std::size_t xr = (ix + 1) % n_;
                const std::size_t xl = (ix + n_ - 1) % n_;
                out[row + ix] = (u[row + xr] + u[row + xl] + u[up + ix] + u[dn + ix] -
                                 4.0 * u[row + ix]) * inv_h2;
            }
        }
    }

    std::size_t n_;
    double length_;
    double h_ = 0.0;
    Backend backend_;
    std::vector<double> weights_;
    std::vector<double> symbol_;
    double mean_symbol_ = 0.0;
    fftw_plan plan_r2c_ = nullptr;
    fftw_plan plan_c2r_ = nullptr;
};

} // namespace kw
