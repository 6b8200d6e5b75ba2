#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "kwlab/field.hpp"
#include "kwlab/mesh.hpp"
#include "kwlab/torus.hpp"

namespace kwtest {

// Deterministic noise for test inputs; fixed seeds keep every run identical.
struct Rng {
    std::uint64_t s;
    explicit Rng(std::uint64_t seed = 0x1234abcd9876ull) : s(seed) {}
    double uniform() { // in [-1, 1)
        s ^= s >> 12;
        s ^= s << 25;
        s ^= s >> 27;
        return static_cast<double>((s * 0x2545f4914f6cdd1dull) >> 11) /
                   static_cast<double>(1ull << 52) - 1.0;
    }
};

// Compensated (Kahan) summation: the independent accuracy oracle the
// pairwise reduction is measured against.
inline double kahan_sum(const std::vector<double>& x) {
    double s = 0.0, c = 0.0;
    for (double v : x) {
        const double y = v - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

// Dense symmetric eigensolver (cyclic Jacobi), used as the spectral oracle
// on tiny instances. Returns eigenvalues ascending.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
    auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(at(p, q)) < 1e-18) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = at(i, p), aiq = at(i, q);
                    at(i, p) = c * aip - s * aiq;
                    at(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = at(p, i), aqi = at(q, i);
                    at(p, i) = c * api - s * aqi;
                    at(q, i) = s * api + c * aqi;
                }
            }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = at(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

// Dense LU solve with partial pivoting: oracle for Krylov solvers.
inline std::vector<double> lu_solve(std::vector<double> a, std::vector<double> b,
                                    std::size_t n) {
    std::vector<std::size_t> piv(n);
    for (std::size_t i = 0; i < n; ++i) piv[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a[i * n + k]) > std::abs(a[p * n + k])) p = i;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
            std::swap(b[k], b[p]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = a[i * n + k] / a[k * n + k];
            for (std::size_t j = k; j < n; ++j) a[i * n + j] -= m * a[k * n + j];
            b[i] -= m * b[k];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i * n + j] * b[j];
        b[i] = s / a[i * n + i];
    }
    return b;
}

inline std::shared_ptr<kw::TorusGrid> torus(std::size_t n, double length = 1.0,
                                            kw::TorusGrid::Backend b =
                                                kw::TorusGrid::Backend::spectral) {
    return std::make_shared<kw::TorusGrid>(n, length, b);
}

inline std::shared_ptr<kw::TorusGrid> torus_fd(std::size_t n, double length = 1.0) {
    return torus(n, length, kw::TorusGrid::Backend::fd);
}

// A smooth band-limited field: a few low harmonics with fixed coefficients.
inline kw::ScalarField smooth_field(const kw::DomainPtr& dom, std::uint64_t seed = 7) {
    Rng rng(seed);
    const double c1 = rng.uniform(), c2 = rng.uniform(), c3 = rng.uniform(),
                 c4 = rng.uniform();
    kw::ScalarField f(dom);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto p = dom->position(i);
        const double x = p[0], y = p[1], z = p[2];
        f[i] = c1 * std::cos(2.0 * std::numbers::pi * x) +
               c2 * std::sin(2.0 * std::numbers::pi * y) +
               c3 * std::cos(4.0 * std::numbers::pi * x) *
                   std::sin(2.0 * std::numbers::pi * y) +
               0.3 * c4 * (z - 0.5);
    }
    return f;
}

inline kw::ScalarField mean_free(kw::ScalarField f) {
    const double m = kw::mean(f);
    f += -m;
    return f;
}

inline const char* octahedron_off() {
    return "OFF\n"
           "6 8 12\n"
           "1 0 0\n-1 0 0\n0 1 0\n0 -1 0\n0 0 1\n0 0 -1\n"
           "3 0 2 4\n3 2 1 4\n3 1 3 4\n3 3 0 4\n"
           "3 2 0 5\n3 1 2 5\n3 3 1 5\n3 0 3 5\n";
}

inline const char* single_triangle_off() {
    return "OFF\n3 1 3\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
}

inline std::shared_ptr<kw::TriangleMesh> octahedron() {
    std::istringstream in(octahedron_off());
    return kw::TriangleMesh::parse_off(in);
}

inline std::shared_ptr<kw::TriangleMesh> genus2() {
    return kw::TriangleMesh::load_off(std::string(KWLAB_DATA_DIR) + "/genus2.off");
}

} // namespace kwtest
