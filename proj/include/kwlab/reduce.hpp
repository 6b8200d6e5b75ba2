#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kw {

// Pairwise tree reduction. All integrals and inner products in the library
// funnel through these so results are bit-stable across runs and platforms
// with the same FP unit; accumulation order never depends on chunking.
namespace detail {

inline double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_dot(const double* a, const double* b, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_dot(a, b, half) + pairwise_dot(a + half, b + half, n - half);
}

inline double pairwise_dot3(const double* a, const double* b, const double* w, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i] * w[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_dot3(a, b, w, half) + pairwise_dot3(a + half, b + half, w + half, n - half);
}

} // namespace detail

inline double sum(std::span<const double> x) {
    return detail::pairwise_sum(x.data(), x.size());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    return detail::pairwise_dot(a.data(), b.data(), a.size());
}

inline double weighted_dot(std::span<const double> a, std::span<const double> b,
                           std::span<const double> w) {
    return detail::pairwise_dot3(a.data(), b.data(), w.data(), a.size());
}

} // namespace kw
