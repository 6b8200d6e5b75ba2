#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "kwlab/domain.hpp"
#include "kwlab/errors.hpp"
#include "kwlab/linsolve.hpp"

namespace kw {

// Closed oriented triangle mesh with the piecewise-linear (cotangent)
// Laplace operator and lumped vertex areas a_i:
//
//   (laplacian u)_i = -(S u)_i / a_i
//
// with S the assembled stiffness matrix. Elliptic solves run on the
// symmetric form (S + M diag(lam)) w = M f with Jacobi-preconditioned CG
// (relative residual 1e-10, at most 10 * vertex-count iterations).
//
// Construction validates: triangle faces only, finite vertices, positive
// triangle areas, every edge shared by exactly two faces with opposite
// orientation (closed + oriented + edge-manifold), single umbrella per
// vertex, and connectedness.
class TriangleMesh final : public Domain {
public:
    using Vec3 = std::array<double, 3>;
    using Tri = std::array<std::uint32_t, 3>;

    TriangleMesh(std::vector<Vec3> vertices, std::vector<Tri> triangles)
        : verts_(std::move(vertices)), tris_(std::move(triangles)) {
        validate_connectivity();
        assemble();
        cg_max_iter_ = 10 * verts_.size();
        radius_cap_ = 0.45 * estimate_diameter();
    }

    static std::shared_ptr<TriangleMesh> parse_off(std::istream& in) {
        auto [verts, tris] = read_off(in);
        return std::make_shared<TriangleMesh>(std::move(verts), std::move(tris));
    }

    static std::shared_ptr<TriangleMesh> load_off(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw error(errc::io_error, "cannot open mesh file: " + path);
        return parse_off(in);
    }

    std::size_t size() const override { return verts_.size(); }
    double area() const override { return area_; }
    std::span<const double> weights() const override { return lumped_; }

    long euler_characteristic() const { return chi_; }
    long genus() const { return (2 - chi_) / 2; }
    std::size_t triangle_count() const { return tris_.size(); }

    void laplacian(std::span<const double> u, std::span<double> out) const override {
        apply_stiffness(u, out);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = -out[i] / lumped_[i];
    }

    void poisson(std::span<const double> f, std::span<double> w) const override {
        const std::size_t n = size();
        const double total = dot(f, lumped_);
        double fmax = 0.0;
        for (double x : f) fmax = std::max(fmax, std::abs(x));
        if (std::abs(total) > 1e-10 * (1.0 + fmax) * area_)
            throw error(errc::not_solvable, "poisson: source has nonzero mean");

        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = lumped_[i] * f[i];
        auto apply = [&](std::span<const double> in, std::span<double> out) {
            apply_stiffness(in, out);
        };
        auto precond = [&](std::span<const double> in, std::span<double> out) {
            for (std::size_t i = 0; i < n; ++i) out[i] = in[i] / diag_[i];
        };
        for (auto& wi : w) wi = 0.0;
        LinSolveResult r = pcg(apply, precond, rhs, w, cg_tol_, cg_max_iter_);
        if (!r.converged) throw error(errc::solver_failure, "poisson: cg stalled");
        const double m = dot(w, lumped_) / area_;
        for (auto& wi : w) wi -= m;
    }

    void helmholtz(double lam, std::span<const double> f,
                   std::span<double> w) const override {
        if (!(lam > 0.0))
            throw error(errc::invalid_argument, "helmholtz shift must be positive");
        std::vector<double> lam_field(size(), lam);
        helmholtz_var(lam_field, f, w, cg_tol_, cg_max_iter_);
    }

    std::size_t helmholtz_var(std::span<const double> lam, std::span<const double> f,
                              std::span<double> w, double tol,
                              std::size_t max_iter) const override {
        const std::size_t n = size();
        for (double l : lam)
            if (!(l > 0.0))
                throw error(errc::invalid_argument, "helmholtz shift must be positive");
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = lumped_[i] * f[i];
        auto apply = [&](std::span<const double> in, std::span<double> out) {
            apply_stiffness(in, out);
            for (std::size_t i = 0; i < n; ++i) out[i] += lumped_[i] * lam[i] * in[i];
        };
        auto precond = [&](std::span<const double> in, std::span<double> out) {
            for (std::size_t i = 0; i < n; ++i)
                out[i] = in[i] / (diag_[i] + lumped_[i] * lam[i]);
        };
        for (auto& wi : w) wi = 0.0;
        LinSolveResult r = pcg(apply, precond, rhs, w, tol, max_iter);
        if (!r.converged) throw error(errc::solver_failure, "helmholtz_var: cg stalled");
        return r.iterations;
    }

    IndefiniteSolveResult indefinite_solve(std::span<const double> d,
                                           std::span<const double> g, std::span<double> x,
                                           double tol, std::size_t max_iter) const override {
        const std::size_t n = size();
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = lumped_[i] * g[i];
        auto apply = [&](std::span<const double> in, std::span<double> out) {
            apply_stiffness(in, out);
            for (std::size_t i = 0; i < n; ++i) out[i] += lumped_[i] * d[i] * in[i];
        };
        auto precond = [&](std::span<const double> in, std::span<double> out) {
            for (std::size_t i = 0; i < n; ++i)
                out[i] = in[i] / (diag_[i] + lumped_[i] * (std::abs(d[i]) + 1.0));
        };
        LinSolveResult r = minres(apply, precond, rhs, x, tol, max_iter);
        return {r.iterations, r.rel_residual, r.converged};
    }

    std::array<double, 3> position(std::size_t i) const override { return verts_[i]; }

    std::vector<double> distance_from(std::size_t i) const override {
        const std::size_t n = size();
        std::vector<double> dist(n, std::numeric_limits<double>::infinity());
        using Item = std::pair<double, std::size_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
        dist[i] = 0.0;
        heap.emplace(0.0, i);
        while (!heap.empty()) {
            auto [d, v] = heap.top();
            heap.pop();
            if (d > dist[v]) continue;
            for (std::size_t k = row_ptr_[v]; k < row_ptr_[v + 1]; ++k) {
                const std::size_t u = col_[k];
                if (u == v) continue;
                const double nd = d + edge_len_[k];
                if (nd < dist[u]) {
                    dist[u] = nd;
                    heap.emplace(nd, u);
                }
            }
        }
        return dist;
    }

    double bump_radius_cap() const override { return radius_cap_; }

    double coordinate_span() const override {
        double lo = verts_[0][0], hi = verts_[0][0];
        for (const auto& v : verts_) {
            lo = std::min(lo, v[0]);
            hi = std::max(hi, v[0]);
        }
        return hi > lo ? hi - lo : 1.0;
    }

    std::string describe() const override {
        std::ostringstream os;
        os << "mesh V=" << verts_.size() << " F=" << tris_.size() << " chi=" << chi_;
        return os.str();
    }

    // Stiffness application S.u (positive semi-definite, rows sum to zero).
    void apply_stiffness(std::span<const double> u, std::span<double> out) const {
        for (std::size_t i = 0; i < size(); ++i) {
            double acc = 0.0;
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                acc += s_val_[k] * u[col_[k]];
            out[i] = acc;
        }
    }

private:
    static std::pair<std::vector<Vec3>, std::vector<Tri>> read_off(std::istream& in) {
        std::vector<std::string> tokens;
        std::string line;
        std::size_t lineno = 0;
        std::vector<std::pair<std::string, std::size_t>> toks;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            std::istringstream ls(line);
            std::string t;
            while (ls >> t) toks.emplace_back(t, lineno);
        }
        std::size_t pos = 0;
        auto next = [&](const char* what) -> std::pair<std::string, std::size_t> {
            if (pos >= toks.size())
                throw error(errc::parse_error, std::string("off: unexpected end of file, expected ") + what);
            return toks[pos++];
        };
        auto next_num = [&](const char* what) -> std::pair<double, std::size_t> {
            auto [t, ln] = next(what);
            try {
                std::size_t used = 0;
                double v = std::stod(t, &used);
                if (used != t.size()) throw std::invalid_argument(t);
                return {v, ln};
            } catch (const std::exception&) {
                throw error(errc::parse_error,
                            "off: line " + std::to_string(ln) + ": expected " + what +
                                ", got '" + t + "'");
            }
        };

        auto [magic, mline] = next("OFF header");
        if (magic != "OFF")
            throw error(errc::parse_error,
                        "off: line " + std::to_string(mline) + ": missing OFF header");
        const auto nv = static_cast<long long>(next_num("vertex count").first);
        const auto nf = static_cast<long long>(next_num("face count").first);
        next_num("edge count");
        if (nv < 3 || nf < 1)
            throw error(errc::parse_error, "off: too few vertices or faces");

        std::vector<Vec3> verts(static_cast<std::size_t>(nv));
        for (auto& v : verts)
            for (double& c : v) {
                auto [val, ln] = next_num("vertex coordinate");
                if (!std::isfinite(val))
                    throw error(errc::parse_error,
                                "off: line " + std::to_string(ln) + ": non-finite coordinate");
                c = val;
            }

        std::vector<Tri> tris(static_cast<std::size_t>(nf));
        for (auto& t : tris) {
            auto [cnt, ln] = next_num("face vertex count");
            if (cnt != 3.0)
                throw error(errc::mesh_invalid,
                            "off: line " + std::to_string(ln) + ": non-triangle face");
            for (auto& idx : t) {
                auto [val, ln2] = next_num("face vertex index");
                if (val < 0 || val >= static_cast<double>(nv) || val != std::floor(val))
                    throw error(errc::parse_error,
                                "off: line " + std::to_string(ln2) + ": bad vertex index");
                idx = static_cast<std::uint32_t>(val);
            }
        }
        return {std::move(verts), std::move(tris)};
    }

    void validate_connectivity() {
        const std::size_t nv = verts_.size();
        // half-edge census: closed oriented manifold needs every directed
        // edge exactly once and its reverse exactly once
        std::map<std::pair<std::uint32_t, std::uint32_t>, int> half;
        for (const auto& t : tris_) {
            if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
                throw error(errc::mesh_invalid, "face repeats a vertex");
            for (int e = 0; e < 3; ++e) {
                auto key = std::make_pair(t[e], t[(e + 1) % 3]);
                if (++half[key] > 1)
                    throw error(errc::mesh_invalid, "duplicated directed edge (orientation)");
            }
        }
        long edge_count = 0;
        for (const auto& [key, cnt] : half) {
            if (key.first < key.second) {
                auto rev = half.find({key.second, key.first});
                if (rev == half.end())
                    throw error(errc::mesh_invalid, "boundary or inconsistent orientation");
                ++edge_count;
            } else if (half.find({key.second, key.first}) == half.end()) {
                throw error(errc::mesh_invalid, "boundary or inconsistent orientation");
            }
        }
        chi_ = static_cast<long>(nv) - edge_count + static_cast<long>(tris_.size());

        // single umbrella per vertex: faces around each vertex form one cycle
        std::vector<std::vector<std::uint32_t>> vert_faces(nv);
        for (std::uint32_t f = 0; f < tris_.size(); ++f)
            for (auto v : tris_[f]) vert_faces[v].push_back(f);
        for (std::size_t v = 0; v < nv; ++v) {
            const auto& fs = vert_faces[v];
            if (fs.empty()) throw error(errc::mesh_invalid, "isolated vertex");
            // outgoing neighbor -> face, then walk the fan
            std::map<std::uint32_t, std::uint32_t> next_of;
            for (auto f : fs) {
                const auto& t = tris_[f];
                for (int e = 0; e < 3; ++e)
                    if (t[e] == v) next_of[t[(e + 1) % 3]] = t[(e + 2) % 3];
            }
            std::uint32_t start = next_of.begin()->first, cur = start;
            std::size_t steps = 0;
            do {
                auto it = next_of.find(cur);
                if (it == next_of.end())
                    throw error(errc::mesh_invalid, "non-manifold vertex");
                cur = it->second;
                if (++steps > next_of.size())
                    throw error(errc::mesh_invalid, "non-manifold vertex");
            } while (cur != start);
            if (steps != next_of.size())
                throw error(errc::mesh_invalid, "non-manifold vertex");
        }

        // connectedness over vertices
        std::vector<char> seen(nv, 0);
        std::vector<std::uint32_t> stack = {0};
        seen[0] = 1;
        std::vector<std::vector<std::uint32_t>> adj(nv);
        for (const auto& t : tris_)
            for (int e = 0; e < 3; ++e) {
                adj[t[e]].push_back(t[(e + 1) % 3]);
                adj[t[(e + 1) % 3]].push_back(t[e]);
            }
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            for (auto u : adj[v])
                if (!seen[u]) {
                    seen[u] = 1;
                    stack.push_back(u);
                }
        }
        if (!std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; }))
            throw error(errc::mesh_invalid, "mesh is not connected");
    }

    void assemble() {
        const std::size_t nv = verts_.size();
        std::vector<std::map<std::uint32_t, double>> rows(nv);
        lumped_.assign(nv, 0.0);
        area_ = 0.0;

        double scale2 = 0.0;
        for (const auto& t : tris_) {
            const Vec3 &a = verts_[t[0]], &b = verts_[t[1]], &c = verts_[t[2]];
            for (int d = 0; d < 3; ++d) {
                scale2 = std::max(scale2, (b[d] - a[d]) * (b[d] - a[d]));
                scale2 = std::max(scale2, (c[d] - a[d]) * (c[d] - a[d]));
            }
        }

        for (const auto& t : tris_) {
            const Vec3 &a = verts_[t[0]], &b = verts_[t[1]], &c = verts_[t[2]];
            const Vec3 ab{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
            const Vec3 ac{c[0] - a[0], c[1] - a[1], c[2] - a[2]};
            const Vec3 cross{ab[1] * ac[2] - ab[2] * ac[1], ab[2] * ac[0] - ab[0] * ac[2],
                             ab[0] * ac[1] - ab[1] * ac[0]};
            const double tri_area =
                0.5 * std::sqrt(cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]);
            if (!(tri_area > 1e-14 * scale2))
                throw error(errc::mesh_invalid, "degenerate triangle");
            area_ += tri_area;
            for (auto v : t) lumped_[v] += tri_area / 3.0;

            // cotangent weights: opposite-vertex angle per edge
            for (int e = 0; e < 3; ++e) {
                const std::uint32_t i = t[e], j = t[(e + 1) % 3], k = t[(e + 2) % 3];
                const Vec3 &pi = verts_[i], &pj = verts_[j], &pk = verts_[k];
                const Vec3 ki{pi[0] - pk[0], pi[1] - pk[1], pi[2] - pk[2]};
                const Vec3 kj{pj[0] - pk[0], pj[1] - pk[1], pj[2] - pk[2]};
                const double dotp = ki[0] * kj[0] + ki[1] * kj[1] + ki[2] * kj[2];
                const Vec3 cr{ki[1] * kj[2] - ki[2] * kj[1], ki[2] * kj[0] - ki[0] * kj[2],
                              ki[0] * kj[1] - ki[1] * kj[0]};
                const double crn = std::sqrt(cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]);
                const double w = 0.5 * dotp / crn;
                rows[i][j] -= w;
                rows[j][i] -= w;
                rows[i][i] += w;
                rows[j][j] += w;
            }
        }

        row_ptr_.assign(nv + 1, 0);
        for (std::size_t i = 0; i < nv; ++i) row_ptr_[i + 1] = row_ptr_[i] + rows[i].size();
        col_.resize(row_ptr_[nv]);
        s_val_.resize(row_ptr_[nv]);
        edge_len_.resize(row_ptr_[nv]);
        diag_.assign(nv, 0.0);
        for (std::size_t i = 0; i < nv; ++i) {
            std::size_t k = row_ptr_[i];
            for (const auto& [j, v] : rows[i]) {
                col_[k] = j;
                s_val_[k] = v;
                if (j == i) {
                    diag_[i] = v;
                    edge_len_[k] = 0.0;
                } else {
                    const Vec3 &p = verts_[i], &q = verts_[j];
                    edge_len_[k] = std::sqrt((p[0] - q[0]) * (p[0] - q[0]) +
                                             (p[1] - q[1]) * (p[1] - q[1]) +
                                             (p[2] - q[2]) * (p[2] - q[2]));
                }
                ++k;
            }
        }
        for (std::size_t i = 0; i < nv; ++i)
            if (!(diag_[i] > 0.0))
                throw error(errc::mesh_invalid, "stiffness diagonal not positive");
    }

    double estimate_diameter() const {
        auto d = distance_from(0);
        double m = 0.0;
        for (double x : d) m = std::max(m, x);
        return m;
    }

    std::vector<Vec3> verts_;
    std::vector<Tri> tris_;
    long chi_ = 0;
    double area_ = 0.0;
    std::vector<double> lumped_;
    std::vector<double> diag_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> col_;
    std::vector<double> s_val_;
    std::vector<double> edge_len_;
    double cg_tol_ = 1e-10;
    std::size_t cg_max_iter_ = 0;
    double radius_cap_ = 0.0;
};

} // namespace kw
