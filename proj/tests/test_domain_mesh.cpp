#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "kwlab/field.hpp"
#include "kwlab/mesh.hpp"

using namespace kw;

TEST_CASE("octahedron loads with the right counts, area, and genus") {
    auto mesh = kwtest::octahedron();
    REQUIRE(mesh->size() == 6);
    REQUIRE(mesh->triangle_count() == 8);
    REQUIRE(mesh->euler_characteristic() == 2);
    REQUIRE(mesh->genus() == 0);
    // 8 equilateral faces with side sqrt(2): total area 8 * sqrt(3)/2
    REQUIRE(mesh->area() == Catch::Approx(4.0 * std::sqrt(3.0)).margin(1e-12));
    double s = 0.0;
    for (double w : mesh->weights()) s += w;
    REQUIRE(s == Catch::Approx(mesh->area()).margin(1e-12));
}

TEST_CASE("genus-2 mesh loads and reports its topology") {
    auto mesh = kwtest::genus2();
    REQUIRE(mesh->euler_characteristic() == -2);
    REQUIRE(mesh->genus() == 2);
    REQUIRE(mesh->size() == 240);
}

TEST_CASE("meshes with boundary are rejected") {
    std::istringstream in(kwtest::single_triangle_off());
    try {
        TriangleMesh::parse_off(in);
        FAIL("expected a throw");
    } catch (const error& e) {
        REQUIRE(e.code() == errc::mesh_invalid);
    }
}

TEST_CASE("inconsistent orientation is rejected") {
    // two faces traverse the shared edge 0->1 in the same direction
    std::istringstream in(
        "OFF\n4 2 5\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 1 3\n");
    REQUIRE_THROWS_AS(TriangleMesh::parse_off(in), error);
}

TEST_CASE("non-triangle faces are rejected") {
    std::istringstream in(
        "OFF\n4 1 4\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n");
    try {
        TriangleMesh::parse_off(in);
        FAIL("expected a throw");
    } catch (const error& e) {
        REQUIRE(e.code() == errc::mesh_invalid);
    }
}

TEST_CASE("vertex indices out of range are a parse error") {
    std::istringstream in("OFF\n3 1 3\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n");
    try {
        TriangleMesh::parse_off(in);
        FAIL("expected a throw");
    } catch (const error& e) {
        REQUIRE(e.code() == errc::parse_error);
    }
}

TEST_CASE("missing header is a parse error") {
    std::istringstream in("3 1 3\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
    REQUIRE_THROWS_AS(TriangleMesh::parse_off(in), error);
}

TEST_CASE("laplacian annihilates constants and is self-adjoint") {
    for (auto mesh : {kwtest::octahedron(), kwtest::genus2()}) {
        DomainPtr dom = mesh;
        ScalarField c(dom, 3.7);
        REQUIRE(linf(laplacian(c)) < 1e-12);

        ScalarField u = kwtest::smooth_field(dom, 5);
        ScalarField v = kwtest::smooth_field(dom, 9);
        const double lhs = l2_inner(laplacian(u), v);
        const double rhs = l2_inner(u, laplacian(v));
        REQUIRE(lhs == Catch::Approx(rhs).margin(1e-10 * (1.0 + std::abs(lhs))));
        REQUIRE(dirichlet_energy(u) >= 0.0);
    }
}

namespace {

// Independent P1 stiffness oracle: per element, grad of the hat function at
// vertex a is (n x e_a) / (2A) with e_a the opposite edge, n the unit
// normal; S^e_ab = A grad_a . grad_b. Assembled action compared against the
// library's laplacian (which is -(S u) / a_i).
std::vector<double> stiffness_action_oracle(const TriangleMesh& mesh,
                                            const std::vector<std::array<double, 3>>& verts,
                                            const std::vector<std::array<std::uint32_t, 3>>& tris,
                                            const std::vector<double>& u) {
    std::vector<double> out(verts.size(), 0.0);
    for (const auto& t : tris) {
        const auto &p0 = verts[t[0]], &p1 = verts[t[1]], &p2 = verts[t[2]];
        auto sub = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
            return std::array<double, 3>{a[0] - b[0], a[1] - b[1], a[2] - b[2]};
        };
        auto cross = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
            return std::array<double, 3>{a[1] * b[2] - a[2] * b[1],
                                         a[2] * b[0] - a[0] * b[2],
                                         a[0] * b[1] - a[1] * b[0]};
        };
        auto dot3 = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
            return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        };
        const auto e0 = sub(p2, p1), e1 = sub(p0, p2), e2 = sub(p1, p0);
        const auto nvec = cross(e2, sub(p2, p0));
        const double two_area = std::sqrt(dot3(nvec, nvec));
        const double area = 0.5 * two_area;
        const std::array<std::array<double, 3>, 3> edges = {e0, e1, e2};
        std::array<std::array<double, 3>, 3> grad;
        for (int a = 0; a < 3; ++a) {
            const auto g = cross({nvec[0] / two_area, nvec[1] / two_area, nvec[2] / two_area},
                                 edges[a]);
            grad[a] = {g[0] / two_area, g[1] / two_area, g[2] / two_area};
        }
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                out[t[a]] += area * dot3(grad[a], grad[b]) * u[t[b]];
    }
    (void)mesh;
    return out;
}

} // namespace

TEST_CASE("cotangent stiffness matches the element-gradient oracle") {
    // regenerate the octahedron geometry alongside the parsed mesh
    const std::vector<std::array<double, 3>> verts = {
        {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    const std::vector<std::array<std::uint32_t, 3>> tris = {
        {0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4},
        {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
    auto mesh = kwtest::octahedron();
    DomainPtr dom = mesh;

    ScalarField u = kwtest::smooth_field(dom, 33);
    std::vector<double> uv(u.values().begin(), u.values().end());
    const auto su = stiffness_action_oracle(*mesh, verts, tris, uv);

    ScalarField lap = laplacian(u);
    for (std::size_t i = 0; i < dom->size(); ++i) {
        const double lib = -lap[i] * dom->weights()[i]; // back to (S u)_i
        REQUIRE(lib == Catch::Approx(su[i]).margin(1e-12));
    }
}

TEST_CASE("mesh poisson inverts the laplacian up to constants") {
    for (auto mesh : {kwtest::octahedron(), kwtest::genus2()}) {
        DomainPtr dom = mesh;
        ScalarField f = kwtest::smooth_field(dom, 71);
        f += -mean(f);
        ScalarField src = laplacian(f);
        src *= -1.0;                      // -lap f has exactly zero lumped mean
        ScalarField w = poisson(src);
        ScalarField diff = w - f;
        diff += -mean(diff);
        REQUIRE(linf(diff) < 1e-7 * (1.0 + linf(f)));
    }
}

TEST_CASE("mesh poisson rejects unbalanced sources") {
    DomainPtr dom = kwtest::octahedron();
    ScalarField f(dom, 2.0);
    try {
        poisson(f);
        FAIL("expected a throw");
    } catch (const error& e) {
        REQUIRE(e.code() == errc::not_solvable);
    }
}

TEST_CASE("mesh helmholtz solves to the stated residual") {
    DomainPtr dom = kwtest::genus2();
    ScalarField f = kwtest::smooth_field(dom, 19);
    const double lam = 2.0;
    ScalarField w = helmholtz(lam, f);
    ScalarField lap = laplacian(w);
    double res = 0.0;
    for (std::size_t i = 0; i < dom->size(); ++i)
        res = std::max(res, std::abs(-lap[i] + lam * w[i] - f[i]));
    REQUIRE(res < 1e-6 * (1.0 + linf(f)));
}

TEST_CASE("mesh indefinite solve resolves a sign-changing shift") {
    DomainPtr dom = kwtest::octahedron();
    const std::size_t n = dom->size();
    std::vector<double> d = {2.0, -1.0, 1.5, -0.5, 3.0, 0.7};
    std::vector<double> g(n, 1.0), x(n, 0.0);
    auto r = dom->indefinite_solve(d, g, x, 1e-12, 500);
    REQUIRE(r.converged);
    ScalarField xf(dom, std::vector<double>(x));
    ScalarField lap = laplacian(xf);
    for (std::size_t i = 0; i < n; ++i)
        REQUIRE(-lap[i] + d[i] * x[i] == Catch::Approx(g[i]).margin(1e-7));
}

TEST_CASE("mesh graph distances satisfy metric sanity checks") {
    DomainPtr dom = kwtest::octahedron();
    const auto d = dom->distance_from(0);
    REQUIRE(d[0] == 0.0);
    // neighbors along an edge of length sqrt(2)
    REQUIRE(d[2] == Catch::Approx(std::sqrt(2.0)).margin(1e-12));
    // the antipode needs two hops
    REQUIRE(d[1] == Catch::Approx(2.0 * std::sqrt(2.0)).margin(1e-12));
    REQUIRE(dom->bump_radius_cap() > 0.0);
}
