#include <doctest.h>

#include "riemplex/geometry.hpp"

#include <cmath>
#include <random>

using namespace riemplex;
using namespace riemplex::geom;

namespace {

vec_t v2(double x, double y) {
    vec_t v(2);
    v << x, y;
    return v;
}

// Brute-force optimal transport: recursively route min(supply, demand)
// between every live pair; every vertex of the transportation polytope is
// reachable this way, so the minimum over leaves is exact.
double transport_brute(vec_t mu, vec_t nu, const mat_t& cost) {
    double live_mass = mu.sum();
    if (live_mass < 1e-14) return 0.0;
    double best = INF_MARKER;
    for (int i = 0; i < mu.size(); ++i) {
        if (mu[i] < 1e-14) continue;
        for (int j = 0; j < nu.size(); ++j) {
            if (nu[j] < 1e-14) continue;
            const double m = std::min(mu[i], nu[j]);
            vec_t mu2 = mu, nu2 = nu;
            mu2[i] -= m;
            nu2[j] -= m;
            best = std::min(best, m * cost(i, j) + transport_brute(mu2, nu2, cost));
        }
    }
    return best;
}

} // namespace

TEST_CASE("chebyshev center of the unit square") {
    vec_t lo = v2(0, 0), hi = v2(1, 1);
    chebyshev_t ch = chebyshev_center({}, lo, hi);
    CHECK(ch.radius == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(ch.center[0] == doctest::Approx(0.5));
    CHECK(ch.center[1] == doctest::Approx(0.5));
}

TEST_CASE("feasibility of halfspace systems") {
    vec_t lo = v2(0, 0), hi = v2(1, 1);
    // x + y <= 0.5 intersected with x + y >= 0.4 : feasible band
    std::vector<halfspace_t> band = {{v2(1, 1), 0.5}, {v2(-1, -1), -0.4}};
    CHECK(feasible_closed(band, lo, hi, 1e-9));
    // contradictory: x + y <= 0.2 and x + y >= 0.8
    std::vector<halfspace_t> empty = {{v2(1, 1), 0.2}, {v2(-1, -1), -0.8}};
    CHECK_FALSE(feasible_closed(empty, lo, hi, 1e-9));
    // touching at a single hyperplane: feasible when closed
    std::vector<halfspace_t> touch = {{v2(1, 0), 0.5}, {v2(-1, 0), -0.5}};
    CHECK(feasible_closed(touch, lo, hi, 1e-9));
}

TEST_CASE("vertex enumeration recovers polygon corners") {
    vec_t lo = v2(0, 0), hi = v2(1, 1);
    // triangle x >= 0, y >= 0, x + y <= 1
    std::vector<halfspace_t> tri = {{v2(1, 1), 1.0}};
    auto verts = enumerate_vertices(tri, lo, hi);
    CHECK(verts.size() == 3);
    double area = polytope_measure(verts, tri);
    CHECK(area == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("polytope measures across dimensions") {
    SUBCASE("segment length") {
        std::vector<vec_t> seg = {v2(0, 0), v2(3, 4)};
        CHECK(polytope_measure(seg, {}) == doctest::Approx(5.0));
    }
    SUBCASE("single point has counting measure") {
        std::vector<vec_t> pt = {v2(0.5, 0.5)};
        CHECK(polytope_measure(pt, {}) == doctest::Approx(1.0));
    }
    SUBCASE("unit cube volume via facet recursion") {
        vec_t lo(3), hi(3);
        lo << 0, 0, 0;
        hi << 1, 1, 1;
        auto verts = enumerate_vertices({}, lo, hi);
        CHECK(verts.size() == 8);
        std::vector<halfspace_t> rows;
        for (int j = 0; j < 3; ++j) {
            vec_t e = vec_t::Zero(3);
            e[j] = 1;
            rows.push_back({e, 1.0});
            rows.push_back({-e, 0.0});
        }
        CHECK(polytope_measure(verts, rows) == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("3-d simplex") {
        vec_t lo(3), hi(3);
        lo << 0, 0, 0;
        hi << 1, 1, 1;
        vec_t ones(3);
        ones << 1, 1, 1;
        std::vector<halfspace_t> rows = {{ones, 1.0}};
        auto verts = enumerate_vertices(rows, lo, hi);
        std::vector<halfspace_t> all = rows;
        for (int j = 0; j < 3; ++j) {
            vec_t e = vec_t::Zero(3);
            e[j] = 1;
            all.push_back({e, 1.0});
            all.push_back({-e, 0.0});
        }
        CHECK(polytope_measure(verts, all) == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
    }
}

TEST_CASE("monte carlo volume agrees with exact area") {
    vec_t lo = v2(0, 0), hi = v2(1, 1);
    std::vector<halfspace_t> tri = {{v2(1, 1), 1.0}};
    rng_t rng(42);
    mc_volume_t mc = monte_carlo_volume(tri, lo, hi, 200000, rng);
    CHECK(std::abs(mc.volume - 0.5) <= 3.0 * mc.std_error);
}

TEST_CASE("wasserstein1 equals brute-force coupling enumeration") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> U(0.1, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int r = 2 + static_cast<int>(gen() % 3); // supports up to 4
        const int s = 2 + static_cast<int>(gen() % 3);
        vec_t mu(r), nu(s);
        for (int i = 0; i < r; ++i) mu[i] = U(gen);
        for (int j = 0; j < s; ++j) nu[j] = U(gen);
        mu /= mu.sum();
        nu /= nu.sum();
        mat_t cost(r, s);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < s; ++j) cost(i, j) = U(gen);
        const double lp = wasserstein1(mu, nu, cost);
        const double brute = transport_brute(mu, nu, cost);
        CHECK(lp == doctest::Approx(brute).epsilon(1e-9));
    }
}

TEST_CASE("degenerate transport is exact") {
    // point masses on both sides force the full mass across one arc
    vec_t mu(1), nu(1);
    mu << 1.0;
    nu << 1.0;
    mat_t cost(1, 1);
    cost << 2.5;
    CHECK(wasserstein1(mu, nu, cost) == 2.5);
}

TEST_CASE("permutation sign") {
    CHECK(permutation_sign({0, 1, 2}, {0, 1, 2}) == 1);
    CHECK(permutation_sign({0, 1, 2}, {1, 0, 2}) == -1);
    CHECK(permutation_sign({0, 1, 2}, {2, 0, 1}) == 1);
}

TEST_CASE("affine hull ranks") {
    std::vector<vec_t> colinear = {v2(0, 0), v2(1, 1), v2(2, 2)};
    CHECK(affine_hull(colinear).dim == 1);
    std::vector<vec_t> planar = {v2(0, 0), v2(1, 0), v2(0, 1)};
    CHECK(affine_hull(planar).dim == 2);
}
