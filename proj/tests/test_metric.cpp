#include <doctest.h>

#include "fixtures.hpp"
#include "riemplex/metric.hpp"

#include <cmath>

using namespace riemplex;
using fixtures::vv;

namespace {

riemannian_structure_t tree_structure(double scale = 1.0) {
    partition_t p = fixtures::tree_example(scale);
    nerve_t n = build_nerve(p, 3);
    return riemannian_structure_t::build(std::move(p), std::move(n));
}

riemannian_structure_t two_neuron_structure() {
    partition_t p = fixtures::two_neuron_example();
    nerve_t n = build_nerve(p, 3);
    return riemannian_structure_t::build(std::move(p), std::move(n));
}

// Unit 2x2 grid on [0,2]^2: every facet has length 1 and all angles are
// right angles.
riemannian_structure_t grid_structure() {
    domain_t dom;
    dom.bounds = fixtures::bx(0, 2, 0, 2);
    auto cell = [](index_t id, double x0, double x1, double y0, double y1) {
        partition_cell_t c;
        c.id = id;
        c.geometry.is_box = true;
        c.geometry.box = fixtures::bx(x0, x1, y0, y1);
        return c;
    };
    partition_t p(dom, {cell(0, 0, 1, 0, 1), cell(1, 1, 2, 0, 1), cell(2, 0, 1, 1, 2),
                        cell(3, 1, 2, 1, 2)});
    nerve_t n = build_nerve(p, 3);
    return riemannian_structure_t::build(std::move(p), std::move(n));
}

} // namespace

TEST_CASE("vertex inner products are cell volumes") {
    auto rs = tree_structure();
    CHECK(rs.vertex_inner(1) == 2.0);
    CHECK(rs.vertex_inner(2) == 6.0);
    CHECK(rs.vertex_inner(3) == 2.0);
    CHECK(rs.vertex_inner(4) == 6.0);
    CHECK_THROWS_AS(rs.vertex_inner(99), input_error_t);

    domain_t dom;
    dom.bounds = fixtures::bx(0, 1, 0, 1);
    partition_cell_t c;
    c.id = 0;
    c.geometry.is_box = true;
    c.geometry.box = dom.bounds;
    partition_t single(dom, {c});
    nerve_t n = build_nerve(single, 2);
    auto rs1 = riemannian_structure_t::build(std::move(single), std::move(n));
    CHECK(rs1.vertex_inner(0) == 1.0);
}

TEST_CASE("tree example vertex Gram is diag(2,1) with condition number 2") {
    auto rs = tree_structure();
    const simplex_t e12 = make_simplex({1, 2});
    const simplex_t e14 = make_simplex({1, 4});
    CHECK(rs.edge_inner(1, e12, e12) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rs.edge_inner(1, e14, e14) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rs.edge_inner(1, e12, e14) == 0.0);

    mat_t G = rs.star_gram(make_simplex({1}), 1);
    REQUIRE(G.rows() == 2);
    CHECK(G(0, 0) == doctest::Approx(2.0));
    CHECK(G(1, 1) == doctest::Approx(1.0));
    CHECK(G(0, 1) == 0.0);
    CHECK(rs.gram_condition(1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("box partitions have exactly diagonal Grams everywhere") {
    auto rs = tree_structure();
    for (index_t v = 1; v <= 4; ++v) {
        mat_t G = rs.star_gram(simplex_t({v}), 1);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < G.cols(); ++j)
                if (i != j) CHECK(G(i, j) == 0.0);
    }
}

TEST_CASE("edge consistency: the same value from both endpoint stars") {
    auto rs = two_neuron_structure();
    for (const auto& e : rs.complex().simplices(1)) {
        const double at_u = rs.edge_inner(e.vertices[0], e, e);
        const double at_w = rs.edge_inner(e.vertices[1], e, e);
        CHECK(std::abs(at_u - at_w) <= 1e-9);
    }
}

TEST_CASE("two-neuron edge inner products carry the 4/5 angle") {
    auto rs = two_neuron_structure();
    const double len = std::sqrt(5.0) / 4.0;
    const simplex_t e1 = make_simplex({0, 1});
    const simplex_t e2 = make_simplex({0, 2});
    CHECK(rs.edge_inner(0, e1, e1) == doctest::Approx(len).epsilon(1e-9));
    CHECK(rs.edge_inner(0, e1, e2) ==
          doctest::Approx(len * 0.8).epsilon(1e-9)); // sqrt(l1 l2) cos(theta)

    // the diagonal edge through the center point carries no facet measure
    const simplex_t e5 = make_simplex({0, 3});
    CHECK(rs.edge_inner(0, e5, e5) == 0.0);
    CHECK(rs.edge_inner(0, e1, e5) == 0.0);
    CHECK(rs.gram_singular(0));

    // Cauchy-Schwarz across every constructed vertex Gram
    for (index_t v = 0; v <= 3; ++v) {
        mat_t G = rs.star_gram(simplex_t({v}), 1);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < G.cols(); ++j)
                CHECK(std::abs(G(i, j)) <=
                      std::sqrt(G(i, i) * G(j, j)) + 1e-9);
    }
}

TEST_CASE("higher inner products") {
    SUBCASE("axis-aligned 2-simplex determinant is the product of facet lengths") {
        auto rs = tree_structure();
        const simplex_t tri = make_simplex({1, 2, 4});
        const double v = rs.higher_inner(make_simplex({1}), tri, tri);
        CHECK(v == doctest::Approx(2.0 * 1.0).epsilon(1e-12));
    }
    SUBCASE("orthogonal unit facets give 1") {
        auto rs = grid_structure();
        const simplex_t tri = make_simplex({0, 1, 2});
        CHECK(rs.higher_inner(make_simplex({0}), tri, tri) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("two-neuron 2-simplex picks up the off-diagonal angle") {
        auto rs = two_neuron_structure();
        const simplex_t tri = make_simplex({0, 1, 2});
        const double l = std::sqrt(5.0) / 4.0;
        const double expect = l * l * (1.0 - 0.8 * 0.8);
        CHECK(rs.higher_inner(make_simplex({0}), tri, tri) ==
              doctest::Approx(expect).epsilon(1e-9));
        CHECK(rs.higher_inner(make_simplex({0}), tri, tri) >= -1e-9);
    }
    SUBCASE("dimension mismatch is rejected") {
        auto rs = tree_structure();
        CHECK_THROWS_AS(rs.higher_inner(make_simplex({1}), make_simplex({1, 2}),
                                        make_simplex({1, 2, 4})),
                        input_error_t);
    }
}

TEST_CASE("star grams") {
    auto rs = tree_structure();
    SUBCASE("empty star at p gives a 0x0 matrix") {
        // vertex 1 belongs to one triangle only; p = 3 has no members
        mat_t G = rs.star_gram(make_simplex({1}), 3);
        CHECK(G.rows() == 0);
    }
    SUBCASE("gram is symmetric") {
        auto rs2 = two_neuron_structure();
        for (index_t v = 0; v <= 3; ++v) {
            mat_t G = rs2.star_gram(simplex_t({v}), 2);
            CHECK((G - G.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
        }
    }
}

TEST_CASE("gram condition numbers") {
    SUBCASE("four cells at a corner: point-contact edges make the Gram singular") {
        auto rs = grid_structure();
        CHECK(rs.gram_singular(0));
    }
    SUBCASE("isotropic diag(c,c) gives 1") {
        // three cells, no four-corner meeting: the L-shaped split
        domain_t dom;
        dom.bounds = fixtures::bx(0, 2, 0, 2);
        auto cell = [](index_t id, double x0, double x1, double y0, double y1) {
            partition_cell_t c;
            c.id = id;
            c.geometry.is_box = true;
            c.geometry.box = fixtures::bx(x0, x1, y0, y1);
            return c;
        };
        partition_t p(dom, {cell(0, 0, 1, 0, 2), cell(1, 1, 2, 0, 1),
                            cell(2, 1, 2, 1, 2)});
        nerve_t n = build_nerve(p, 3);
        auto rs = riemannian_structure_t::build(std::move(p), std::move(n));
        mat_t G = rs.star_gram(make_simplex({1}), 1);
        REQUIRE(G.rows() == 2);
        CHECK(G(0, 0) == doctest::Approx(1.0));
        CHECK(G(1, 1) == doctest::Approx(1.0));
        CHECK(rs.gram_condition(1) == doctest::Approx(1.0));
    }
    SUBCASE("explicit diagonal (4,1,1,2) gives 4") {
        domain_t dom;
        dom.bounds = fixtures::bx(0, 4, 0, 3);
        auto cell = [](index_t id, double x0, double x1, double y0, double y1) {
            partition_cell_t c;
            c.id = id;
            c.geometry.is_box = true;
            c.geometry.box = fixtures::bx(x0, x1, y0, y1);
            return c;
        };
        partition_t p(dom, {cell(0, 0, 4, 1, 2), cell(1, 0, 4, 0, 1),
                            cell(2, 0, 1, 2, 3), cell(3, 1, 2, 2, 3),
                            cell(4, 2, 4, 2, 3)});
        nerve_t n = build_nerve(p, 3);
        auto rs = riemannian_structure_t::build(std::move(p), std::move(n));
        mat_t G = rs.star_gram(make_simplex({0}), 1);
        REQUIRE(G.rows() == 4);
        CHECK(G(0, 0) == doctest::Approx(4.0)); // edge to cell 1
        CHECK(G(1, 1) == doctest::Approx(1.0));
        CHECK(G(2, 2) == doctest::Approx(1.0));
        CHECK(G(3, 3) == doctest::Approx(2.0));
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (i != j) CHECK(G(i, j) == 0.0);
        CHECK(rs.gram_condition(0) == doctest::Approx(4.0));
    }
}

TEST_CASE("cayley-menger volumes") {
    SUBCASE("segment of length L") {
        mat_t L(2, 2);
        L << 0, 2.5, 2.5, 0;
        CHECK(simplex_volume_cayley_menger(L) == doctest::Approx(2.5).epsilon(1e-12));
    }
    SUBCASE("unit equilateral triangle") {
        mat_t L(3, 3);
        L << 0, 1, 1, 1, 0, 1, 1, 1, 0;
        CHECK(simplex_volume_cayley_menger(L) ==
              doctest::Approx(std::sqrt(3.0) / 4.0).epsilon(1e-12));
    }
    SUBCASE("regular unit tetrahedron") {
        mat_t L = mat_t::Ones(4, 4) - mat_t::Identity(4, 4);
        CHECK(simplex_volume_cayley_menger(L) ==
              doctest::Approx(1.0 / (6.0 * std::sqrt(2.0))).epsilon(1e-12));
    }
    SUBCASE("point convention") {
        mat_t L = mat_t::Zero(1, 1);
        CHECK(simplex_volume_cayley_menger(L) == 1.0);
    }
    SUBCASE("non-embeddable lengths are rejected by determinant sign") {
        mat_t L(3, 3);
        L << 0, 1, 3, 1, 0, 1, 3, 1, 0; // violates the triangle inequality
        CHECK_THROWS_AS(simplex_volume_cayley_menger(L), input_error_t);
    }
}

TEST_CASE("scaling covariance on the tree example") {
    auto base = tree_structure(1.0);
    auto scaled = tree_structure(2.0);
    const double lam = 2.0;
    for (index_t v = 1; v <= 4; ++v) {
        CHECK(scaled.vertex_inner(v) ==
              doctest::Approx(base.vertex_inner(v) * lam * lam)); // lambda^n
    }
    const simplex_t e12 = make_simplex({1, 2});
    CHECK(scaled.edge_inner(1, e12, e12) ==
          doctest::Approx(base.edge_inner(1, e12, e12) * lam)); // lambda^{n-1}
}

TEST_CASE("edge_inner symmetry and incidence checks") {
    auto rs = two_neuron_structure();
    const simplex_t e1 = make_simplex({0, 1});
    const simplex_t e2 = make_simplex({0, 2});
    CHECK(rs.edge_inner(0, e1, e2) == rs.edge_inner(0, e2, e1));
    CHECK_THROWS_AS(rs.edge_inner(3, e1, e2), input_error_t);
}
