#include <doctest.h>

#include "fixtures.hpp"
#include "riemplex/nn.hpp"

#include <cmath>
#include <random>

using namespace riemplex;
using fixtures::vv;

namespace {

layer_spec_t two_neuron_layer() {
    layer_spec_t layer;
    layer.W.resize(2, 2);
    layer.W << 2, -1, -1, 2;
    layer.b.resize(2);
    layer.b << -0.5, -0.5;
    return layer;
}

layer_spec_t identity_layer(int n) {
    layer_spec_t layer;
    layer.W = mat_t::Identity(n, n);
    layer.b = vec_t::Zero(n);
    return layer;
}

mat_t quadrant_data() {
    mat_t X(4, 2);
    X << 0.1, 0.1, 0.2, 0.9, 0.9, 0.2, 0.9, 0.9;
    return X;
}

domain_t unit_square() {
    domain_t d;
    d.bounds = fixtures::bx(0, 1, 0, 1);
    return d;
}

layer_spec_t random_layer(std::mt19937_64& gen, int in, int out) {
    std::normal_distribution<double> N(0.0, 1.0);
    layer_spec_t layer;
    layer.W.resize(out, in);
    layer.b.resize(out);
    for (int i = 0; i < out; ++i) {
        for (int j = 0; j < in; ++j) layer.W(i, j) = N(gen);
        layer.b[i] = 0.3 * N(gen);
    }
    return layer;
}

mat_t random_points(std::mt19937_64& gen, int count) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    mat_t X(count, 2);
    for (int i = 0; i < count; ++i) {
        X(i, 0) = U(gen);
        X(i, 1) = U(gen);
    }
    return X;
}

} // namespace

TEST_CASE("activation patterns and pattern maps") {
    auto layer = two_neuron_layer();
    CHECK(activation_pattern(layer, vv(0.1, 0.1)) == std::vector<int>{0, 0});
    CHECK(activation_pattern(layer, vv(0.9, 0.2)) == std::vector<int>{1, 0});
    // ties sit on the inactive side
    CHECK(activation_pattern(layer, vv(0.5, 0.5)) == std::vector<int>{0, 0});

    mat_t W;
    vec_t b;
    pattern_affine(layer, {1, 0}, W, b);
    CHECK(W.row(0) == layer.W.row(0));
    CHECK(W.row(1).norm() == 0.0);
    CHECK(b[1] == 0.0);
}

TEST_CASE("layer partitions from witnessed patterns") {
    SUBCASE("two neurons with data in all four cells") {
        auto part = layer_partition(two_neuron_layer(), unit_square(), quadrant_data());
        CHECK(part.size() == 4);
        nerve_t nerve = build_nerve(part, 3);
        CHECK(nerve.complex.count(0) == 4);
        CHECK(nerve.complex.count(1) == 6);
        CHECK(nerve.complex.count(2) == 4);
        CHECK(nerve.complex.count(3) == 1);
    }
    SUBCASE("single neuron with data on both sides gives two cells") {
        layer_spec_t layer;
        layer.W.resize(1, 2);
        layer.W << 1, 0;
        layer.b.resize(1);
        layer.b << -0.5;
        mat_t X(2, 2);
        X << 0.2, 0.5, 0.8, 0.5;
        auto part = layer_partition(layer, unit_square(), X);
        CHECK(part.size() == 2);
    }
    SUBCASE("all data on one side gives one cell") {
        layer_spec_t layer;
        layer.W.resize(1, 2);
        layer.W << 1, 0;
        layer.b.resize(1);
        layer.b << -0.9;
        mat_t X(3, 2);
        X << 0.1, 0.5, 0.2, 0.5, 0.3, 0.1;
        auto part = layer_partition(layer, unit_square(), X);
        CHECK(part.size() == 1);
    }
    SUBCASE("no data is rejected") {
        CHECK_THROWS_AS(layer_partition(two_neuron_layer(), unit_square(), mat_t(0, 2)),
                        input_error_t);
    }
}

TEST_CASE("refine_layer") {
    SUBCASE("identity layer refines nothing and maps bijectively") {
        auto l1 = two_neuron_layer();
        auto prev_raw = layer_partition(l1, unit_square(), quadrant_data());
        // reuse the cells but attach the identity map, as an all-active
        // identity layer over this geometry would
        std::vector<partition_cell_t> cells;
        for (auto c : prev_raw.cells()) {
            c.predictor.kind = predictor_t::kind_t::AFFINE;
            c.predictor.W = mat_t::Identity(2, 2);
            c.predictor.b = vec_t::Zero(2);
            cells.push_back(c);
        }
        partition_t prev(prev_raw.domain(), cells);
        partition_t next(prev_raw.domain(), cells);
        auto res = refine_layer(prev, identity_layer(2), next, 3);
        CHECK(res.refined.size() == prev.size());
        std::set<index_t> targets;
        for (const auto& [id, t] : res.vertex_map) targets.insert(t);
        CHECK(targets.size() == prev.size());
    }
    SUBCASE("whole domain against a two-cell target splits in two") {
        layer_spec_t layer = identity_layer(2);
        partition_cell_t whole;
        whole.id = 0;
        whole.geometry.is_box = true;
        whole.geometry.box = unit_square().bounds;
        whole.predictor.kind = predictor_t::kind_t::AFFINE;
        whole.predictor.W = mat_t::Identity(2, 2);
        whole.predictor.b = vec_t::Zero(2);
        partition_t prev(unit_square(), {whole});

        layer_spec_t splitter;
        splitter.W.resize(1, 2);
        splitter.W << 1, 0;
        splitter.b.resize(1);
        splitter.b << -0.5;
        mat_t X(2, 2);
        X << 0.2, 0.5, 0.8, 0.5;
        partition_t next = layer_partition(splitter, unit_square(), X);

        auto res = refine_layer(prev, layer, next, 2);
        CHECK(res.refined.size() == 2);
        std::set<index_t> targets;
        for (const auto& [id, t] : res.vertex_map) targets.insert(t);
        CHECK(targets.size() == 2);
    }
}

TEST_CASE("pullback volumes") {
    auto part = layer_partition(two_neuron_layer(), unit_square(), quadrant_data());

    SUBCASE("identity map returns the plain volume") {
        for (const auto& c : part.cells()) {
            auto res = pullback_volume(part, c.id, mat_t::Identity(2, 2));
            CHECK(res.value == doctest::Approx(cell_volume(part, c.id).value));
            CHECK_FALSE(res.rank_deficient);
        }
    }
    SUBCASE("scaling by 2I multiplies by |det| = 4") {
        for (const auto& c : part.cells()) {
            auto res = pullback_volume(part, c.id, 2.0 * mat_t::Identity(2, 2));
            CHECK(res.value ==
                  doctest::Approx(4.0 * cell_volume(part, c.id).value).epsilon(1e-9));
        }
    }
    SUBCASE("exact path agrees with a monte carlo oracle within 3 sigma") {
        // the all-active cell of the two-neuron layer has invertible W
        for (const auto& c : part.cells()) {
            if (c.predictor.W.row(0).norm() == 0.0 ||
                c.predictor.W.row(1).norm() == 0.0)
                continue;
            auto res = pullback_volume(part, c.id, c.predictor.W);
            std::vector<geom::halfspace_t> rows;
            vec_t lo, hi;
            part.closure_system(c.id, rows, lo, hi);
            rng_t rng(99);
            auto mc = geom::monte_carlo_volume(rows, lo, hi, 1000000, rng);
            const double det = std::abs(c.predictor.W.determinant());
            CHECK(std::abs(res.value - det * mc.volume) <= 3.0 * det * mc.std_error);
        }
    }
    SUBCASE("rank-deficient maps collapse the image") {
        mat_t W = mat_t::Zero(2, 2);
        W(0, 0) = 1.0;
        auto res = pullback_volume(part, 0, W);
        CHECK(res.rank_deficient);
        CHECK(res.value == 0.0);
        CHECK(res.source_volume > 0.0);
    }
}

TEST_CASE("backward sequence on a single layer") {
    std::mt19937_64 gen(11);
    mat_t X = random_points(gen, 100);
    auto seq = backward_sequence({two_neuron_layer()}, unit_square(), X, 3);
    REQUIRE(seq.levels.size() == 1);
    CHECK(seq.levels[0].partition.size() == 4);
    // every data point's chain agrees with the forward pass
    for (index_t i = 0; i < X.rows(); ++i) {
        const vec_t x = X.row(i).transpose();
        auto chain = cell_chain(seq, x);
        REQUIRE(chain.size() == 1);
        REQUIRE(chain[0] != NO_VERTEX);
        CHECK(seq.levels[0].source_pattern.at(chain[0]) ==
              activation_pattern(seq.layers[0], x));
    }
}

TEST_CASE("backward sequence with identity layers is bijective levelwise") {
    std::mt19937_64 gen(21);
    mat_t X = random_points(gen, 60);
    auto seq = backward_sequence({identity_layer(2), identity_layer(2)},
                                 unit_square(), X, 2);
    REQUIRE(seq.levels.size() == 2);
    CHECK(seq.levels[0].partition.size() == 1); // everything stays active
    CHECK(seq.levels[1].partition.size() == 1);
    for (const auto& [id, vol] : seq.composed_volume) {
        CHECK(vol == doctest::Approx(cell_volume(seq.levels[0].partition, id).value));
    }
}

TEST_CASE("backward sequence on random nets matches the forward pass") {
    std::mt19937_64 gen(31);
    int nets_checked = 0;
    for (int trial = 0; trial < 8; ++trial) {
        const int L = 2 + static_cast<int>(gen() % 2);
        std::vector<int> widths = {2};
        for (int l = 0; l < L; ++l) widths.push_back(2 + static_cast<int>(gen() % 3));
        std::vector<layer_spec_t> layers;
        for (int l = 0; l < L; ++l) {
            layers.push_back(random_layer(gen, widths[l], widths[l + 1]));
        }
        mat_t X = random_points(gen, 300);
        layer_sequence_t seq;
        seq = backward_sequence(layers, unit_square(), X, 2);
        ++nets_checked;

        // every data point's refined-cell chain matches its activation
        // signature, level by level
        for (index_t i = 0; i < X.rows(); ++i) {
            const vec_t x = X.row(i).transpose();
            auto chain = cell_chain(seq, x);
            auto patterns = pattern_chain(layers, x);
            REQUIRE(chain.size() == static_cast<std::size_t>(L));
            for (int l = 0; l < L; ++l) {
                REQUIRE(chain[l] != NO_VERTEX);
                CHECK(seq.levels[l].source_pattern.at(chain[l]) == patterns[l]);
            }
            // functoriality: the chain follows the vertex maps
            for (int l = 0; l + 1 < L; ++l) {
                CHECK(seq.levels[l].vertex_map.at(chain[l]) == chain[l + 1]);
            }
        }

        // disjointness on fresh samples: a sample never sits strictly
        // inside two refined cells
        rng_t rng(1000 + trial);
        const auto& part = seq.levels[0].partition;
        auto chk = check_partition(part, 4000, rng);
        CHECK(chk.multi_interior == 0);
    }
    CHECK(nets_checked == 8);
}

TEST_CASE("enriched complexes") {
    SUBCASE("single perceptron: two vertices, one edge, boundary weight") {
        layer_spec_t layer;
        layer.W.resize(1, 2);
        layer.W << 1, 0;
        layer.b.resize(1);
        layer.b << -0.5;
        mat_t X(2, 2);
        X << 0.2, 0.5, 0.8, 0.5;
        auto seq = backward_sequence({layer}, unit_square(), X, 2);
        auto enriched = enriched_complex(seq);
        const auto& rs = enriched.structure;
        CHECK(rs.complex().count(0) == 2);
        CHECK(rs.complex().count(1) == 1);
        const simplex_t e = *rs.complex().simplices(1).begin();
        // vol_1 of the separating segment inside the unit square
        CHECK(rs.edge_inner(e.vertices[0], e, e) == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("two-neuron layer carries the 4/5 Gram angle") {
        auto seq = backward_sequence({two_neuron_layer()}, unit_square(),
                                     quadrant_data(), 3);
        auto enriched = enriched_complex(seq);
        const auto& rs = enriched.structure;
        CHECK(rs.complex().count(3) == 1);
        // find the all-inactive cell and its two proper edges
        index_t v00 = NO_VERTEX;
        for (const auto& [id, pat] : seq.levels[0].source_pattern) {
            if (pat == std::vector<int>{0, 0}) v00 = id;
        }
        REQUIRE(v00 != NO_VERTEX);
        std::vector<simplex_t> proper;
        for (const auto& e : rs.complex().simplices(1)) {
            if ((e.vertices[0] == v00 || e.vertices[1] == v00) &&
                rs.edge_inner(v00, e, e) > 1e-9) {
                proper.push_back(e);
            }
        }
        REQUIRE(proper.size() == 2);
        const double l0 = rs.edge_length(proper[0]);
        const double l1 = rs.edge_length(proper[1]);
        CHECK(rs.edge_inner(v00, proper[0], proper[1]) ==
              doctest::Approx(l0 * l1 * 0.8).epsilon(1e-9));
    }
    SUBCASE("affine enrichment reproduces the network on samples") {
        std::mt19937_64 gen(41);
        std::vector<layer_spec_t> layers = {random_layer(gen, 2, 2),
                                            random_layer(gen, 2, 2)};
        mat_t X = random_points(gen, 200);
        auto seq = backward_sequence(layers, unit_square(), X, 2);
        auto enriched = enriched_complex(seq);
        for (index_t i = 0; i < X.rows(); ++i) {
            const vec_t x = X.row(i).transpose();
            const index_t cell = level_member(seq, 0, x);
            REQUIRE(cell != NO_VERTEX);
            // forward pass
            vec_t z = x;
            for (const auto& l : layers) z = (l.W * z + l.b).cwiseMax(0.0);
            const vec_t via_affine =
                enriched.full_W.at(cell) * x + enriched.full_b.at(cell);
            CHECK((z - via_affine).lpNorm<Eigen::Infinity>() <= 1e-9);
        }
    }
}
