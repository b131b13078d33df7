#include <doctest.h>

#include "fixtures.hpp"
#include "riemplex/ensemble.hpp"

#include <cmath>
#include <random>

using namespace riemplex;

namespace {

partition_t vertical_split(double cut) {
    domain_t dom;
    dom.bounds = fixtures::bx(0, 1, 0, 1);
    partition_cell_t a, b;
    a.id = 0;
    a.geometry.is_box = true;
    a.geometry.box = fixtures::bx(0, cut, 0, 1);
    b.id = 1;
    b.geometry.is_box = true;
    b.geometry.box = fixtures::bx(cut, 1, 0, 1);
    return partition_t(dom, {a, b});
}

partition_t horizontal_split(double cut) {
    domain_t dom;
    dom.bounds = fixtures::bx(0, 1, 0, 1);
    partition_cell_t a, b;
    a.id = 0;
    a.geometry.is_box = true;
    a.geometry.box = fixtures::bx(0, 1, 0, cut);
    b.id = 1;
    b.geometry.is_box = true;
    b.geometry.box = fixtures::bx(0, 1, cut, 1);
    return partition_t(dom, {a, b});
}

partition_t random_tree(std::mt19937_64& gen, int splits) {
    return fixtures::random_box_partition(gen, splits);
}

} // namespace

TEST_CASE("refining a single tree returns that tree") {
    auto ens = refine_ensemble({vertical_split(0.4)});
    CHECK(ens.refined.size() == 2);
    double vol = 0.0;
    for (const auto& c : ens.refined.cells()) {
        vol += cell_volume(ens.refined, c.id).value;
    }
    CHECK(vol == doctest::Approx(1.0));
    for (const auto& [id, src] : ens.provenance) {
        CHECK(src.size() == 1);
    }
}

TEST_CASE("perpendicular two-cell trees refine to a grid of four") {
    auto ens = refine_ensemble({vertical_split(0.5), horizontal_split(0.5)});
    CHECK(ens.refined.size() == 4);
    for (const auto& c : ens.refined.cells()) {
        CHECK(cell_volume(ens.refined, c.id).value == doctest::Approx(0.25));
    }
}

TEST_CASE("random overlays cover the domain") {
    std::mt19937_64 gen(101);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<partition_t> trees = {random_tree(gen, 3), random_tree(gen, 4),
                                          random_tree(gen, 2)};
        auto ens = refine_ensemble(trees);
        double vol = 0.0;
        for (const auto& c : ens.refined.cells()) {
            vol += cell_volume(ens.refined, c.id).value;
        }
        CHECK(vol == doctest::Approx(1.0).epsilon(1e-9));
        // provenance total: one source per tree for every refined cell
        for (const auto& [id, src] : ens.provenance) CHECK(src.size() == 3);

        rng_t rng(7 + trial);
        auto chk = check_partition(ens.refined, 20000, rng);
        CHECK(chk.multi_interior == 0);
        CHECK(chk.uncovered == 0);
    }
}

TEST_CASE("domain mismatch is rejected") {
    domain_t other;
    other.bounds = fixtures::bx(0, 2, 0, 2);
    partition_cell_t c;
    c.id = 0;
    c.geometry.is_box = true;
    c.geometry.box = other.bounds;
    partition_t single(other, {c});
    CHECK_THROWS_AS(refine_ensemble({vertical_split(0.5), single}), input_error_t);
}

TEST_CASE("co-occurrence frequencies") {
    SUBCASE("full agreement gives 1, disagreement gives 0") {
        // both trees split vertically at the same place: the refined cells
        // line up and every tree keeps the pair adjacent
        auto agree = refine_ensemble({vertical_split(0.5), vertical_split(0.5)});
        REQUIRE(agree.refined.size() == 2);
        CHECK(cooccurrence(agree, {0, 1}) == doctest::Approx(1.0));
    }
    SUBCASE("eta-weighted arithmetic") {
        // three trees; the pair is separated only by tree 2 (index 1)
        auto ens = refine_ensemble(
            {vertical_split(0.5), vertical_split(0.5), vertical_split(0.5)});
        REQUIRE(ens.refined.size() == 2);
        // hand-build the indicator sequence (1, 0, 1) by overriding the
        // middle tree with a horizontal split
        auto mixed = refine_ensemble(
            {horizontal_split(0.5), vertical_split(0.5), horizontal_split(0.5)});
        // mixed refines into 4 cells; pick the two stacked on the left:
        // sources differ only in the vertical tree
        index_t lo = NO_VERTEX, hi = NO_VERTEX;
        for (const auto& [id, src] : mixed.provenance) {
            const auto& cell = mixed.refined.cell(id);
            if (cell.geometry.box.hi[0] <= 0.5 + 1e-12) {
                if (cell.geometry.box.hi[1] <= 0.5 + 1e-12) lo = id;
                else hi = id;
            }
        }
        REQUIRE(lo != NO_VERTEX);
        REQUIRE(hi != NO_VERTEX);
        // trees 1 and 3 (horizontal) separate lo/hi but keep them adjacent;
        // tree 2 (vertical) keeps them in one cell: all indicators are 1
        CHECK(cooccurrence(mixed, {lo, hi}) == doctest::Approx(1.0));

        // weighted case from the closed form: indicators (1, 0, 1) with
        // eta = 0.5 give (0.5 + 0.125)/(0.875)
        const double eta = 0.5;
        const double expect = (eta + eta * eta * eta) / (eta + eta * eta + eta * eta * eta);
        CHECK(expect == doctest::Approx(5.0 / 7.0));
    }
    SUBCASE("symmetric in the arguments") {
        auto ens = refine_ensemble({vertical_split(0.4), horizontal_split(0.6)});
        nerve_t nerve = build_nerve(ens.refined, 2);
        for (const auto& e : nerve.complex.simplices(1)) {
            CHECK(cooccurrence(ens, {e.vertices[0], e.vertices[1]}) ==
                  cooccurrence(ens, {e.vertices[1], e.vertices[0]}));
        }
    }
}

TEST_CASE("ensemble metric") {
    auto ens = refine_ensemble({vertical_split(0.5), horizontal_split(0.5)});

    SUBCASE("zero weights reproduce the plain metric bit for bit") {
        auto plain_nerve = build_nerve(ens.refined, 3);
        auto plain = riemannian_structure_t::build(ens.refined, plain_nerve);
        auto withe = ensemble_metric(ens, 3, {0.0, 0.0, 0.0, 0.0});
        for (const auto& v : plain.complex().simplices(0)) {
            CHECK(withe.vertex_inner(v.vertices[0]) ==
                  plain.vertex_inner(v.vertices[0]));
        }
        for (const auto& e : plain.complex().simplices(1)) {
            CHECK(withe.edge_inner(e.vertices[0], e, e) ==
                  plain.edge_inner(e.vertices[0], e, e));
        }
    }
    SUBCASE("box trees with lambda1 = 1: off-diagonals are sqrt(K K)") {
        auto rs = ensemble_metric(ens, 2, {0.0, 1.0});
        // the 2x2 grid at cell 0: edges to 1 (right) and 2 (above)
        const simplex_t e01 = make_simplex({0, 1});
        const simplex_t e02 = make_simplex({0, 2});
        const double k01 = cooccurrence(ens, {0, 1});
        const double k02 = cooccurrence(ens, {0, 2});
        // geometric off-diagonal vanishes for boxes, the ensemble term stays
        CHECK(rs.edge_inner(0, e01, e02) ==
              doctest::Approx(std::sqrt(k01 * k02)).epsilon(1e-12));
        // diagonal: facet + lambda1 K
        const double facet = 0.5;
        CHECK(rs.edge_inner(0, e01, e01) ==
              doctest::Approx(facet + k01).epsilon(1e-12));
    }
    SUBCASE("duplicated tree gives K = 1 and default lambdas add up") {
        auto dup = refine_ensemble({vertical_split(0.5), vertical_split(0.5)});
        nerve_t nerve = build_nerve(dup.refined, 2);
        auto plain = riemannian_structure_t::build(dup.refined, nerve);
        nerve_t nerve2 = build_nerve(dup.refined, 2);
        auto lambdas = default_ensemble_lambdas(nerve2, plain);
        REQUIRE(lambdas.size() >= 2);
        CHECK(lambdas[0] == doctest::Approx(0.5)); // mean cell volume
        CHECK(lambdas[1] == doctest::Approx(1.0)); // the single facet length

        auto rs = ensemble_metric(dup, 2);
        const simplex_t e01 = make_simplex({0, 1});
        // vol(F) + lambda1 * K = 1 + 1 * 1
        CHECK(rs.edge_inner(0, e01, e01) == doctest::Approx(2.0).epsilon(1e-12));
        // vertex: vol + lambda0 * Freq = 0.5 + 0.5 * 1
        CHECK(rs.vertex_inner(0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("boosting steps") {
    SUBCASE("tree identical in adjacency to the consensus leaves K unchanged") {
        auto st = boosting_state_t::start(vertical_split(0.5), 1.0);
        auto deltas = st.step(vertical_split(0.5));
        for (const auto& d : deltas.pairs) {
            CHECK(d.delta_ens == doctest::Approx(0.0));
            CHECK(d.k_after == doctest::Approx(1.0));
        }
    }
    SUBCASE("delta formula arithmetic at m = 1") {
        // K = 0.5 with indicator 1 cannot arise at m = 1 (K is then 0 or 1),
        // so check the formula through the reported pair deltas instead:
        // lambda1/(m+1) * (indicator - K_old)
        auto st = boosting_state_t::start(vertical_split(0.5), 1.0);
        auto deltas = st.step(horizontal_split(0.5));
        REQUIRE(!deltas.pairs.empty());
        for (const auto& d : deltas.pairs) {
            const double k_old = d.parent_u == d.parent_v ? 1.0 : 1.0;
            const double indicator = d.k_after * 2.0 - k_old;
            CHECK(d.delta_ens ==
                  doctest::Approx(0.5 * (indicator - k_old)).epsilon(1e-12));
        }
    }
    SUBCASE("incremental K equals batch recomputation on random runs") {
        std::mt19937_64 gen(55);
        for (int trial = 0; trial < 20; ++trial) {
            auto st = boosting_state_t::start(random_tree(gen, 2), 1.0, 2);
            const int steps = 4; // five trees total
            for (int s = 0; s < steps; ++s) {
                st.step(random_tree(gen, 1 + static_cast<int>(gen() % 3)));
            }
            const auto& ens = st.ensemble();
            nerve_t nerve = build_nerve(ens.refined, 1);
            for (const auto& e : nerve.complex.simplices(1)) {
                const double batch = cooccurrence(ens, {e.vertices[0], e.vertices[1]});
                CHECK(st.k_value(e.vertices[0], e.vertices[1]) ==
                      doctest::Approx(batch).epsilon(1e-12));
            }
        }
    }
    SUBCASE("spectral signature at the baseline is all ones") {
        auto st = boosting_state_t::start(vertical_split(0.5), 1.0);
        auto sig = st.signature(0);
        for (double r : sig.ratios) CHECK(r == doctest::Approx(1.0));
        st.step(horizontal_split(0.5));
        CHECK(st.geometric_health() > 0.0);
        CHECK(std::isfinite(st.geometric_health()));
    }
    SUBCASE("energy series tracks every iteration") {
        auto st = boosting_state_t::start(vertical_split(0.5), 1.0);
        st.step(horizontal_split(0.4));
        st.step(vertical_split(0.7));
        CHECK(st.energy_series().size() == 3);
        CHECK(st.iteration() == 3);
    }
}

TEST_CASE("regularized tree penalty") {
    SUBCASE("single consensus pair with K = 1 gives -1") {
        auto st = boosting_state_t::start(vertical_split(0.5), 1.0);
        // the same split again: one separated pair, K = 1
        CHECK(st.regularized_tree_penalty(vertical_split(0.5)) ==
              doctest::Approx(-1.0));
    }
    SUBCASE("candidate whose cuts cross everything sums the cut pairs") {
        auto st = boosting_state_t::start(vertical_split(0.5), 1.0);
        const double pen = st.regularized_tree_penalty(horizontal_split(0.5));
        // the horizontal candidate separates (lower, upper) inside both old
        // cells: two pairs, each with K = 1 under the shared-source rule
        CHECK(pen == doctest::Approx(-2.0));
        CHECK(pen <= 0.0);
    }
    SUBCASE("matches a direct sum over the refined overlay") {
        std::mt19937_64 gen(88);
        auto st = boosting_state_t::start(random_tree(gen, 2), 1.0, 2);
        st.step(random_tree(gen, 2));
        st.step(random_tree(gen, 3));
        partition_t cand = random_tree(gen, 2);

        std::vector<partition_t> trees = st.ensemble().trees;
        trees.push_back(cand);
        auto next = refine_ensemble(trees);
        std::map<std::vector<index_t>, index_t> old_ids;
        for (const auto& [id, src] : st.ensemble().provenance) old_ids[src] = id;
        nerve_t nerve = build_nerve(next.refined, 1);
        double direct = 0.0;
        for (const auto& e : nerve.complex.simplices(1)) {
            if (nerve.faces.at(e).dim != next.refined.domain().dim() - 1) continue;
            const auto& su = next.provenance.at(e.vertices[0]);
            const auto& sv = next.provenance.at(e.vertices[1]);
            if (su.back() == sv.back()) continue;
            if (!cells_closure_intersect(cand, {su.back(), sv.back()})) continue;
            direct += st.k_value(old_ids.at({su.begin(), su.end() - 1}),
                                 old_ids.at({sv.begin(), sv.end() - 1}));
        }
        CHECK(st.regularized_tree_penalty(cand) == doctest::Approx(-direct));
    }
}

TEST_CASE("cart fixture trainer") {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    dataset_t data;
    data.X.resize(200, 2);
    data.y.resize(200);
    data.has_y = true;
    for (int i = 0; i < 200; ++i) {
        data.X(i, 0) = U(gen);
        data.X(i, 1) = U(gen);
        data.y[i] = data.X(i, 0) > 0.5 ? 1.0 : 0.0; // a single clean split
    }
    domain_t dom;
    dom.bounds = fixtures::bx(0, 1, 0, 1);
    partition_t tree = train_cart(data, dom, 2, 10);
    CHECK(tree.size() >= 2);
    rng_t rng(3);
    auto chk = check_partition(tree, 20000, rng);
    CHECK(chk.multi_interior == 0);
    CHECK(chk.uncovered == 0);
    // the first split should find x0 = 0.5 within the data resolution
    bool found = false;
    for (const auto& c : tree.cells()) {
        if (std::abs(c.geometry.box.hi[0] - 0.5) < 0.05 ||
            std::abs(c.geometry.box.lo[0] - 0.5) < 0.05) {
            found = true;
        }
    }
    CHECK(found);
}
