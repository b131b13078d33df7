#include <doctest.h>

#include "riemplex/complex.hpp"

#include <random>

using namespace riemplex;

namespace {

simplicial_complex_t random_complex(std::mt19937_64& gen, int n_vertices, int max_dim) {
    simplicial_complex_t K(max_dim);
    std::uniform_int_distribution<index_t> pick(0, n_vertices - 1);
    std::uniform_int_distribution<int> dim_dist(0, max_dim);
    for (index_t v = 0; v < n_vertices; ++v) K.insert_closed(simplex_t({v}));
    const int n_top = 3 + static_cast<int>(gen() % 6);
    for (int t = 0; t < n_top; ++t) {
        const int d = dim_dist(gen);
        std::set<index_t> vs;
        while (static_cast<int>(vs.size()) < d + 1) vs.insert(pick(gen));
        K.insert_closed(simplex_t(std::vector<index_t>(vs.begin(), vs.end())));
    }
    return K;
}

cochain_t random_cochain(std::mt19937_64& gen, const simplicial_complex_t& K, int p) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    cochain_t w;
    w.dim = p;
    for (const auto& s : K.simplices(p)) w.values[s] = U(gen);
    return w;
}

double pair(const cochain_t& w, const chain_t& c) {
    double v = 0.0;
    for (const auto& [s, coeff] : c.coefficients) v += coeff * w(s);
    return v;
}

} // namespace

TEST_CASE("closure of a triangle holds 1 triangle, 3 edges, 3 vertices") {
    simplicial_complex_t K;
    K.insert_closed(make_simplex({0, 1, 2}));
    auto C = closure_of(K, {make_simplex({0, 1, 2})});
    CHECK(C.count(2) == 1);
    CHECK(C.count(1) == 3);
    CHECK(C.count(0) == 3);
}

TEST_CASE("closure of the empty set is empty") {
    simplicial_complex_t K;
    K.insert_closed(make_simplex({0, 1}));
    auto C = closure_of(K, {});
    CHECK(C.dim() == -1);
}

TEST_CASE("closure of all top simplices recovers the complex") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto K = random_complex(gen, 8, 3);
        // top simplices: those with no strict coface
        std::vector<simplex_t> tops;
        for (const auto& s : K.all_simplices()) {
            bool has_coface = false;
            for (const auto& t : K.simplices(s.dim() + 1)) {
                if (t.contains(s)) {
                    has_coface = true;
                    break;
                }
            }
            if (!has_coface) tops.push_back(s);
        }
        CHECK(closure_of(K, tops) == K);
    }
}

TEST_CASE("closure rejects foreign simplices") {
    simplicial_complex_t K;
    K.insert_closed(make_simplex({0, 1}));
    CHECK_THROWS_AS(closure_of(K, {make_simplex({5})}), input_error_t);
}

TEST_CASE("closed star examples") {
    SUBCASE("vertex of an isolated edge") {
        simplicial_complex_t K;
        K.insert_closed(make_simplex({0, 1}));
        auto S = closed_star(K, make_simplex({0}));
        CHECK(S.count(0) == 2);
        CHECK(S.count(1) == 1);
    }
    SUBCASE("center of a fan of three triangles is the whole fan") {
        simplicial_complex_t K;
        K.insert_closed(make_simplex({0, 1, 2}));
        K.insert_closed(make_simplex({0, 2, 3}));
        K.insert_closed(make_simplex({0, 3, 4}));
        auto S = closed_star(K, make_simplex({0}));
        // oracle: brute-force membership scan
        simplicial_complex_t expect;
        for (const auto& t : K.all_simplices()) {
            if (t.contains(make_simplex({0}))) expect.insert_closed(t);
        }
        CHECK(S == expect);
        CHECK(S == K); // the fan is its center's star
    }
    SUBCASE("top simplex star is its closure") {
        simplicial_complex_t K;
        K.insert_closed(make_simplex({0, 1, 2}));
        auto S = closed_star(K, make_simplex({0, 1, 2}));
        CHECK(S == closure_of(K, {make_simplex({0, 1, 2})}));
    }
}

TEST_CASE("boundary of an oriented triangle") {
    chain_t c;
    c.dim = 2;
    c.add(make_simplex({0, 1, 2}), 1.0);
    chain_t b = boundary(c);
    CHECK(b.coefficients.at(make_simplex({1, 2})) == 1.0);
    CHECK(b.coefficients.at(make_simplex({0, 2})) == -1.0);
    CHECK(b.coefficients.at(make_simplex({0, 1})) == 1.0);

    chain_t bb = boundary(b);
    CHECK(bb.coefficients.empty());
}

TEST_CASE("boundary rejects dimension-0 chains, passes zero chains through") {
    chain_t z;
    z.dim = 0;
    z.add(make_simplex({0}), 1.0);
    CHECK_THROWS_AS(boundary(z), input_error_t);

    chain_t zero;
    zero.dim = 3;
    CHECK(boundary(zero).coefficients.empty());
}

TEST_CASE("boundary of boundary vanishes exactly on integer chains up to dim 4") {
    std::mt19937_64 gen(23);
    std::uniform_int_distribution<int> Z(-3, 3);
    for (int trial = 0; trial < 30; ++trial) {
        auto K = random_complex(gen, 10, 4);
        for (int p = 2; p <= K.dim(); ++p) {
            chain_t c;
            c.dim = p;
            for (const auto& s : K.simplices(p)) c.add(s, static_cast<double>(Z(gen)));
            chain_t bb = boundary(boundary(c));
            for (const auto& [s, v] : bb.coefficients) CHECK(v == 0.0);
        }
    }
}

TEST_CASE("coboundary basics") {
    simplicial_complex_t K;
    K.insert_closed(make_simplex({0, 1}));

    SUBCASE("constants are closed") {
        cochain_t w;
        w.dim = 0;
        w.values[make_simplex({0})] = 3.0;
        w.values[make_simplex({1})] = 3.0;
        auto dw = coboundary(w, K);
        CHECK(dw(make_simplex({0, 1})) == 0.0);
    }
    SUBCASE("edge difference") {
        cochain_t w;
        w.dim = 0;
        w.values[make_simplex({0})] = 2.0; // a
        w.values[make_simplex({1})] = 7.0; // b
        auto dw = coboundary(w, K);
        CHECK(dw(make_simplex({0, 1})) == 5.0); // b - a
    }
}

TEST_CASE("stokes pairing and delta-delta on random complexes") {
    std::mt19937_64 gen(37);
    for (int trial = 0; trial < 20; ++trial) {
        auto K = random_complex(gen, 9, 3);
        if (K.dim() < 1) continue;
        for (int rep = 0; rep < 5; ++rep) {
            for (int p = 0; p < K.dim(); ++p) {
                auto w = random_cochain(gen, K, p);
                auto dw = coboundary(w, K);
                // <dw, s> == <w, boundary(s)> for every (p+1)-simplex
                for (const auto& s : K.simplices(p + 1)) {
                    chain_t c;
                    c.dim = p + 1;
                    c.add(s, 1.0);
                    CHECK(std::abs(dw(s) - pair(w, boundary(c))) <= 1e-12);
                }
                if (p + 1 < K.dim()) {
                    // machine precision on random real cochains
                    auto ddw = coboundary(dw, K);
                    for (const auto& [s, v] : ddw.values) CHECK(std::abs(v) <= 1e-12);
                }
            }
        }
    }
}

TEST_CASE("closure invariant survives random insertion") {
    std::mt19937_64 gen(53);
    for (int trial = 0; trial < 20; ++trial) {
        auto K = random_complex(gen, 8, 4);
        for (const auto& s : K.all_simplices()) {
            for (int j = 0; j <= s.dim(); ++j) {
                if (s.dim() >= 1) CHECK(K.contains(s.face_without(j)));
            }
        }
    }
}

TEST_CASE("boundary matrix columns compose to zero") {
    std::mt19937_64 gen(71);
    auto K = random_complex(gen, 8, 4);
    for (int p = 2; p <= K.dim(); ++p) {
        mat_t B1 = boundary_matrix(K, p - 1);
        mat_t B2 = boundary_matrix(K, p);
        if (B1.size() == 0 || B2.size() == 0) continue;
        CHECK((B1 * B2).lpNorm<Eigen::Infinity>() == 0.0);
    }
}
