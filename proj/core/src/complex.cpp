#include "riemplex/complex.hpp"

#include <algorithm>

namespace riemplex {

const std::set<simplex_t> simplicial_complex_t::empty_set_{};

simplex_t::simplex_t(std::vector<index_t> v) : vertices(std::move(v)) {
    std::sort(vertices.begin(), vertices.end());
    auto it = std::adjacent_find(vertices.begin(), vertices.end());
    if (it != vertices.end()) {
        throw input_error_t("simplex: repeated vertex id");
    }
}

simplex_t make_simplex(std::initializer_list<index_t> ids) {
    return simplex_t(std::vector<index_t>(ids));
}

bool simplex_t::contains(const simplex_t& face) const {
    return std::includes(vertices.begin(), vertices.end(), face.vertices.begin(),
                         face.vertices.end());
}

simplex_t simplex_t::face_without(int j) const {
    simplex_t f;
    f.vertices.reserve(vertices.size() - 1);
    for (int i = 0; i < static_cast<int>(vertices.size()); ++i) {
        if (i != j) f.vertices.push_back(vertices[i]);
    }
    return f;
}

void chain_t::add(const simplex_t& s, double coeff) {
    if (s.dim() != dim) throw input_error_t("chain: simplex of wrong dimension");
    auto [it, inserted] = coefficients.try_emplace(s, coeff);
    if (!inserted) {
        it->second += coeff;
        if (it->second == 0.0) coefficients.erase(it);
    }
}

double cochain_t::operator()(const simplex_t& s) const {
    auto it = values.find(s);
    return it == values.end() ? 0.0 : it->second;
}

void simplicial_complex_t::insert_closed(const simplex_t& s) {
    if (s.dim() > max_dim_) {
        throw input_error_t("complex: simplex above the configured dimension cap");
    }
    if (static_cast<int>(by_dim_.size()) <= s.dim()) by_dim_.resize(s.dim() + 1);
    if (!by_dim_[s.dim()].insert(s).second) return; // already present, faces too
    for (int j = 0; j <= s.dim(); ++j) {
        if (s.dim() >= 1) insert_closed(s.face_without(j));
    }
}

bool simplicial_complex_t::contains(const simplex_t& s) const {
    if (s.dim() < 0 || s.dim() >= static_cast<int>(by_dim_.size())) return false;
    return by_dim_[s.dim()].count(s) > 0;
}

int simplicial_complex_t::dim() const {
    for (int p = static_cast<int>(by_dim_.size()) - 1; p >= 0; --p) {
        if (!by_dim_[p].empty()) return p;
    }
    return -1;
}

const std::set<simplex_t>& simplicial_complex_t::simplices(int p) const {
    if (p < 0 || p >= static_cast<int>(by_dim_.size())) return empty_set_;
    return by_dim_[p];
}

std::vector<simplex_t> simplicial_complex_t::all_simplices() const {
    std::vector<simplex_t> out;
    for (const auto& level : by_dim_) out.insert(out.end(), level.begin(), level.end());
    return out;
}

std::set<index_t> simplicial_complex_t::vertex_ids() const {
    std::set<index_t> ids;
    for (const auto& s : simplices(0)) ids.insert(s.vertices[0]);
    return ids;
}

simplicial_complex_t closure_of(const simplicial_complex_t& complex,
                                const std::vector<simplex_t>& simplices) {
    simplicial_complex_t out(complex.max_dim_cap());
    for (const auto& s : simplices) {
        if (!complex.contains(s)) {
            throw input_error_t("closure_of: simplex not in the complex");
        }
        out.insert_closed(s);
    }
    return out;
}

simplicial_complex_t closed_star(const simplicial_complex_t& complex,
                                 const simplex_t& sigma) {
    if (!complex.contains(sigma)) {
        throw input_error_t("closed_star: simplex not in the complex");
    }
    simplicial_complex_t out(complex.max_dim_cap());
    for (int p = sigma.dim(); p <= complex.dim(); ++p) {
        for (const auto& tau : complex.simplices(p)) {
            if (tau.contains(sigma)) out.insert_closed(tau);
        }
    }
    return out;
}

std::vector<simplex_t> star_members(const simplicial_complex_t& complex,
                                    const simplex_t& sigma, int p) {
    if (!complex.contains(sigma)) {
        throw input_error_t("star_members: simplex not in the complex");
    }
    std::vector<simplex_t> out;
    for (const auto& tau : complex.simplices(p)) {
        if (tau.contains(sigma)) out.push_back(tau);
    }
    return out;
}

chain_t boundary(const chain_t& chain) {
    if (chain.dim < 1) {
        throw input_error_t("boundary: defined for chains of dimension >= 1");
    }
    chain_t out;
    out.dim = chain.dim - 1;
    for (const auto& [s, coeff] : chain.coefficients) {
        double sign = 1.0;
        for (int j = 0; j <= s.dim(); ++j) {
            out.add(s.face_without(j), sign * coeff);
            sign = -sign;
        }
    }
    return out;
}

cochain_t coboundary(const cochain_t& cochain, const simplicial_complex_t& complex) {
    if (cochain.dim >= complex.dim()) {
        throw input_error_t("coboundary: cochain dimension at the top of the complex");
    }
    cochain_t out;
    out.dim = cochain.dim + 1;
    for (const auto& s : complex.simplices(cochain.dim + 1)) {
        double v = 0.0;
        double sign = 1.0;
        for (int j = 0; j <= s.dim(); ++j) {
            v += sign * cochain(s.face_without(j));
            sign = -sign;
        }
        out.values[s] = v;
    }
    return out;
}

std::vector<simplex_t> basis_of(const simplicial_complex_t& complex, int p) {
    const auto& set = complex.simplices(p);
    return std::vector<simplex_t>(set.begin(), set.end());
}

mat_t boundary_matrix(const simplicial_complex_t& complex, int p) {
    const auto rows = basis_of(complex, p - 1);
    const auto cols = basis_of(complex, p);
    std::map<simplex_t, int> row_index;
    for (size_t i = 0; i < rows.size(); ++i) row_index[rows[i]] = static_cast<int>(i);

    mat_t B = mat_t::Zero(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) {
        double sign = 1.0;
        for (int k = 0; k <= cols[j].dim(); ++k) {
            B(row_index.at(cols[j].face_without(k)), static_cast<int>(j)) = sign;
            sign = -sign;
        }
    }
    return B;
}

} // namespace riemplex
