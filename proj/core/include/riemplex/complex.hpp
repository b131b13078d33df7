#pragma once

#include "riemplex/types.hpp"

#include <map>
#include <set>
#include <vector>

namespace riemplex {

/// Oriented simplex in canonical storage: vertex ids strictly increasing.
/// Orientation relative to the canonical order is carried by chain
/// coefficients, not by the simplex itself.
struct simplex_t {
    std::vector<index_t> vertices;

    simplex_t() = default;
    explicit simplex_t(std::vector<index_t> v);

    int dim() const { return static_cast<int>(vertices.size()) - 1; }

    bool contains(const simplex_t& face) const;
    simplex_t face_without(int j) const; // drop the j-th vertex

    auto operator<=>(const simplex_t&) const = default;
};

simplex_t make_simplex(std::initializer_list<index_t> ids);

/// Chain: formal real combination of p-simplices.
struct chain_t {
    int dim = 0;
    std::map<simplex_t, double> coefficients;

    void add(const simplex_t& s, double coeff);
};

/// Cochain: real-valued function on p-simplices.
struct cochain_t {
    int dim = 0;
    std::map<simplex_t, double> values;

    double operator()(const simplex_t& s) const;
};

/// Abstract simplicial complex, closed under taking faces. Immutable in
/// spirit: insert_closed is the only mutator and restores closure.
class simplicial_complex_t {
  public:
    simplicial_complex_t() = default;
    explicit simplicial_complex_t(int max_dim) : max_dim_(max_dim) {}

    /// Insert a simplex together with all of its faces.
    void insert_closed(const simplex_t& s);

    bool contains(const simplex_t& s) const;
    int dim() const;
    int max_dim_cap() const { return max_dim_; }

    const std::set<simplex_t>& simplices(int p) const;
    std::vector<simplex_t> all_simplices() const;
    std::size_t count(int p) const { return simplices(p).size(); }
    std::set<index_t> vertex_ids() const;

    bool operator==(const simplicial_complex_t& o) const {
        return by_dim_ == o.by_dim_;
    }

  private:
    int max_dim_ = 16; // construction cap, not the realized dimension
    std::vector<std::set<simplex_t>> by_dim_;
    static const std::set<simplex_t> empty_set_;
};

// ================================================================
// Operations
// ================================================================

/// Smallest subcomplex of `complex` containing `simplices`.
simplicial_complex_t closure_of(const simplicial_complex_t& complex,
                                const std::vector<simplex_t>& simplices);

/// Closure of every simplex having `sigma` as a face.
simplicial_complex_t closed_star(const simplicial_complex_t& complex,
                                 const simplex_t& sigma);

/// Simplices of the closed star that contain sigma (the Gram index set),
/// in canonical order.
std::vector<simplex_t> star_members(const simplicial_complex_t& complex,
                                    const simplex_t& sigma, int p);

/// Alternating-sign boundary; rejects dimension-0 chains.
chain_t boundary(const chain_t& chain);

/// (δω)(σ) = ω(∂σ) over the (p+1)-simplices of the complex.
cochain_t coboundary(const cochain_t& cochain, const simplicial_complex_t& complex);

/// Signed incidence matrix of ∂_p in canonical simplex order:
/// rows = (p-1)-simplices, columns = p-simplices.
mat_t boundary_matrix(const simplicial_complex_t& complex, int p);

/// Canonically ordered list of the p-simplices (basis order used by every
/// matrix built on the complex).
std::vector<simplex_t> basis_of(const simplicial_complex_t& complex, int p);

} // namespace riemplex
