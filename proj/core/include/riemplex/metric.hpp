#pragma once

#include "riemplex/complex.hpp"
#include "riemplex/partition.hpp"
#include "riemplex/types.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>

namespace riemplex {

/// Ensemble augmentation of the inner products: per-dimension weights plus
/// a co-occurrence oracle over cell-id sets and a per-cell tree frequency.
struct ensemble_terms_t {
    std::vector<double> lambdas; // lambdas[p] weights the dimension-p term
    std::function<double(const std::vector<index_t>&)> cooccurrence;
    std::function<double(index_t)> freq;

    double lambda(int p) const {
        return (p >= 0 && p < static_cast<int>(lambdas.size())) ? lambdas[p] : 0.0;
    }
};

/// Riemannian structure on a partition nerve. Vertex weights are cell
/// volumes; edge inner products combine facet measures with interior
/// dihedral cosines; higher inner products are Gram determinants of the
/// level-(dim sigma + 1) products. Values are cached per canonical key and
/// the memo is synchronized, so concurrent readers are safe.
class riemannian_structure_t {
  public:
    riemannian_structure_t() = default;

    static riemannian_structure_t build(partition_t partition, nerve_t nerve,
                                        const volume_options_t& vol_opts = {});

    const simplicial_complex_t& complex() const { return nerve_.complex; }
    const partition_t& partition() const { return partition_; }
    const face_t& face(const simplex_t& s) const;

    /// <v,v>_{v,0} = vol_n(C_v) (+ lambda_0 Freq for ensembles).
    double vertex_inner(index_t v) const;

    /// <e1,e2>_{base,1}; zero when either shared boundary has dimension
    /// below n-1.
    double edge_inner(index_t base, const simplex_t& e1, const simplex_t& e2) const;

    /// Gram-determinant inner product of p-simplices rho1, rho2 >= sigma.
    double higher_inner(const simplex_t& sigma, const simplex_t& rho1,
                        const simplex_t& rho2) const;

    /// Gram matrix over the p-simplices of the closed star that contain
    /// sigma, in canonical order. Empty star at p gives a 0x0 matrix.
    mat_t star_gram(const simplex_t& sigma, int p) const;
    std::vector<simplex_t> star_basis(const simplex_t& sigma, int p) const;

    /// Condition number of the vertex-level edge Gram; +inf marker when
    /// singular (min eigenvalue below 1e-12 of the max).
    double gram_condition(index_t v) const;
    bool gram_singular(index_t v) const;

    /// Metric edge length sqrt(<e,e>).
    double edge_length(const simplex_t& e) const;

    void set_ensemble(ensemble_terms_t terms) { ensemble_ = std::move(terms); }
    bool has_ensemble() const { return ensemble_.has_value(); }

    /// Simplices whose face carriers degenerated past the stated
    /// conventions; reported, never silently patched.
    const std::set<simplex_t>& degenerate_flags() const { return degenerate_; }

  private:
    double level_inner(const simplex_t& sigma, index_t v, index_t vp) const;
    double level_cos(const simplex_t& sigma, const face_t& fa, const face_t& fb) const;

    partition_t partition_;
    nerve_t nerve_;
    std::map<index_t, double> cell_volume_;
    std::optional<ensemble_terms_t> ensemble_;

    mutable std::unique_ptr<std::mutex> memo_mutex_ = std::make_unique<std::mutex>();
    mutable std::map<std::tuple<simplex_t, index_t, index_t>, double> level_cache_;
    mutable std::map<std::pair<simplex_t, int>, mat_t> gram_cache_;
    mutable std::set<simplex_t> degenerate_;
};

/// vol_p of a simplex from its pairwise edge lengths via the Cayley-Menger
/// determinant. Throws input_error_t when the determinant sign says the
/// lengths are not embeddable.
double simplex_volume_cayley_menger(const mat_t& edge_lengths);

} // namespace riemplex
