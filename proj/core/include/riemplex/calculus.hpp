#pragma once

#include "riemplex/metric.hpp"

#include <string>
#include <vector>

namespace riemplex {

/// One regularization term: dimension p, Laplacian power k, weight lambda.
struct spline_term_t {
    int p = 0;
    int k = 1;
    double lambda = 0.0;
};

struct spline_problem_t {
    vec_t y; // observations over the canonical vertex basis
    std::vector<spline_term_t> penalties;
};

/// Matrix realizations of the discrete calculus over a fixed Riemannian
/// structure: signed boundary operators, per-dimension weight matrices
/// assembled from the metric Grams (with a PSD clip for operator use),
/// Whitney lift matrices, and the Hodge quadratic forms built from them.
///
/// Conventions, fixed once for the whole module:
///  - cochains in canonical simplex order; delta_p = B_{p+1}^T;
///  - the p-cochain inner product is W_p, the vertex inner product W_0;
///  - adjoints are metric adjoints, so kappa_p^* = W_0^{-1} kappa_p^T W_p;
///  - lift terms act on the W_0-centered part of a vertex function, which
///    puts constants in the kernel of every penalty.
class hodge_operators_t {
  public:
    static hodge_operators_t build(const riemannian_structure_t& rs);

    int dim() const { return static_cast<int>(bases_.size()) - 1; }
    const std::vector<simplex_t>& basis(int p) const;
    index_t vertex_position(index_t vertex_id) const;

    const mat_t& boundary_op(int p) const; // B_p, p in [1, dim]
    const mat_t& weight(int p) const;      // entrywise W_p from the metric
    const mat_t& weight_psd(int p) const;  // eigenvalue-clipped W_p

    /// Quadratic Hodge form A_p = B_{p+1} W_{p+1} B_{p+1}^T
    ///                          + W_p B_p^T pinv(W_{p-1}) B_p W_p.
    const mat_t& laplacian_form(int p) const;

    /// A_p (pinv(W_p) A_p)^{k-1}: the matrix of <omega, L_p^k omega>_p.
    mat_t laplacian_power_form(int p, int k) const;

    /// Eigenvalues: graph Laplacian spectrum at p = 0, W_p-orthonormalized
    /// Hodge spectrum at p >= 1.
    vec_t spectrum(int p) const;

    /// Whitney lift matrix K_p: (K_p u)(sigma) = vol_p(sigma)/(p+1) sum u(v).
    const mat_t& whitney_matrix(int p) const;

    /// W_0-orthogonal projection off constants.
    const mat_t& centering() const { return centering_; }

    double simplex_volume(const simplex_t& s) const;
    const riemannian_structure_t& structure() const { return *structure_; }
    const mat_t& graph_laplacian_matrix() const { return graph_laplacian_; }

    /// Largest negative eigenvalue clipped from any W_p (0 when all Grams
    /// were PSD as assembled).
    double psd_clip_magnitude() const { return clip_magnitude_; }

    /// Simplices whose metric edge lengths failed the Cayley-Menger
    /// embeddability check; their lifts are zero and reported here.
    const std::set<simplex_t>& whitney_flagged() const { return whitney_flagged_; }

  private:
    const riemannian_structure_t* structure_ = nullptr;
    std::vector<std::vector<simplex_t>> bases_;
    std::vector<mat_t> boundary_;   // index p, valid for p >= 1
    std::vector<mat_t> weight_raw_;
    std::vector<mat_t> weight_psd_;
    std::vector<mat_t> weight_pinv_;
    std::vector<mat_t> lap_form_;
    std::vector<mat_t> whitney_;
    mat_t graph_laplacian_;
    mat_t centering_;
    double clip_magnitude_ = 0.0;
    std::set<simplex_t> whitney_flagged_;
};

/// D - A with A_ij the edge self-inner product (facet volume, plus the
/// ensemble term when the structure carries one).
mat_t graph_laplacian(const riemannian_structure_t& rs);

/// Whitney/harmonic lift of a vertex function to a p-cochain.
cochain_t whitney_lift(const vec_t& u, int p, const hodge_operators_t& ops);

/// Lift on a single simplex given its metric edge lengths: the
/// volume-weighted barycentric average of the vertex values.
double whitney_lift_value(const mat_t& edge_lengths, const vec_t& u);

/// L_ext u = Delta_0 u + sum_p alpha_p kappa_p^* L_p kappa_p (centered u).
/// alphas[i] weights dimension i+1.
mat_t extended_laplacian_matrix(const std::vector<double>& alphas,
                                const hodge_operators_t& ops);
vec_t extended_laplacian_apply(const vec_t& u, const std::vector<double>& alphas,
                               const hodge_operators_t& ops);

/// Penalty matrix sum lambda_pk P^T K_p^T A_p^{(k)} K_p P (symmetric PSD).
mat_t spline_penalty_matrix(const std::vector<spline_term_t>& terms,
                            const hodge_operators_t& ops);

/// Minimizer of |y - u|^2 + sum lambda_pk <kappa_p Pu, L_p^k kappa_p Pu>_p.
vec_t solve_simplicial_spline(const spline_problem_t& problem,
                              const hodge_operators_t& ops);
double spline_energy(const spline_problem_t& problem, const hodge_operators_t& ops,
                     const vec_t& u);

struct spectrum_snapshot_t {
    std::vector<vec_t> by_dim; // ascending eigenvalues per dimension
};
spectrum_snapshot_t spectrum_of(const hodge_operators_t& ops);

struct spectral_signature_t {
    std::vector<int> dims;          // dimensions included
    std::vector<double> ratios;     // smallest-positive-eigenvalue ratios
    double geometric_health = 1.0;  // min ratio over included dims
    std::vector<std::string> warnings;
};

/// Ratios of the smallest positive eigenvalues against the baseline
/// iteration; dimensions whose baseline eigenvalue vanishes are excluded
/// with a warning.
spectral_signature_t spectral_signature(const std::vector<spectrum_snapshot_t>& series,
                                        std::size_t at, std::size_t baseline = 0);

} // namespace riemplex
