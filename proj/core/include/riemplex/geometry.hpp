#pragma once

#include "riemplex/rng.hpp"
#include "riemplex/types.hpp"

#include <optional>
#include <vector>

namespace riemplex::geom {

/// Closed halfspace a·x <= c.
struct halfspace_t {
    vec_t a;
    double c = 0.0;
};

/// Affine subspace carrier: {point + basis * t}, basis columns orthonormal.
/// dim == basis.cols(); dim -1 encodes "empty".
struct affine_hull_t {
    vec_t point;
    mat_t basis;
    int dim = -1;
};

// ================================================================
// Dense two-phase simplex, standard form  min c'x  s.t. Ax = b, x >= 0.
// Bland's rule throughout; sized for the small systems that arise from
// cell intersection tests and optimal transport on vertex neighborhoods.
// ================================================================

enum class lp_status_t { OPTIMAL, INFEASIBLE, UNBOUNDED };

struct lp_result_t {
    lp_status_t status = lp_status_t::INFEASIBLE;
    vec_t x;
    double objective = 0.0;
};

lp_result_t solve_lp_standard(const mat_t& A, const vec_t& b, const vec_t& c,
                              double pivot_eps = 1e-11);

// ================================================================
// Polytope queries. All polytopes are halfspace lists, implicitly
// intersected with the bounding box [lo, hi] the caller supplies.
// ================================================================

struct chebyshev_t {
    vec_t center;
    double radius = -INF_MARKER; // largest inscribed ball; negative => infeasible
};

/// Largest ball inside {a·x <= c} ∩ [lo, hi]. radius >= -tol doubles as the
/// closed-feasibility test at slack tol.
chebyshev_t chebyshev_center(const std::vector<halfspace_t>& rows, const vec_t& lo,
                             const vec_t& hi);

bool feasible_closed(const std::vector<halfspace_t>& rows, const vec_t& lo,
                     const vec_t& hi, double tol);

/// All vertices (basic feasible points) of {a·x <= c} ∩ [lo, hi], deduplicated.
/// Enumerates n-subsets of rows; throws internal_error_t past max_combinations.
std::vector<vec_t> enumerate_vertices(const std::vector<halfspace_t>& rows,
                                      const vec_t& lo, const vec_t& hi,
                                      double tol = 1e-9,
                                      std::int64_t max_combinations = 4000000);

/// Affine hull of a point set; rank cut at tol relative to the largest
/// singular value (absolute below unit scale).
affine_hull_t affine_hull(const std::vector<vec_t>& points, double tol = 1e-7);

/// k-dimensional Lebesgue measure of conv(verts), k = affine hull dimension.
/// Returns 1.0 for a single point (counting measure), segment length for
/// k = 1, and recursive facet decomposition beyond. `rows` are the defining
/// halfspaces, used to identify facets for k >= 3.
double polytope_measure(const std::vector<vec_t>& verts,
                        const std::vector<halfspace_t>& rows, double tol = 1e-9);

struct mc_volume_t {
    double volume = 0.0;
    double std_error = 0.0;
    std::int64_t samples = 0;
};

/// Monte Carlo volume of a full-dimensional polytope inside [lo, hi].
mc_volume_t monte_carlo_volume(const std::vector<halfspace_t>& rows, const vec_t& lo,
                               const vec_t& hi, std::int64_t n_samples, rng_t& rng);

/// Unit normal (in ambient space) of a codimension-1 affine hull.
vec_t hull_normal(const affine_hull_t& hull, int ambient_dim);

/// Exact Wasserstein-1 between discrete measures under a ground-cost matrix,
/// solved as a transportation LP.
double wasserstein1(const vec_t& mu, const vec_t& nu, const mat_t& cost);

/// Sign of the permutation sending `from` to `to` (same multiset of distinct
/// values); +1/-1.
int permutation_sign(const std::vector<index_t>& from, const std::vector<index_t>& to);

} // namespace riemplex::geom
