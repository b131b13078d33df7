#pragma once

#include "riemplex/complex.hpp"
#include "riemplex/geometry.hpp"
#include "riemplex/rng.hpp"
#include "riemplex/types.hpp"

#include <functional>
#include <map>
#include <optional>
#include <vector>

namespace riemplex {

/// Axis-aligned hyperrectangle.
struct box_t {
    vec_t lo;
    vec_t hi;

    int dim() const { return static_cast<int>(lo.size()); }
    double volume() const;
    bool contains(const vec_t& x, double tol = 0.0) const;
};

/// Bounding domain: the hyperrectangle all cells are clipped to.
struct domain_t {
    box_t bounds;

    int dim() const { return bounds.dim(); }
    double volume() const { return bounds.volume(); }
};

domain_t domain_from_points(const mat_t& X);

/// Local prediction attached to a cell: none, a constant (possibly
/// vector-valued), or an affine map x -> W x + b.
struct predictor_t {
    enum class kind_t { NONE, CONSTANT, AFFINE };
    kind_t kind = kind_t::NONE;
    vec_t constant;
    mat_t W;
    vec_t b;

    vec_t evaluate(const vec_t& x) const;
};

/// Convex cell: an axis-aligned box or a halfspace intersection, always
/// interpreted within the partition domain.
struct cell_geometry_t {
    bool is_box = false;
    box_t box;
    std::vector<geom::halfspace_t> halfspaces;
};

struct partition_cell_t {
    index_t id = 0;
    cell_geometry_t geometry;
    predictor_t predictor;
};

struct dataset_t {
    mat_t X;          // one row per point
    vec_t y;          // responses, empty when absent
    bool has_y = false;

    index_t size() const { return X.rows(); }
};

/// Face shared by >= 2 cells: intersection dimension, Lebesgue measure in
/// that dimension, and the affine carrier. dim -1 marks an empty face.
struct face_t {
    std::vector<index_t> cell_ids;
    int dim = -1;
    double measure = 0.0;
    geom::affine_hull_t carrier;

    bool empty() const { return dim < 0; }
};

class partition_t {
  public:
    partition_t() = default;
    partition_t(domain_t domain, std::vector<partition_cell_t> cells);

    const domain_t& domain() const { return domain_; }
    const std::vector<partition_cell_t>& cells() const { return cells_; }
    const partition_cell_t& cell(index_t id) const;
    bool has_cell(index_t id) const { return by_id_.count(id) > 0; }
    std::size_t size() const { return cells_.size(); }

    /// Chebyshev center, cached: a strictly interior point of the cell.
    const vec_t& interior_point(index_t id) const;

    /// Index of the cell whose closure contains x (lowest id on ties).
    std::optional<index_t> locate(const vec_t& x, double tol = 1e-9) const;

    /// Assign every dataset point to exactly one cell.
    void index_data(const dataset_t& data, double tol = 1e-9);

    /// Same, with a caller-supplied locator (half-open cell semantics);
    /// points the locator rejects are skipped.
    void index_data_with(const dataset_t& data,
                         const std::function<index_t(const vec_t&)>& locator);
    const std::map<index_t, std::vector<index_t>>& data_index() const {
        return data_index_;
    }
    index_t count(index_t cell_id) const;

    /// Constraint system of a cell's closure, clipped to the domain:
    /// halfspace rows plus the effective bounding box.
    void closure_system(index_t id, std::vector<geom::halfspace_t>& rows, vec_t& lo,
                        vec_t& hi) const;

  private:
    domain_t domain_;
    std::vector<partition_cell_t> cells_;
    std::map<index_t, std::size_t> by_id_;
    std::map<index_t, std::vector<index_t>> data_index_;
    mutable std::map<index_t, vec_t> interior_cache_;
};

// ================================================================
// Operations
// ================================================================

struct volume_result_t {
    double value = 0.0;
    double std_error = 0.0; // zero on the exact path
    bool exact = true;
};

struct volume_options_t {
    std::int64_t mc_samples = 1000000;
    std::uint64_t seed = 1;
    int exact_max_dim = 3;
};

volume_result_t cell_volume(const partition_t& partition, index_t cell_id,
                            const volume_options_t& opts = {});

/// Face of the listed cells. Point intersections get measure 1; empty
/// intersections return the empty-face marker.
face_t face_measure(const partition_t& partition, const std::vector<index_t>& cell_ids,
                    double tol = 1e-9);

/// Interior dihedral cosine of `cell` between two of its facets, measured
/// with the first normal pointing into the cell and the second pointing out.
/// nullopt encodes the zero convention: a non-facet face, or facets on
/// parallel hyperplanes that never meet transversally.
std::optional<double> dihedral_cos(const partition_t& partition, index_t cell_id,
                                   const face_t& face_a, const face_t& face_b);

struct nerve_t {
    simplicial_complex_t complex;
    std::map<simplex_t, face_t> faces;
};

/// Nerve of the partition: a simplex for every cell set whose closures
/// intersect (within tol), grown incrementally from pairwise adjacency and
/// capped at max_dim.
nerve_t build_nerve(const partition_t& partition, int max_dim = 3, double tol = 1e-9);

/// Do the closures of the listed cells share a point (within tol)?
bool cells_closure_intersect(const partition_t& partition,
                             const std::vector<index_t>& cell_ids, double tol = 1e-9);

struct partition_check_t {
    std::int64_t samples = 0;
    std::int64_t multi_interior = 0; // in the interior of more than one cell
    std::int64_t uncovered = 0;      // in no closure and off every boundary band
    std::int64_t boundary_band = 0;
};

/// Monte Carlo covering/disjointness check over the domain.
partition_check_t check_partition(const partition_t& partition, std::int64_t n_samples,
                                  rng_t& rng, double tol = 1e-9);

} // namespace riemplex
