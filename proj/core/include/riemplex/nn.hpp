#pragma once

#include "riemplex/metric.hpp"

#include <functional>
#include <map>
#include <vector>

namespace riemplex {

/// One ReLU layer y = max(0, W x + b).
struct layer_spec_t {
    mat_t W;
    vec_t b;

    int in_dim() const { return static_cast<int>(W.cols()); }
    int out_dim() const { return static_cast<int>(W.rows()); }
};

/// 0/1 activation pattern of a layer at a point; ties sit on the inactive
/// closed side.
std::vector<int> activation_pattern(const layer_spec_t& layer, const vec_t& x);

/// The layer map restricted to a pattern region: rows of inactive units
/// zeroed in both W and b.
void pattern_affine(const layer_spec_t& layer, const std::vector<int>& pattern,
                    mat_t& W_alpha, vec_t& b_alpha);

/// Halfspace system of a pattern region (before domain clipping).
std::vector<geom::halfspace_t> pattern_halfspaces(const layer_spec_t& layer,
                                                  const std::vector<int>& pattern);

/// Partition of `domain` into the activation cells witnessed by the data
/// (never the full 2^m arrangement). Cells carry the zeroed-row affine map
/// as their predictor; ids follow the lexicographic pattern order.
partition_t layer_partition(const layer_spec_t& layer, const domain_t& domain,
                            const mat_t& data);

struct refine_result_t {
    partition_t refined;
    std::map<index_t, index_t> vertex_map;            // refined -> next cell
    std::map<index_t, index_t> source_cell;           // refined -> prev cell
    std::map<index_t, std::vector<int>> source_pattern;
};

/// Membership oracle for a partition with half-open cell semantics:
/// returns the cell owning a point, or NO_VERTEX.
using member_fn_t = std::function<index_t(const vec_t&)>;

/// Refined cells C_alpha ∩ rho^{-1}(C_beta), built in H-representation by
/// composing the target constraints with the pattern affine map. Candidate
/// targets are resolved through `next_member` (closed-locate fallback when
/// absent), which keeps rank-deficient pattern maps from duplicating cells
/// whose image sits on shared target boundaries. Every simplex of the
/// refined nerve must map to a simplex of the next nerve; a violation is
/// an internal error.
refine_result_t refine_layer(const partition_t& prev, const layer_spec_t& layer,
                             const partition_t& next, int max_dim = 3,
                             double tol = 1e-9, member_fn_t next_member = {});

struct pullback_result_t {
    double value = 0.0;        // |det W| * vol(preimage ∩ cell): the image volume
    double source_volume = 0.0;
    double std_error = 0.0;
    bool exact = true;
    bool rank_deficient = false; // non-square or singular W: image volume 0
};

/// Image volume of a refined cell through the pattern affine map, via the
/// Jacobian determinant; rank-deficient maps fall back to reporting the
/// source-space volume with a collapsed image.
pullback_result_t pullback_volume(const partition_t& level_partition,
                                  index_t refined_cell, const mat_t& W_alpha,
                                  const volume_options_t& opts = {});

struct nn_level_t {
    int level = 0;   // lives in the coordinates of D_level
    domain_t domain; // bounding box of the data images at this level
    partition_t partition; // refined, data-witnessed
    nerve_t nerve;
    std::map<index_t, index_t> vertex_map; // into the next level's cells
    std::map<index_t, std::vector<int>> source_pattern;
    std::map<index_t, mat_t> affine_W; // layer map restricted to the cell
    std::map<index_t, vec_t> affine_b;
    // (layer pattern, next-level cell) -> refined cell; the half-open
    // membership structure. The deepest level uses target 0 throughout.
    std::map<std::pair<std::vector<int>, index_t>, index_t> lookup;
};

struct layer_sequence_t {
    std::vector<layer_spec_t> layers;
    std::vector<nn_level_t> levels;          // 0 .. L-1
    std::vector<mat_t> data_images;          // per level, rows are points
    std::map<index_t, double> composed_volume; // K^(0) cells, through the net
    std::map<index_t, bool> composed_exact;
    std::vector<std::string> notes;
};

/// Backward construction: the deepest level is partitioned by the last
/// layer; each earlier level refines its own layer partition against the
/// already-refined next level, which keeps every vertex map simplicial.
/// The terminal target is a single output region.
layer_sequence_t backward_sequence(const std::vector<layer_spec_t>& layers,
                                   const domain_t& domain, const mat_t& data,
                                   int max_dim = 3);

struct enriched_complex_t {
    riemannian_structure_t structure; // metric over the K^(0) refined cells
    std::map<index_t, mat_t> full_W;  // whole-network restriction per cell
    std::map<index_t, vec_t> full_b;
};

enriched_complex_t enriched_complex(const layer_sequence_t& seq,
                                    const volume_options_t& vol_opts = {});

/// Forward-pass pattern chain of a point, one pattern per layer.
std::vector<std::vector<int>> pattern_chain(const std::vector<layer_spec_t>& layers,
                                            const vec_t& x);

/// Refined-cell chain of a point under the sequence, resolved through the
/// activation patterns (half-open semantics); NO_VERTEX where the point
/// leaves the witnessed cells.
std::vector<index_t> cell_chain(const layer_sequence_t& seq, const vec_t& x);

/// Half-open membership of a point at one level of the sequence.
index_t level_member(const layer_sequence_t& seq, std::size_t level, const vec_t& z);

} // namespace riemplex
