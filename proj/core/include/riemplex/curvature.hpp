#pragma once

#include "riemplex/density.hpp"

#include <array>
#include <optional>

namespace riemplex {

struct curvature_config_t {
    double dbar_override = 0.0; // <= 0: mean density-weighted edge length
    double lbar_override = 0.0; // <= 0: mean cell diameter
    double eps_mean = 1e-9;     // mean-component regularizer
    double eps_denom = 1e-12;   // functional-mean indeterminacy flag
    double eps_cos = 1e-12;     // cosine clamp in the angle curvature
    double sphere_tol = 1e-9;   // membership band for discrete spheres
    double tau = 1.0;           // Huber transition
    double beta = 0.5;          // direct-component scale, affine predictors
    double gamma = 0.5;         // direct-component scale, constant predictors
    std::array<double, 4> alpha = {0.25, 0.25, 0.25, 0.25}; // functional weights
    double lambda_edge = 1.0;   // edge-term weight in R(f) and E
};

/// Shared evaluation state: the Riemannian structure, the density-weighted
/// graph, vertex/edge densities, and a memo of single-source geodesics.
class curvature_context_t {
  public:
    curvature_context_t(const riemannian_structure_t& rs,
                        const weighted_graph_t& graph, const density_field_t& field,
                        curvature_config_t config = {});

    const riemannian_structure_t& structure() const { return *rs_; }
    const weighted_graph_t& graph() const { return *graph_; }
    const density_field_t& field() const { return *field_; }
    const curvature_config_t& config() const { return config_; }

    /// Geodesic density-weighted distance (cached Dijkstra runs).
    double distance(index_t v, index_t w) const;
    const geodesic_result_t& geodesics_from(index_t v) const;
    std::vector<index_t> neighbors(index_t v) const; // positive-length edges
    double mean_edge_dist() const;                   // default d-bar
    double mean_cell_diameter() const;               // default l-bar

  private:
    const riemannian_structure_t* rs_;
    const weighted_graph_t* graph_;
    const density_field_t* field_;
    curvature_config_t config_;
    std::map<index_t, std::vector<std::pair<index_t, double>>> adj_;
    mutable std::map<index_t, geodesic_result_t> geo_cache_;
    mutable double dbar_ = -1.0;
    mutable double lbar_ = -1.0;
};

// ================================================================
// Vertex curvatures
// ================================================================

/// Ball-growth curvature (N_r - N_r^flat)/N_r^flat with the flat reference
/// rho(v) V_n r^n.
double ball_curvature(const curvature_context_t& ctx, index_t v, double r);

/// 1 - (sum of neighbor distances)/(deg * dbar).
double dist_curvature(const curvature_context_t& ctx, index_t v);

struct spray_result_t {
    double theta_angle = 0.0;
    double theta_spread = 0.0;
    double kappa = 0.0;
};

/// Geodesic spray analysis over the discrete sphere at radius r; nullopt
/// when the sphere is empty. Pair sums run over all ordered pairs
/// including the diagonal.
std::optional<spray_result_t> spray_curvature(const curvature_context_t& ctx,
                                              index_t v, double r);

/// Mean triangle-inequality slack over all ordered neighbor pairs
/// (diagonal pairs contribute exactly 1).
double tri_curvature(const curvature_context_t& ctx, index_t v);

/// Path-complexity curvature J_r(v) * lbar - 1; nullopt on an empty sphere.
std::optional<double> path_curvature(const curvature_context_t& ctx, index_t v,
                                     double r);

/// Weighted-Laplacian-over-deviation ratio; nullopt flags the 0/0 case.
std::optional<double> functional_mean_curvature(const curvature_context_t& ctx,
                                                const std::map<index_t, double>& f,
                                                index_t v);

/// Log-odds aggregation of pairwise gradient alignment around v.
double functional_angle_curvature(const curvature_context_t& ctx,
                                  const std::map<index_t, double>& f, index_t v);

/// Variance of directional derivatives over the star boundary.
double functional_level_curvature(const curvature_context_t& ctx,
                                  const std::map<index_t, double>& f, index_t v);

// ================================================================
// Edge (Ricci) curvatures
// ================================================================

/// Coarse Ricci curvature 1 - W1(mu_v, mu_w)/d(v,w), neighbor measures
/// weighted by metric edge lengths, transport cost the geodesic metric.
double ricci_geometric(const curvature_context_t& ctx, index_t v, index_t w);

/// Density convexity along the edge: (2/rho_e)((rho_v + rho_w)/2 - rho_e).
double ricci_density(const curvature_context_t& ctx, index_t v, index_t w);

struct ricci_functional_t {
    std::optional<double> mean;
    std::optional<double> level;
    std::optional<double> direct;
    std::optional<double> response;
    double value = 0.0; // weighted over the available components
    std::vector<std::string> warnings;
};

ricci_functional_t ricci_functional(const curvature_context_t& ctx,
                                    const std::map<index_t, double>& f,
                                    const dataset_t* data, index_t v, index_t w);

// ================================================================
// Aggregates
// ================================================================

struct curvature_report_t {
    std::vector<double> r_grid;
    std::map<index_t, std::map<std::string, double>> vertex; // finite values only
    std::map<index_t, std::vector<std::string>> vertex_flags;
    std::map<simplex_t, std::map<std::string, double>> edge;
    std::map<index_t, double> kappa_stat;   // selected vertex curvature
    std::map<simplex_t, double> ric_stat;   // geom + dens + func
    double regularizer_value = 0.0;         // R(f)
    double energy = 0.0;                    // E
    std::string kappa_stat_choice;
    std::vector<std::string> warnings;
};

curvature_report_t build_curvature_report(const curvature_context_t& ctx,
                                          const std::map<index_t, double>& f,
                                          const dataset_t* data,
                                          const std::vector<double>& r_grid);

double huber(double x, double tau);

/// R(f) = sum_v huber(kappa_stat) + lambda sum_e ric_stat^2.
double regularizer(const std::map<index_t, double>& kappa_stat,
                   const std::map<simplex_t, double>& ric_stat, double tau,
                   double lambda_edge);

/// E = sum_v kappa^2 vol_n(C_v) + lambda sum_e ric^2 vol_{n-1}(F_e).
double geometric_energy(const std::map<index_t, double>& kappa_stat,
                        const std::map<simplex_t, double>& ric_stat,
                        const riemannian_structure_t& rs, double lambda_edge);

// ================================================================
// Split scoring
// ================================================================

struct split_candidate_t {
    index_t cell_id = 0;
    int axis = 0;          // axis-aligned cut when normal is empty
    vec_t normal;          // general linear cut w.x = threshold
    double threshold = 0.0;
};

struct geom_penalty_config_t {
    std::vector<double> lambdas = {1.0, 1.0, 1.0}; // lambda_k by simplex dim
    double gamma = 0.5;     // anisotropy (log condition number) weight
    double vol_exponent = 2.0; // alpha > 1 in the boundary penalty
    double beta = 1.0;      // high-order volume exponent
    int p_threshold = 1;    // simplices of dim > p_threshold are penalized
};

/// Total geometric penalty of a partition: balanced-volume and anisotropy
/// terms on vertices, boundary-size-times-angle terms on edges, volume
/// terms on higher simplices. The edge angle is the mean interior dihedral
/// angle the facet makes with the other facets of its two cells.
double geometric_penalty(const partition_t& partition, int max_dim,
                         const geom_penalty_config_t& cfg);

struct split_score_t {
    double score = 0.0;
    double delta_penalty = 0.0;
    partition_t after; // the refined partition with the split applied
};

/// Score(s) = impurity_reduction - eta * (R_geom(after) - R_geom(before)),
/// recomputing boundary and higher-order terms only around the split cell
/// (the balanced-volume reference changes globally and is re-evaluated
/// from cached volumes).
split_score_t score_split(const partition_t& partition, const split_candidate_t& split,
                          double impurity_reduction, double eta,
                          const geom_penalty_config_t& cfg = {}, int max_dim = 2);

// ================================================================
// Training-time distribution summaries
// ================================================================

struct curvature_snapshot_t {
    double t = 0.0;
    std::vector<double> values; // vertex and edge curvatures pooled
    double energy = 0.0;
};

struct distribution_summary_t {
    double t = 0.0;
    std::array<double, 5> quantiles{}; // 5, 25, 50, 75, 95 percent
    double mean = 0.0;
    double fraction_negative = 0.0;
    double energy = 0.0;
};

std::vector<distribution_summary_t>
curvature_distribution(const std::vector<curvature_snapshot_t>& snapshots);

/// Volume of the unit ball in R^n.
double unit_ball_volume(int n);

} // namespace riemplex
