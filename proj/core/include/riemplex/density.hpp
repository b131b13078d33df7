#pragma once

#include "riemplex/calculus.hpp"

#include <map>
#include <vector>

namespace riemplex {

enum class edge_scheme_t { ARITHMETIC, HARMONIC, LIFT, GEOMETRIC };

edge_scheme_t edge_scheme_from_string(const std::string& name);
std::string to_string(edge_scheme_t s);

/// Vertex and edge densities over a nerve. Edges whose shared boundary has
/// dimension below n-1 carry no density and are excluded from weighting.
struct density_field_t {
    std::map<index_t, double> rho_vertex;
    std::map<simplex_t, double> rho_edge;
    edge_scheme_t scheme = edge_scheme_t::ARITHMETIC;
    double alpha = 1.0;
    double rho_floor = 0.0;
    std::vector<index_t> clamped;     // vertices floored after the solve
    double energy_residual = 0.0;     // ||(V + Q) rho - n||
    double display_residual = 0.0;    // residual of the alternative display
                                      // form, reported, never asserted
};

/// Regularized density estimate: minimizes the count-rate fidelity
/// sum (n_i - vol_i rho_i)^2 / vol_i plus lambda times the multi-scale
/// lift penalties, i.e. solves (V + lambda Q) rho = n, V = diag(vol).
/// counts follow the canonical vertex order.
density_field_t estimate_density(const hodge_operators_t& ops, const vec_t& counts,
                                 double lambda,
                                 const std::vector<std::pair<int, int>>& penalties = {
                                     {0, 1}});

/// Geometric correction omega(e) = <e,e>^{1/2} / vol_{n-1}(F)^{1/(n-1)}.
double edge_omega(double edge_self_inner, double facet_measure, int ambient_dim);
double edge_omega(const riemannian_structure_t& rs, const simplex_t& e);

/// Fill rho_edge from rho_vertex under the chosen interpolation scheme.
void interpolate_edge_density(density_field_t& field,
                              const riemannian_structure_t& rs, edge_scheme_t scheme);

struct weighted_graph_t {
    struct edge_t {
        index_t u = 0;
        index_t v = 0;
        double length = 0.0;
    };
    std::vector<index_t> vertices;
    std::vector<edge_t> edges;

    std::map<index_t, std::vector<std::pair<index_t, double>>> adjacency() const;
};

/// d_rho(e) = l(e) / rho(e)^alpha with rho floored at the field's floor.
weighted_graph_t density_weighted_graph(const density_field_t& field,
                                        const riemannian_structure_t& rs,
                                        double alpha);

struct geodesic_result_t {
    std::map<index_t, double> distance;   // +inf marker when unreachable
    std::map<index_t, index_t> predecessor; // NO_VERTEX at the source
};

/// Single-source shortest paths; ties resolved toward the lexicographically
/// smallest predecessor id, so reported paths are deterministic.
geodesic_result_t geodesic_distances(const weighted_graph_t& graph, index_t source);

/// Path from source to target under the predecessor map (source first).
std::vector<index_t> geodesic_path(const geodesic_result_t& res, index_t source,
                                   index_t target);

} // namespace riemplex
