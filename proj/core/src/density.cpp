#include "riemplex/density.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace riemplex {

edge_scheme_t edge_scheme_from_string(const std::string& name) {
    if (name == "arithmetic") return edge_scheme_t::ARITHMETIC;
    if (name == "harmonic") return edge_scheme_t::HARMONIC;
    if (name == "lift") return edge_scheme_t::LIFT;
    if (name == "geometric") return edge_scheme_t::GEOMETRIC;
    throw input_error_t("density: unsupported edge interpolation scheme " + name);
}

std::string to_string(edge_scheme_t s) {
    switch (s) {
        case edge_scheme_t::ARITHMETIC: return "arithmetic";
        case edge_scheme_t::HARMONIC: return "harmonic";
        case edge_scheme_t::LIFT: return "lift";
        case edge_scheme_t::GEOMETRIC: return "geometric";
    }
    return "arithmetic";
}

density_field_t estimate_density(const hodge_operators_t& ops, const vec_t& counts,
                                 double lambda,
                                 const std::vector<std::pair<int, int>>& penalties) {
    if (lambda < 0.0) throw input_error_t("density: lambda must be >= 0");
    const auto& verts = ops.basis(0);
    const int n = static_cast<int>(verts.size());
    if (counts.size() != n) {
        throw input_error_t("density: counts vector has wrong length");
    }

    const auto& partition = ops.structure().partition();
    vec_t vols(n);
    for (int i = 0; i < n; ++i) {
        vols[i] = cell_volume(partition, verts[i].vertices[0]).value;
    }

    std::vector<spline_term_t> terms;
    for (auto [p, k] : penalties) terms.push_back({p, k, lambda});
    const mat_t Q = spline_penalty_matrix(terms, ops);

    const mat_t M = mat_t(vols.asDiagonal()) + Q;
    Eigen::LLT<mat_t> llt(M);
    if (llt.info() != Eigen::Success) {
        throw internal_error_t("density: fidelity-plus-penalty system not SPD");
    }
    vec_t rho = llt.solve(counts);

    density_field_t field;
    field.energy_residual = (M * rho - counts).norm();

    // Alternative display normalization (diagonal 1/vol against count
    // rates); computed for the report only.
    {
        vec_t dinv(n), rate(n);
        for (int i = 0; i < n; ++i) {
            dinv[i] = 1.0 / vols[i];
            rate[i] = counts[i] / vols[i];
        }
        const vec_t lhs = vec_t(dinv.asDiagonal() * rho) +
                          vec_t(mat_t(vols.asDiagonal()).inverse() * Q * rho);
        field.display_residual = (lhs - vec_t(dinv.asDiagonal() * rate)).norm();
    }

    const double total = counts.sum();
    field.rho_floor = 1e-9 * (std::max(total, 1.0) / partition.domain().volume());
    for (int i = 0; i < n; ++i) {
        const index_t id = verts[i].vertices[0];
        if (rho[i] < field.rho_floor) {
            field.clamped.push_back(id);
            rho[i] = field.rho_floor;
        }
        field.rho_vertex[id] = rho[i];
    }
    return field;
}

double edge_omega(double edge_self_inner, double facet_measure, int ambient_dim) {
    if (ambient_dim < 2) throw input_error_t("edge_omega: needs ambient dimension >= 2");
    if (facet_measure <= 0.0) {
        throw input_error_t(
            "edge_omega: zero facet measure, edge excluded from density weighting");
    }
    return std::sqrt(edge_self_inner) /
           std::pow(facet_measure, 1.0 / static_cast<double>(ambient_dim - 1));
}

double edge_omega(const riemannian_structure_t& rs, const simplex_t& e) {
    if (e.dim() != 1) throw input_error_t("edge_omega: not an edge");
    const face_t& f = rs.face(e);
    const int n = rs.partition().domain().dim();
    const double facet = (f.dim == n - 1) ? f.measure : 0.0;
    return edge_omega(rs.edge_inner(e.vertices[0], e, e), facet, n);
}

void interpolate_edge_density(density_field_t& field,
                              const riemannian_structure_t& rs, edge_scheme_t scheme) {
    field.scheme = scheme;
    field.rho_edge.clear();
    const int n = rs.partition().domain().dim();
    for (const auto& e : rs.complex().simplices(1)) {
        const face_t& f = rs.face(e);
        if (f.dim != n - 1 || f.measure <= 0.0) continue; // lower-dim contact
        const double ri = field.rho_vertex.at(e.vertices[0]);
        const double rj = field.rho_vertex.at(e.vertices[1]);
        double value = 0.0;
        switch (scheme) {
            case edge_scheme_t::ARITHMETIC:
                value = 0.5 * (ri + rj) * edge_omega(rs, e);
                break;
            case edge_scheme_t::HARMONIC:
                value = (ri + rj > 0.0 ? 2.0 * ri * rj / (ri + rj) : 0.0) *
                        edge_omega(rs, e);
                break;
            case edge_scheme_t::GEOMETRIC:
                value = std::sqrt(ri * rj) * edge_omega(rs, e);
                break;
            case edge_scheme_t::LIFT: {
                const double vi = cell_volume(rs.partition(), e.vertices[0]).value;
                const double vj = cell_volume(rs.partition(), e.vertices[1]).value;
                value = f.measure / (vi + vj) * (ri + rj);
                break;
            }
        }
        field.rho_edge[e] = value;
    }
}

std::map<index_t, std::vector<std::pair<index_t, double>>>
weighted_graph_t::adjacency() const {
    std::map<index_t, std::vector<std::pair<index_t, double>>> adj;
    for (index_t v : vertices) adj[v];
    for (const auto& e : edges) {
        adj[e.u].push_back({e.v, e.length});
        adj[e.v].push_back({e.u, e.length});
    }
    for (auto& [v, nb] : adj) std::sort(nb.begin(), nb.end());
    return adj;
}

weighted_graph_t density_weighted_graph(const density_field_t& field,
                                        const riemannian_structure_t& rs,
                                        double alpha) {
    if (alpha <= 0.0 || alpha > 1.0) {
        throw input_error_t("density: alpha must lie in (0, 1]");
    }
    weighted_graph_t g;
    for (const auto& v : rs.complex().simplices(0)) g.vertices.push_back(v.vertices[0]);
    for (const auto& [e, rho] : field.rho_edge) {
        const double len = rs.edge_length(e);
        const double floored = std::max(rho, field.rho_floor > 0 ? field.rho_floor
                                                                 : 1e-12);
        g.edges.push_back({e.vertices[0], e.vertices[1],
                           len / std::pow(floored, alpha)});
    }
    return g;
}

geodesic_result_t geodesic_distances(const weighted_graph_t& graph, index_t source) {
    const auto adj = graph.adjacency();
    if (adj.find(source) == adj.end()) {
        throw input_error_t("geodesics: unknown source vertex");
    }
    geodesic_result_t res;
    for (index_t v : graph.vertices) {
        res.distance[v] = INF_MARKER;
        res.predecessor[v] = NO_VERTEX;
    }
    res.distance[source] = 0.0;

    using entry_t = std::pair<double, index_t>;
    std::priority_queue<entry_t, std::vector<entry_t>, std::greater<entry_t>> heap;
    heap.push({0.0, source});
    std::map<index_t, bool> done;
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (done[u]) continue;
        done[u] = true;
        for (const auto& [w, len] : adj.at(u)) {
            const double nd = d + len;
            if (nd < res.distance[w]) {
                res.distance[w] = nd;
                res.predecessor[w] = u;
                heap.push({nd, w});
            } else if (nd == res.distance[w] && u < res.predecessor[w]) {
                res.predecessor[w] = u; // deterministic tie-break
            }
        }
    }
    return res;
}

std::vector<index_t> geodesic_path(const geodesic_result_t& res, index_t source,
                                   index_t target) {
    if (!std::isfinite(res.distance.at(target))) return {};
    std::vector<index_t> path;
    index_t v = target;
    while (v != NO_VERTEX) {
        path.push_back(v);
        if (v == source) break;
        v = res.predecessor.at(v);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

} // namespace riemplex
