#include "riemplex/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace riemplex {

namespace {

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

} // namespace

double unit_ball_volume(int n) {
    if (n < 1) throw input_error_t("unit_ball_volume: dimension must be >= 1");
    return std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
}

curvature_context_t::curvature_context_t(const riemannian_structure_t& rs,
                                         const weighted_graph_t& graph,
                                         const density_field_t& field,
                                         curvature_config_t config)
    : rs_(&rs), graph_(&graph), field_(&field), config_(config) {
    adj_ = graph.adjacency();
}

const geodesic_result_t& curvature_context_t::geodesics_from(index_t v) const {
    auto it = geo_cache_.find(v);
    if (it != geo_cache_.end()) return it->second;
    return geo_cache_.emplace(v, geodesic_distances(*graph_, v)).first->second;
}

double curvature_context_t::distance(index_t v, index_t w) const {
    return geodesics_from(v).distance.at(w);
}

std::vector<index_t> curvature_context_t::neighbors(index_t v) const {
    auto it = adj_.find(v);
    if (it == adj_.end()) throw input_error_t("curvature: unknown vertex");
    std::vector<index_t> out;
    for (const auto& [w, len] : it->second) out.push_back(w);
    return out;
}

double curvature_context_t::mean_edge_dist() const {
    if (config_.dbar_override > 0.0) return config_.dbar_override;
    if (dbar_ < 0.0) {
        double acc = 0.0;
        for (const auto& e : graph_->edges) acc += e.length;
        dbar_ = graph_->edges.empty() ? 0.0
                                      : acc / static_cast<double>(graph_->edges.size());
    }
    return dbar_;
}

double curvature_context_t::mean_cell_diameter() const {
    if (config_.lbar_override > 0.0) return config_.lbar_override;
    if (lbar_ < 0.0) {
        const auto& part = rs_->partition();
        double acc = 0.0;
        for (const auto& c : part.cells()) {
            if (c.geometry.is_box) {
                acc += (c.geometry.box.hi - c.geometry.box.lo).norm();
            } else if (part.domain().dim() <= 3) {
                std::vector<geom::halfspace_t> rows;
                vec_t lo, hi;
                part.closure_system(c.id, rows, lo, hi);
                auto verts = geom::enumerate_vertices(rows, lo, hi);
                double diam = 0.0;
                for (std::size_t i = 0; i < verts.size(); ++i)
                    for (std::size_t j = i + 1; j < verts.size(); ++j)
                        diam = std::max(diam, (verts[i] - verts[j]).norm());
                acc += diam;
            } else {
                // coarse fallback: the domain diagonal
                acc += (part.domain().bounds.hi - part.domain().bounds.lo).norm();
            }
        }
        lbar_ = acc / static_cast<double>(part.cells().size());
    }
    return lbar_;
}

// ================================================================
// Vertex curvatures
// ================================================================

double ball_curvature(const curvature_context_t& ctx, index_t v, double r) {
    if (r <= 0.0) throw input_error_t("ball_curvature: radius must be positive");
    const auto& geo = ctx.geodesics_from(v);
    std::int64_t count = 0;
    for (const auto& [w, d] : geo.distance) {
        if (d <= r + ctx.config().sphere_tol) ++count;
    }
    const int n = ctx.structure().partition().domain().dim();
    const double rho = ctx.field().rho_vertex.at(v);
    const double flat = rho * unit_ball_volume(n) * std::pow(r, n);
    if (flat <= 0.0) {
        throw input_error_t("ball_curvature: flat reference count is zero");
    }
    return (static_cast<double>(count) - flat) / flat;
}

double dist_curvature(const curvature_context_t& ctx, index_t v) {
    const auto adj = ctx.graph().adjacency();
    auto it = adj.find(v);
    if (it == adj.end() || it->second.empty()) {
        throw input_error_t("dist_curvature: isolated vertex");
    }
    double acc = 0.0;
    for (const auto& [w, len] : it->second) acc += len;
    const double dbar = ctx.mean_edge_dist();
    return 1.0 - acc / (static_cast<double>(it->second.size()) * dbar);
}

namespace {

std::vector<index_t> sphere_members(const curvature_context_t& ctx, index_t v,
                                    double r) {
    std::vector<index_t> sphere;
    for (const auto& [w, d] : ctx.geodesics_from(v).distance) {
        if (std::isfinite(d) && std::abs(d - r) <= ctx.config().sphere_tol) {
            sphere.push_back(w);
        }
    }
    return sphere;
}

} // namespace

std::optional<spray_result_t> spray_curvature(const curvature_context_t& ctx,
                                              index_t v, double r) {
    const std::vector<index_t> sphere = sphere_members(ctx, v, r);
    if (sphere.empty()) return std::nullopt;

    const auto& geo = ctx.geodesics_from(v);
    // first edge of the deterministic shortest path to each sphere member
    std::map<index_t, simplex_t> first_edge;
    for (index_t w : sphere) {
        auto path = geodesic_path(geo, v, w);
        if (path.size() >= 2) first_edge.emplace(w, simplex_t({v, path[1]}));
    }

    const auto& rs = ctx.structure();
    const double m2 = static_cast<double>(sphere.size()) *
                      static_cast<double>(sphere.size());
    double angle_acc = 0.0;
    double spread_acc = 0.0;
    for (index_t w : sphere) {
        for (index_t wp : sphere) {
            spread_acc += ctx.distance(w, wp);
            auto ia = first_edge.find(w);
            auto ib = first_edge.find(wp);
            if (ia == first_edge.end() || ib == first_edge.end()) continue;
            const double li = rs.edge_length(ia->second);
            const double lj = rs.edge_length(ib->second);
            if (li <= 0.0 || lj <= 0.0) continue;
            const double c = std::clamp(
                rs.edge_inner(v, ia->second, ib->second) / (li * lj), -1.0, 1.0);
            angle_acc += std::acos(c);
        }
    }
    spray_result_t out;
    out.theta_angle = angle_acc / m2;
    out.theta_spread = spread_acc / (m2 * 2.0 * r);
    out.kappa = 1.0 - out.theta_spread;
    return out;
}

double tri_curvature(const curvature_context_t& ctx, index_t v) {
    const auto nbrs = ctx.neighbors(v);
    if (nbrs.empty()) throw input_error_t("tri_curvature: isolated vertex");
    double acc = 0.0;
    for (index_t w : nbrs) {
        for (index_t wp : nbrs) {
            const double denom = ctx.distance(v, w) + ctx.distance(v, wp);
            acc += 1.0 - ctx.distance(w, wp) / denom;
        }
    }
    const double m = static_cast<double>(nbrs.size());
    return acc / (m * m);
}

std::optional<double> path_curvature(const curvature_context_t& ctx, index_t v,
                                     double r) {
    const std::vector<index_t> sphere = sphere_members(ctx, v, r);
    if (sphere.empty()) return std::nullopt;
    const auto& geo = ctx.geodesics_from(v);
    double acc = 0.0;
    for (index_t w : sphere) {
        acc += static_cast<double>(geodesic_path(geo, v, w).size()) / r;
    }
    const double J = acc / static_cast<double>(sphere.size());
    return J * ctx.mean_cell_diameter() - 1.0;
}

std::optional<double> functional_mean_curvature(const curvature_context_t& ctx,
                                                const std::map<index_t, double>& f,
                                                index_t v) {
    const auto& rs = ctx.structure();
    double lap = 0.0, wsum = 0.0, favg = 0.0;
    for (const auto& e : rs.complex().simplices(1)) {
        if (e.vertices[0] != v && e.vertices[1] != v) continue;
        const index_t w = e.vertices[0] == v ? e.vertices[1] : e.vertices[0];
        const double a = rs.edge_inner(v, e, e);
        lap += a * (f.at(w) - f.at(v));
        favg += a * f.at(w);
        wsum += a;
    }
    if (wsum <= 0.0) return std::nullopt;
    favg /= wsum;
    const double denom = f.at(v) - favg;
    if (std::abs(denom) < ctx.config().eps_denom) return std::nullopt; // 0/0 flagged
    return lap / denom;
}

double functional_angle_curvature(const curvature_context_t& ctx,
                                  const std::map<index_t, double>& f, index_t v) {
    const auto& rs = ctx.structure();
    std::vector<simplex_t> edges;
    std::vector<double> deltas, lens;
    for (const auto& e : rs.complex().simplices(1)) {
        if (e.vertices[0] != v && e.vertices[1] != v) continue;
        const double len = rs.edge_length(e);
        if (len <= 0.0) continue; // point contact carries no direction
        const index_t w = e.vertices[0] == v ? e.vertices[1] : e.vertices[0];
        edges.push_back(e);
        deltas.push_back(f.at(w) - f.at(v));
        lens.push_back(len);
    }
    const std::size_t m = edges.size();
    if (m < 2) {
        throw input_error_t("functional_angle_curvature: fewer than two incident edges");
    }
    const double clamp = 1.0 - ctx.config().eps_cos;
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            const double geom_cos =
                rs.edge_inner(v, edges[i], edges[j]) / (lens[i] * lens[j]);
            double c = sgn(deltas[i] * deltas[j]) * geom_cos;
            c = std::clamp(c, -clamp, clamp);
            acc += std::log((1.0 + c) / (1.0 - c));
        }
    }
    return acc / (static_cast<double>(m) * static_cast<double>(m - 1));
}

double functional_level_curvature(const curvature_context_t& ctx,
                                  const std::map<index_t, double>& f, index_t v) {
    const auto& rs = ctx.structure();
    std::vector<double> derivs;
    for (const auto& e : rs.complex().simplices(1)) {
        if (e.vertices[0] != v && e.vertices[1] != v) continue;
        const double len = rs.edge_length(e);
        if (len <= 0.0) continue;
        const index_t w = e.vertices[0] == v ? e.vertices[1] : e.vertices[0];
        derivs.push_back((f.at(w) - f.at(v)) / len);
    }
    if (derivs.empty()) {
        throw input_error_t("functional_level_curvature: isolated vertex");
    }
    const double mean =
        std::accumulate(derivs.begin(), derivs.end(), 0.0) / derivs.size();
    double var = 0.0;
    for (double d : derivs) var += (d - mean) * (d - mean);
    return var / static_cast<double>(derivs.size());
}

// ================================================================
// Edge curvatures
// ================================================================

double ricci_geometric(const curvature_context_t& ctx, index_t v, index_t w) {
    const auto& rs = ctx.structure();
    auto measure_at = [&](index_t base) {
        const auto nbrs = ctx.neighbors(base);
        if (nbrs.empty()) {
            throw input_error_t("ricci_geometric: vertex without neighbors");
        }
        vec_t mass(static_cast<index_t>(nbrs.size()));
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            mass[static_cast<index_t>(i)] = rs.edge_length(simplex_t({base, nbrs[i]}));
        }
        const double total = mass.sum();
        if (total <= 0.0) {
            throw input_error_t("ricci_geometric: neighbor measure has no mass");
        }
        return std::pair<std::vector<index_t>, vec_t>{nbrs, mass / total};
    };

    const double d = ctx.distance(v, w);
    if (!std::isfinite(d) || d <= 0.0) {
        throw input_error_t("ricci_geometric: endpoints not connected");
    }
    auto [sv, mu] = measure_at(v);
    auto [sw, nu] = measure_at(w);
    mat_t cost(static_cast<index_t>(sv.size()), static_cast<index_t>(sw.size()));
    for (std::size_t i = 0; i < sv.size(); ++i)
        for (std::size_t j = 0; j < sw.size(); ++j)
            cost(static_cast<index_t>(i), static_cast<index_t>(j)) =
                ctx.distance(sv[i], sw[j]);
    const double w1 = geom::wasserstein1(mu, nu, cost);
    return 1.0 - w1 / d;
}

double ricci_density(const curvature_context_t& ctx, index_t v, index_t w) {
    const simplex_t e({v, w});
    auto it = ctx.field().rho_edge.find(e);
    if (it == ctx.field().rho_edge.end()) {
        throw input_error_t("ricci_density: edge carries no density");
    }
    const double rho_e = std::max(it->second, ctx.field().rho_floor);
    if (rho_e <= 0.0) throw input_error_t("ricci_density: zero edge density");
    const double rv = ctx.field().rho_vertex.at(v);
    const double rw = ctx.field().rho_vertex.at(w);
    return 2.0 / rho_e * (0.5 * (rv + rw) - rho_e);
}

ricci_functional_t ricci_functional(const curvature_context_t& ctx,
                                    const std::map<index_t, double>& f,
                                    const dataset_t* data, index_t v, index_t w) {
    const auto& cfg = ctx.config();
    const auto& rs = ctx.structure();
    ricci_functional_t out;

    // mean-consistency component; flagged vertex curvature counts as 0
    {
        const double kv = functional_mean_curvature(ctx, f, v).value_or(0.0);
        const double kw = functional_mean_curvature(ctx, f, w).value_or(0.0);
        out.mean =
            1.0 - std::abs(kv - kw) / (std::abs(kv) + std::abs(kw) + cfg.eps_mean);
    }

    // global average gradient magnitude over the weighted graph
    double grad_avg = 0.0;
    {
        std::int64_t count = 0;
        for (const auto& e : ctx.graph().edges) {
            grad_avg += std::abs(f.at(e.u) - f.at(e.v)) / e.length;
            ++count;
        }
        grad_avg = count > 0 ? grad_avg / static_cast<double>(count) : 0.0;
    }

    // level component
    {
        const double kv = functional_level_curvature(ctx, f, v);
        const double kw = functional_level_curvature(ctx, f, w);
        const double num = std::abs(f.at(v) - f.at(w));
        if (grad_avg > 0.0) {
            out.level = 1.0 - 0.5 * (std::sqrt(kv) + std::sqrt(kw)) * num /
                                  (ctx.distance(v, w) * grad_avg);
        } else if (num <= cfg.eps_denom) {
            out.level = 1.0; // constant function: nothing to measure
        } else {
            out.warnings.push_back("level component skipped: zero average gradient");
        }
    }

    // direct component from the cell predictors
    {
        const auto& pv = rs.partition().cell(v).predictor;
        const auto& pw = rs.partition().cell(w).predictor;
        using kind_t = predictor_t::kind_t;
        if (pv.kind == kind_t::CONSTANT && pw.kind == kind_t::CONSTANT) {
            const double num = (pv.constant - pw.constant).squaredNorm();
            const double den = pv.constant.squaredNorm() + pw.constant.squaredNorm();
            out.direct = den > 0.0 ? 1.0 - cfg.gamma * num / den : 1.0;
        } else if (pv.kind == kind_t::AFFINE && pw.kind == kind_t::AFFINE) {
            const double num = (pv.W - pw.W).squaredNorm();
            if (grad_avg > 0.0) {
                out.direct = 1.0 - cfg.beta * num / (grad_avg * grad_avg);
            } else if (num <= cfg.eps_denom) {
                out.direct = 1.0;
            } else {
                out.warnings.push_back("direct component skipped: zero average gradient");
            }
        } else {
            out.warnings.push_back("direct component skipped: no matching predictors");
        }
    }

    // response component over the data in both cells
    if (data != nullptr && data->has_y) {
        std::vector<index_t> pts;
        for (index_t id : {v, w}) {
            auto it = rs.partition().data_index().find(id);
            if (it != rs.partition().data_index().end()) {
                pts.insert(pts.end(), it->second.begin(), it->second.end());
            }
        }
        if (pts.empty()) {
            out.warnings.push_back("response component skipped: both cells empty");
        } else {
            double ybar = 0.0;
            for (index_t i : pts) ybar += data->y[i];
            ybar /= static_cast<double>(pts.size());
            double num = 0.0, den = 0.0;
            for (index_t i : pts) {
                const vec_t x = data->X.row(i).transpose();
                const index_t cell = rs.partition().locate(x).value_or(v);
                const auto& pred = rs.partition().cell(cell).predictor;
                const double fx = pred.kind == predictor_t::kind_t::NONE
                                      ? f.at(cell)
                                      : pred.evaluate(x)[0];
                num += (fx - data->y[i]) * (fx - data->y[i]);
                den += (data->y[i] - ybar) * (data->y[i] - ybar);
            }
            if (den > 0.0) {
                out.response = 1.0 - num / den;
            } else if (num <= cfg.eps_denom) {
                out.response = 1.0;
            } else {
                out.warnings.push_back("response component skipped: constant responses");
            }
        }
    } else {
        out.warnings.push_back("response component skipped: no response data");
    }

    double wsum = 0.0, acc = 0.0;
    const std::array<std::optional<double>, 4> comps = {out.mean, out.level, out.direct,
                                                        out.response};
    for (int i = 0; i < 4; ++i) {
        if (comps[i]) {
            acc += cfg.alpha[i] * (*comps[i]);
            wsum += cfg.alpha[i];
        }
    }
    out.value = wsum > 0.0 ? acc / wsum : 0.0;
    return out;
}

// ================================================================
// Aggregates
// ================================================================

double huber(double x, double tau) {
    const double a = std::abs(x);
    return a <= tau ? x * x : 2.0 * tau * a - tau * tau;
}

double regularizer(const std::map<index_t, double>& kappa_stat,
                   const std::map<simplex_t, double>& ric_stat, double tau,
                   double lambda_edge) {
    double acc = 0.0;
    for (const auto& [v, k] : kappa_stat) acc += huber(k, tau);
    for (const auto& [e, r] : ric_stat) acc += lambda_edge * r * r;
    return acc;
}

double geometric_energy(const std::map<index_t, double>& kappa_stat,
                        const std::map<simplex_t, double>& ric_stat,
                        const riemannian_structure_t& rs, double lambda_edge) {
    double acc = 0.0;
    for (const auto& [v, k] : kappa_stat) {
        acc += k * k * cell_volume(rs.partition(), v).value;
    }
    const int n = rs.partition().domain().dim();
    for (const auto& [e, r] : ric_stat) {
        const face_t& f = rs.face(e);
        const double fm = (f.dim == n - 1) ? f.measure : 0.0;
        acc += lambda_edge * r * r * fm;
    }
    return acc;
}

curvature_report_t build_curvature_report(const curvature_context_t& ctx,
                                          const std::map<index_t, double>& f,
                                          const dataset_t* data,
                                          const std::vector<double>& r_grid) {
    curvature_report_t rep;
    rep.r_grid = r_grid;
    rep.kappa_stat_choice = "functional_mean";
    const auto& rs = ctx.structure();

    for (const auto& vs : rs.complex().simplices(0)) {
        const index_t v = vs.vertices[0];
        auto& row = rep.vertex[v];
        auto& flags = rep.vertex_flags[v];
        for (double r : r_grid) {
            const std::string tag = "@" + std::to_string(r);
            try {
                row["ball" + tag] = ball_curvature(ctx, v, r);
            } catch (const input_error_t&) {
                flags.push_back("ball" + tag + ": no flat reference");
            }
            if (auto s = spray_curvature(ctx, v, r)) {
                row["spray_angle" + tag] = s->theta_angle;
                row["spray_spread" + tag] = s->theta_spread;
                row["spray" + tag] = s->kappa;
            } else {
                flags.push_back("spray" + tag + ": empty sphere");
            }
            if (auto p = path_curvature(ctx, v, r)) {
                row["path" + tag] = *p;
            } else {
                flags.push_back("path" + tag + ": empty sphere");
            }
        }
        try {
            row["dist"] = dist_curvature(ctx, v);
            row["tri"] = tri_curvature(ctx, v);
        } catch (const input_error_t&) {
            flags.push_back("dist/tri: isolated vertex");
        }
        if (auto km = functional_mean_curvature(ctx, f, v)) {
            row["f_mean"] = *km;
            rep.kappa_stat[v] = *km;
        } else {
            flags.push_back("f_mean: indeterminate, treated as 0 in aggregates");
            rep.kappa_stat[v] = 0.0;
        }
        try {
            row["f_angle"] = functional_angle_curvature(ctx, f, v);
        } catch (const input_error_t&) {
            flags.push_back("f_angle: fewer than two incident edges");
        }
        try {
            row["f_level"] = functional_level_curvature(ctx, f, v);
        } catch (const input_error_t&) {
            flags.push_back("f_level: isolated vertex");
        }
    }

    for (const auto& e : ctx.graph().edges) {
        const simplex_t s({e.u, e.v});
        auto& row = rep.edge[s];
        row["ric_geom"] = ricci_geometric(ctx, e.u, e.v);
        row["ric_dens"] = ricci_density(ctx, e.u, e.v);
        auto rf = ricci_functional(ctx, f, data, e.u, e.v);
        row["ric_func"] = rf.value;
        if (rf.mean) row["ric_func_mean"] = *rf.mean;
        if (rf.level) row["ric_func_level"] = *rf.level;
        if (rf.direct) row["ric_func_direct"] = *rf.direct;
        if (rf.response) row["ric_func_response"] = *rf.response;
        for (const auto& wmsg : rf.warnings) {
            rep.warnings.push_back("edge " + std::to_string(e.u) + "-" +
                                   std::to_string(e.v) + ": " + wmsg);
        }
        rep.ric_stat[s] = row["ric_geom"] + row["ric_dens"] + row["ric_func"];
        row["ric_stat"] = rep.ric_stat[s];
    }

    rep.regularizer_value = regularizer(rep.kappa_stat, rep.ric_stat,
                                        ctx.config().tau, ctx.config().lambda_edge);
    rep.energy =
        geometric_energy(rep.kappa_stat, rep.ric_stat, rs, ctx.config().lambda_edge);
    return rep;
}

// ================================================================
// Split scoring
// ================================================================

namespace {

double balance_phi(double t) { return t + 1.0 / t; }

double angle_h(double theta) {
    const double d = M_PI / 2.0 - std::abs(theta - M_PI / 2.0);
    return d * d;
}

// Condition number over the facet-sharing neighbors only, so point
// contacts cannot force a singular report into the log term.
double positive_part_condition(const mat_t& G) {
    std::vector<int> keep;
    for (int i = 0; i < G.rows(); ++i) {
        if (G(i, i) > 0.0) keep.push_back(i);
    }
    if (keep.empty()) return 1.0;
    mat_t S(static_cast<int>(keep.size()), static_cast<int>(keep.size()));
    for (std::size_t a = 0; a < keep.size(); ++a)
        for (std::size_t b = 0; b < keep.size(); ++b)
            S(static_cast<int>(a), static_cast<int>(b)) = G(keep[a], keep[b]);
    Eigen::SelfAdjointEigenSolver<mat_t> eig(S);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo <= 1e-12 * std::max(hi, 0.0)) return INF_MARKER;
    return hi / lo;
}

// Mean interior dihedral angle between a facet and the other facets of the
// two cells it separates; parallel carriers read as right angles, matching
// the zero Gram convention.
double mean_facet_angle(const partition_t& part,
                        const std::map<simplex_t, face_t>& faces, const simplex_t& e) {
    const face_t& fe = faces.at(e);
    double acc = 0.0;
    std::int64_t count = 0;
    for (index_t cell : e.vertices) {
        for (const auto& [s, f] : faces) {
            if (s == e || s.dim() != 1 || f.dim != fe.dim || f.empty()) continue;
            if (std::find(s.vertices.begin(), s.vertices.end(), cell) ==
                s.vertices.end())
                continue;
            auto c = dihedral_cos(part, cell, fe, f);
            if (!c) continue;
            acc += std::acos(std::clamp(*c, -1.0, 1.0));
            ++count;
        }
    }
    return count > 0 ? acc / static_cast<double>(count) : M_PI / 2.0;
}

struct penalty_terms_t {
    std::map<index_t, double> vertex;  // balanced-volume + anisotropy
    std::map<simplex_t, double> edge;  // boundary-size-times-angle
    std::map<simplex_t, double> high;  // high-order volume terms
};

penalty_terms_t penalty_terms(const partition_t& part, const nerve_t& nerve,
                              const riemannian_structure_t& rs,
                              const geom_penalty_config_t& cfg) {
    penalty_terms_t terms;
    const double ref_vol =
        part.domain().volume() / static_cast<double>(part.cells().size());

    for (const auto& c : part.cells()) {
        const double vol = cell_volume(part, c.id).value;
        double psi0 = balance_phi(vol / ref_vol);
        const mat_t G = rs.star_gram(simplex_t({c.id}), 1);
        if (G.rows() > 0) {
            const double cond = positive_part_condition(G);
            psi0 += cfg.gamma * std::log(std::isfinite(cond) ? cond : 1e12);
        }
        terms.vertex[c.id] = psi0;
    }

    const int n = part.domain().dim();
    for (const auto& e : nerve.complex.simplices(1)) {
        const face_t& f = nerve.faces.at(e);
        if (f.dim != n - 1 || f.measure <= 0.0) {
            terms.edge[e] = 0.0;
            continue;
        }
        terms.edge[e] = std::pow(f.measure, cfg.vol_exponent) *
                        angle_h(mean_facet_angle(part, nerve.faces, e));
    }

    for (int p = 2; p <= nerve.complex.dim(); ++p) {
        double ref = 0.0;
        std::int64_t count = 0;
        for (const auto& s : nerve.complex.simplices(p)) {
            const double v2 = rs.higher_inner(simplex_t({s.vertices[0]}), s, s);
            ref += std::sqrt(std::max(0.0, v2));
            ++count;
        }
        if (count == 0) continue;
        ref /= static_cast<double>(count);
        for (const auto& s : nerve.complex.simplices(p)) {
            if (p <= cfg.p_threshold || ref <= 0.0) {
                terms.high[s] = 0.0;
                continue;
            }
            const double v2 = rs.higher_inner(simplex_t({s.vertices[0]}), s, s);
            terms.high[s] = std::pow(std::sqrt(std::max(0.0, v2)) / ref, cfg.beta);
        }
    }
    return terms;
}

double lambda_of(const geom_penalty_config_t& cfg, int k) {
    return k < static_cast<int>(cfg.lambdas.size()) ? cfg.lambdas[k] : 0.0;
}

double total_penalty(const penalty_terms_t& t, const geom_penalty_config_t& cfg) {
    double acc = 0.0;
    for (const auto& [v, x] : t.vertex) acc += lambda_of(cfg, 0) * x;
    for (const auto& [e, x] : t.edge) acc += lambda_of(cfg, 1) * x;
    for (const auto& [s, x] : t.high) acc += lambda_of(cfg, s.dim()) * x;
    return acc;
}

partition_t apply_split(const partition_t& part, const split_candidate_t& split,
                        index_t* out_id_a, index_t* out_id_b) {
    const auto& cell = part.cell(split.cell_id);
    index_t next_id = 0;
    for (const auto& c : part.cells()) next_id = std::max(next_id, c.id);

    partition_cell_t a, b;
    a.id = next_id + 1;
    b.id = next_id + 2;
    a.predictor = cell.predictor;
    b.predictor = cell.predictor;

    if (split.normal.size() == 0) {
        if (!cell.geometry.is_box) {
            throw input_error_t("score_split: axis cut on a non-box cell");
        }
        const box_t& bx = cell.geometry.box;
        if (split.threshold <= bx.lo[split.axis] ||
            split.threshold >= bx.hi[split.axis]) {
            throw input_error_t("score_split: split outside the cell bounds");
        }
        a.geometry.is_box = true;
        b.geometry.is_box = true;
        a.geometry.box = bx;
        b.geometry.box = bx;
        a.geometry.box.hi[split.axis] = split.threshold;
        b.geometry.box.lo[split.axis] = split.threshold;
    } else {
        a.geometry.is_box = false;
        b.geometry.is_box = false;
        if (cell.geometry.is_box) {
            const box_t& bx = cell.geometry.box;
            for (int j = 0; j < bx.dim(); ++j) {
                vec_t e = vec_t::Zero(bx.dim());
                e[j] = 1.0;
                a.geometry.halfspaces.push_back({e, bx.hi[j]});
                a.geometry.halfspaces.push_back({-e, -bx.lo[j]});
            }
        } else {
            a.geometry.halfspaces = cell.geometry.halfspaces;
        }
        b.geometry.halfspaces = a.geometry.halfspaces;
        a.geometry.halfspaces.push_back({split.normal, split.threshold});
        b.geometry.halfspaces.push_back({-split.normal, -split.threshold});
    }

    std::vector<partition_cell_t> cells;
    for (const auto& c : part.cells()) {
        if (c.id != split.cell_id) cells.push_back(c);
    }
    cells.push_back(a);
    cells.push_back(b);
    *out_id_a = a.id;
    *out_id_b = b.id;
    return partition_t(part.domain(), std::move(cells)); // validates interiors
}

} // namespace

double geometric_penalty(const partition_t& partition, int max_dim,
                         const geom_penalty_config_t& cfg) {
    nerve_t nerve = build_nerve(partition, max_dim);
    auto rs = riemannian_structure_t::build(partition, nerve);
    return total_penalty(penalty_terms(partition, nerve, rs, cfg), cfg);
}

split_score_t score_split(const partition_t& partition, const split_candidate_t& split,
                          double impurity_reduction, double eta,
                          const geom_penalty_config_t& cfg, int max_dim) {
    split_score_t result;
    index_t id_a = 0, id_b = 0;
    result.after = apply_split(partition, split, &id_a, &id_b);

    if (eta == 0.0) {
        result.delta_penalty = 0.0;
        result.score = impurity_reduction;
        return result;
    }

    // Affected neighborhood: the split cell, its nerve neighbors, and every
    // simplex touching them. The balanced-volume reference changes globally
    // but only involves cached volumes; terms outside the neighborhood
    // cancel in the difference.
    nerve_t before_nerve = build_nerve(partition, max_dim);
    auto before_rs = riemannian_structure_t::build(partition, before_nerve);
    const auto before = penalty_terms(partition, before_nerve, before_rs, cfg);

    nerve_t after_nerve = build_nerve(result.after, max_dim);
    auto after_rs = riemannian_structure_t::build(result.after, after_nerve);
    const auto after = penalty_terms(result.after, after_nerve, after_rs, cfg);

    std::set<index_t> affected = {split.cell_id, id_a, id_b};
    for (const auto& e : before_nerve.complex.simplices(1)) {
        if (e.vertices[0] == split.cell_id) affected.insert(e.vertices[1]);
        if (e.vertices[1] == split.cell_id) affected.insert(e.vertices[0]);
    }
    auto touches = [&](const simplex_t& s) {
        for (index_t v : s.vertices) {
            if (affected.count(v)) return true;
        }
        return false;
    };

    double delta = 0.0;
    // vertex terms: the volume reference moved, so the whole sums differ
    for (const auto& [v, x] : after.vertex) delta += lambda_of(cfg, 0) * x;
    for (const auto& [v, x] : before.vertex) delta -= lambda_of(cfg, 0) * x;
    // boundary and higher terms change only in the affected neighborhood
    for (const auto& [e, x] : after.edge) {
        if (touches(e)) delta += lambda_of(cfg, 1) * x;
    }
    for (const auto& [e, x] : before.edge) {
        if (touches(e)) delta -= lambda_of(cfg, 1) * x;
    }
    for (const auto& [s, x] : after.high) {
        if (touches(s)) delta += lambda_of(cfg, s.dim()) * x;
    }
    for (const auto& [s, x] : before.high) {
        if (touches(s)) delta -= lambda_of(cfg, s.dim()) * x;
    }

    result.delta_penalty = delta;
    result.score = impurity_reduction - eta * delta;
    return result;
}

std::vector<distribution_summary_t>
curvature_distribution(const std::vector<curvature_snapshot_t>& snapshots) {
    if (snapshots.empty()) {
        throw input_error_t("curvature_distribution: no snapshots");
    }
    std::vector<distribution_summary_t> out;
    const std::array<double, 5> pct = {0.05, 0.25, 0.50, 0.75, 0.95};
    for (const auto& snap : snapshots) {
        distribution_summary_t s;
        s.t = snap.t;
        s.energy = snap.energy;
        if (!snap.values.empty()) {
            std::vector<double> sorted = snap.values;
            std::sort(sorted.begin(), sorted.end());
            const double n = static_cast<double>(sorted.size());
            for (std::size_t q = 0; q < pct.size(); ++q) {
                const double pos = pct[q] * (n - 1.0);
                const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
                const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
                const double frac = pos - static_cast<double>(lo);
                s.quantiles[q] = sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
            }
            s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
            s.fraction_negative =
                static_cast<double>(std::count_if(sorted.begin(), sorted.end(),
                                                  [](double x) { return x < 0.0; })) /
                n;
        }
        out.push_back(s);
    }
    return out;
}

} // namespace riemplex
