#include "riemplex/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace riemplex {

namespace {

// Intersection of two convex cell geometries, nullopt when the interior is
// empty. Boxes stay boxes; anything else collects halfspaces.
std::optional<cell_geometry_t> intersect_geometry(const cell_geometry_t& a,
                                                  const cell_geometry_t& b,
                                                  const domain_t& dom, double tol) {
    if (a.is_box && b.is_box) {
        box_t out;
        out.lo = a.box.lo.cwiseMax(b.box.lo);
        out.hi = a.box.hi.cwiseMin(b.box.hi);
        for (int j = 0; j < out.dim(); ++j) {
            if (out.hi[j] - out.lo[j] <= tol) return std::nullopt;
        }
        cell_geometry_t g;
        g.is_box = true;
        g.box = out;
        return g;
    }
    cell_geometry_t g;
    g.is_box = false;
    auto add_rows = [&](const cell_geometry_t& src) {
        if (src.is_box) {
            for (int j = 0; j < src.box.dim(); ++j) {
                vec_t e = vec_t::Zero(src.box.dim());
                e[j] = 1.0;
                g.halfspaces.push_back({e, src.box.hi[j]});
                g.halfspaces.push_back({-e, -src.box.lo[j]});
            }
        } else {
            for (const auto& h : src.halfspaces) g.halfspaces.push_back(h);
        }
    };
    add_rows(a);
    add_rows(b);
    geom::chebyshev_t ch =
        geom::chebyshev_center(g.halfspaces, dom.bounds.lo, dom.bounds.hi);
    if (!(ch.radius > tol)) return std::nullopt;
    return g;
}

bool same_domain(const domain_t& a, const domain_t& b) {
    return (a.bounds.lo - b.bounds.lo).lpNorm<Eigen::Infinity>() < 1e-12 &&
           (a.bounds.hi - b.bounds.hi).lpNorm<Eigen::Infinity>() < 1e-12;
}

// Is the source-cell set of a tree "together": one cell, or cells whose
// closures share a point.
bool sources_together(const partition_t& tree, std::vector<index_t> sources,
                      double tol) {
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    if (sources.size() <= 1) return true;
    return cells_closure_intersect(tree, sources, tol);
}

} // namespace

ensemble_partition_t refine_ensemble(const std::vector<partition_t>& trees,
                                     double tol) {
    if (trees.empty()) throw input_error_t("refine_ensemble: no trees");
    for (const auto& t : trees) {
        if (!same_domain(t.domain(), trees[0].domain())) {
            throw input_error_t("refine_ensemble: trees on different domains");
        }
    }

    struct piece_t {
        cell_geometry_t geometry;
        std::vector<index_t> sources;
    };
    std::vector<piece_t> pieces;
    for (const auto& c : trees[0].cells()) {
        pieces.push_back({c.geometry, {c.id}});
    }
    for (std::size_t b = 1; b < trees.size(); ++b) {
        std::vector<piece_t> next;
        for (const auto& piece : pieces) {
            for (const auto& c : trees[b].cells()) {
                auto g = intersect_geometry(piece.geometry, c.geometry,
                                            trees[0].domain(), tol);
                if (!g) continue;
                piece_t refined{std::move(*g), piece.sources};
                refined.sources.push_back(c.id);
                next.push_back(std::move(refined));
            }
        }
        pieces = std::move(next);
    }

    // deterministic ids in provenance order
    std::sort(pieces.begin(), pieces.end(),
              [](const piece_t& a, const piece_t& b) { return a.sources < b.sources; });

    ensemble_partition_t out;
    out.trees = trees;
    std::vector<partition_cell_t> cells;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        partition_cell_t c;
        c.id = static_cast<index_t>(i);
        c.geometry = pieces[i].geometry;
        cells.push_back(std::move(c));
        out.provenance[static_cast<index_t>(i)] = pieces[i].sources;
    }
    out.refined = partition_t(trees[0].domain(), std::move(cells));
    return out;
}

double cooccurrence(const ensemble_partition_t& ens,
                    const std::vector<index_t>& refined_cells,
                    std::optional<double> eta) {
    if (refined_cells.empty()) {
        throw input_error_t("cooccurrence: empty cell set");
    }
    for (index_t id : refined_cells) {
        if (ens.provenance.find(id) == ens.provenance.end()) {
            throw input_error_t("cooccurrence: unknown refined cell");
        }
    }
    const std::size_t B = ens.trees.size();
    double num = 0.0, den = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        std::vector<index_t> sources;
        for (index_t id : refined_cells) {
            sources.push_back(ens.provenance.at(id)[b]);
        }
        const double indicator =
            sources_together(ens.trees[b], std::move(sources), 1e-9) ? 1.0 : 0.0;
        const double w = eta ? std::pow(*eta, static_cast<double>(b + 1)) : 1.0;
        num += w * indicator;
        den += w;
    }
    return num / den;
}

double ensemble_freq(const ensemble_partition_t& ens, index_t refined_cell) {
    auto it = ens.provenance.find(refined_cell);
    if (it == ens.provenance.end()) {
        throw input_error_t("ensemble_freq: unknown refined cell");
    }
    // every source cell contains its refined piece by construction
    std::size_t containing = 0;
    for (std::size_t b = 0; b < ens.trees.size(); ++b) {
        if (ens.trees[b].has_cell(it->second[b])) ++containing;
    }
    return static_cast<double>(containing) / static_cast<double>(ens.trees.size());
}

std::vector<double> default_ensemble_lambdas(const nerve_t& nerve,
                                             const riemannian_structure_t& rs) {
    std::vector<double> lambdas(static_cast<std::size_t>(nerve.complex.dim()) + 1, 0.0);
    // dimension 0: mean cell volume
    {
        double acc = 0.0;
        std::int64_t count = 0;
        for (const auto& v : nerve.complex.simplices(0)) {
            acc += cell_volume(rs.partition(), v.vertices[0]).value;
            ++count;
        }
        if (count > 0) lambdas[0] = acc / static_cast<double>(count);
    }
    for (int p = 1; p <= nerve.complex.dim(); ++p) {
        double acc = 0.0;
        std::int64_t count = 0;
        for (const auto& s : nerve.complex.simplices(p)) {
            acc += nerve.faces.at(s).measure;
            ++count;
        }
        if (count > 0) lambdas[static_cast<std::size_t>(p)] =
            acc / static_cast<double>(count);
    }
    return lambdas;
}

riemannian_structure_t ensemble_metric(const ensemble_partition_t& ens, int max_dim,
                                       std::vector<double> lambdas,
                                       std::optional<double> eta) {
    nerve_t nerve = build_nerve(ens.refined, max_dim);
    auto rs = riemannian_structure_t::build(ens.refined, nerve);
    if (lambdas.empty()) {
        nerve_t nerve2 = build_nerve(ens.refined, max_dim);
        lambdas = default_ensemble_lambdas(nerve2, rs);
    }
    ensemble_terms_t terms;
    terms.lambdas = std::move(lambdas);
    // the provider copies the ensemble so the structure owns its inputs
    auto shared = std::make_shared<ensemble_partition_t>(ens);
    terms.cooccurrence = [shared, eta](const std::vector<index_t>& ids) {
        return cooccurrence(*shared, ids, eta);
    };
    terms.freq = [shared](index_t id) { return ensemble_freq(*shared, id); };
    rs.set_ensemble(std::move(terms));
    return rs;
}

// ================================================================
// Boosting
// ================================================================

boosting_state_t boosting_state_t::start(partition_t first_tree,
                                         std::optional<double> lambda1, int max_dim) {
    boosting_state_t st;
    st.m_ = 1;
    st.max_dim_ = max_dim;
    st.ens_ = refine_ensemble({std::move(first_tree)});

    nerve_t nerve = build_nerve(st.ens_.refined, max_dim);
    if (lambda1) {
        st.lambda1_ = *lambda1;
    } else {
        // frozen at the baseline mean facet volume, 1.0 on a single cell
        auto rs = riemannian_structure_t::build(st.ens_.refined, nerve);
        nerve_t nerve2 = build_nerve(st.ens_.refined, max_dim);
        auto lambdas = default_ensemble_lambdas(nerve2, rs);
        st.lambda1_ = lambdas.size() > 1 && lambdas[1] > 0.0 ? lambdas[1] : 1.0;
    }

    for (const auto& e : nerve.complex.simplices(1)) {
        st.k_[{e.vertices[0], e.vertices[1]}] = 1.0; // one tree, adjacent
    }
    st.append_diagnostics();
    return st;
}

double boosting_state_t::k_value(index_t u, index_t v) const {
    if (u == v) return 1.0; // shared source in every tree
    auto key = std::minmax(u, v);
    auto it = k_.find({key.first, key.second});
    return it == k_.end() ? 0.0 : it->second;
}

boosting_deltas_t boosting_state_t::step(partition_t next_tree) {
    if (!same_domain(next_tree.domain(), ens_.refined.domain())) {
        throw input_error_t("boosting_step: tree on a different domain");
    }
    std::vector<partition_t> trees = ens_.trees;
    trees.push_back(std::move(next_tree));
    ensemble_partition_t next = refine_ensemble(trees);
    const partition_t& new_tree = next.trees.back();

    // parent of a new refined cell: the old refined cell with the same
    // source tuple over the first m trees
    std::map<std::vector<index_t>, index_t> old_by_sources;
    for (const auto& [id, src] : ens_.provenance) old_by_sources[src] = id;
    std::map<index_t, index_t> parent;
    for (const auto& [id, src] : next.provenance) {
        std::vector<index_t> head(src.begin(), src.end() - 1);
        parent[id] = old_by_sources.at(head);
    }

    nerve_t nerve = build_nerve(next.refined, max_dim_);
    nerve_t old_nerve = build_nerve(ens_.refined, max_dim_);

    boosting_deltas_t deltas;
    std::map<std::pair<index_t, index_t>, double> k_next;
    for (const auto& e : nerve.complex.simplices(1)) {
        const index_t u = e.vertices[0], v = e.vertices[1];
        const index_t pu = parent.at(u), pv = parent.at(v);
        const double k_old = k_value(pu, pv);

        const index_t su = next.provenance.at(u).back();
        const index_t sv = next.provenance.at(v).back();
        const bool adj_new =
            su == sv || cells_closure_intersect(new_tree, {su, sv}, 1e-9);

        const double k_new = (static_cast<double>(m_) * k_old + (adj_new ? 1.0 : 0.0)) /
                             static_cast<double>(m_ + 1);
        k_next[{u, v}] = k_new;

        boosting_deltas_t::pair_delta_t d;
        d.u = u;
        d.v = v;
        d.parent_u = pu;
        d.parent_v = pv;
        d.k_after = k_new;
        d.delta_ens = lambda1_ / static_cast<double>(m_ + 1) *
                      ((adj_new ? 1.0 : 0.0) - k_old);

        const double vol_new = nerve.faces.at(e).measure *
                               (nerve.faces.at(e).dim ==
                                        next.refined.domain().dim() - 1
                                    ? 1.0
                                    : 0.0);
        double vol_old = 0.0;
        if (pu != pv) {
            const simplex_t pe({std::min(pu, pv), std::max(pu, pv)});
            auto it = old_nerve.faces.find(pe);
            if (it != old_nerve.faces.end() &&
                it->second.dim == ens_.refined.domain().dim() - 1) {
                vol_old = it->second.measure;
            }
        }
        d.delta_geom = vol_new - vol_old;
        deltas.pairs.push_back(d);
    }

    ens_ = std::move(next);
    k_ = std::move(k_next);
    ++m_;
    append_diagnostics();
    return deltas;
}

void boosting_state_t::append_diagnostics() {
    nerve_t nerve = build_nerve(ens_.refined, max_dim_);
    auto rs = riemannian_structure_t::build(ens_.refined, nerve);
    ensemble_terms_t terms;
    terms.lambdas = {0.0, lambda1_};
    terms.cooccurrence = [this](const std::vector<index_t>& ids) {
        if (ids.size() == 2) return k_value(ids[0], ids[1]);
        // higher-order queries during a run fall back to the batch value
        return cooccurrence(ens_, ids);
    };
    rs.set_ensemble(std::move(terms));

    // geometric energy of the iteration: sum of log condition numbers over
    // the facet-sharing part of each vertex Gram
    double energy = 0.0;
    for (const auto& v : rs.complex().simplices(0)) {
        mat_t G = rs.star_gram(v, 1);
        std::vector<int> keep;
        for (int i = 0; i < G.rows(); ++i) {
            if (G(i, i) > 0.0) keep.push_back(i);
        }
        if (keep.size() < 1) continue;
        mat_t S(static_cast<int>(keep.size()), static_cast<int>(keep.size()));
        for (std::size_t a = 0; a < keep.size(); ++a)
            for (std::size_t b = 0; b < keep.size(); ++b)
                S(static_cast<int>(a), static_cast<int>(b)) = G(keep[a], keep[b]);
        Eigen::SelfAdjointEigenSolver<mat_t> eig(S);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (lo > 1e-12 * std::max(hi, 0.0)) energy += std::log(hi / lo);
        else energy += std::log(1e12);
    }
    energy_.push_back(energy);

    auto ops = hodge_operators_t::build(rs);
    spectra_.push_back(spectrum_of(ops));
}

spectral_signature_t boosting_state_t::signature(std::size_t at) const {
    return spectral_signature(spectra_, at, 0);
}

double boosting_state_t::geometric_health() const {
    return signature(spectra_.size() - 1).geometric_health;
}

double boosting_state_t::regularized_tree_penalty(const partition_t& candidate) const {
    if (!same_domain(candidate.domain(), ens_.refined.domain())) {
        throw input_error_t("regularized_tree_penalty: domain mismatch");
    }
    std::vector<partition_t> trees = ens_.trees;
    trees.push_back(candidate);
    ensemble_partition_t next = refine_ensemble(trees);

    std::map<std::vector<index_t>, index_t> old_by_sources;
    for (const auto& [id, src] : ens_.provenance) old_by_sources[src] = id;

    nerve_t nerve = build_nerve(next.refined, 1);
    const int n = next.refined.domain().dim();
    double acc = 0.0;
    for (const auto& e : nerve.complex.simplices(1)) {
        // adjacency in the boundary sense: a shared facet, not a corner
        if (nerve.faces.at(e).dim != n - 1) continue;
        const auto& su = next.provenance.at(e.vertices[0]);
        const auto& sv = next.provenance.at(e.vertices[1]);
        const index_t cu = su.back(), cv = sv.back();
        // pairs the candidate actively separates across one of its cuts
        if (cu == cv) continue;
        if (!cells_closure_intersect(candidate, {cu, cv}, 1e-9)) continue;
        const index_t pu = old_by_sources.at({su.begin(), su.end() - 1});
        const index_t pv = old_by_sources.at({sv.begin(), sv.end() - 1});
        acc += k_value(pu, pv);
    }
    return -acc;
}

// ================================================================
// Fixture trainer
// ================================================================

namespace {

struct cart_node_t {
    box_t box;
    std::vector<index_t> points;
};

} // namespace

partition_t train_cart(const dataset_t& data, const domain_t& domain, int max_depth,
                       index_t min_leaf) {
    if (!data.has_y) throw input_error_t("train_cart: responses required");
    const int n = domain.dim();

    std::vector<cart_node_t> leaves;
    cart_node_t root;
    root.box = domain.bounds;
    for (index_t i = 0; i < data.size(); ++i) root.points.push_back(i);

    std::vector<std::pair<cart_node_t, int>> stack = {{root, 0}};
    while (!stack.empty()) {
        auto [node, depth] = stack.back();
        stack.pop_back();

        auto variance = [&](const std::vector<index_t>& pts) {
            if (pts.empty()) return 0.0;
            double mean = 0.0;
            for (index_t i : pts) mean += data.y[i];
            mean /= static_cast<double>(pts.size());
            double acc = 0.0;
            for (index_t i : pts) acc += (data.y[i] - mean) * (data.y[i] - mean);
            return acc;
        };

        double best_gain = 1e-12;
        int best_axis = -1;
        double best_cut = 0.0;
        if (depth < max_depth &&
            static_cast<index_t>(node.points.size()) >= 2 * min_leaf) {
            const double parent_sse = variance(node.points);
            for (int axis = 0; axis < n; ++axis) {
                std::vector<double> vals;
                for (index_t i : node.points) vals.push_back(data.X(i, axis));
                std::sort(vals.begin(), vals.end());
                vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
                for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
                    const double cut = 0.5 * (vals[k] + vals[k + 1]);
                    std::vector<index_t> left, right;
                    for (index_t i : node.points) {
                        (data.X(i, axis) <= cut ? left : right).push_back(i);
                    }
                    if (static_cast<index_t>(left.size()) < min_leaf ||
                        static_cast<index_t>(right.size()) < min_leaf)
                        continue;
                    const double gain = parent_sse - variance(left) - variance(right);
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_axis = axis;
                        best_cut = cut;
                    }
                }
            }
        }

        if (best_axis < 0) {
            leaves.push_back(node);
            continue;
        }
        cart_node_t left, right;
        left.box = node.box;
        right.box = node.box;
        left.box.hi[best_axis] = best_cut;
        right.box.lo[best_axis] = best_cut;
        for (index_t i : node.points) {
            (data.X(i, best_axis) <= best_cut ? left.points : right.points)
                .push_back(i);
        }
        stack.push_back({right, depth + 1});
        stack.push_back({left, depth + 1});
    }

    std::vector<partition_cell_t> cells;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        partition_cell_t c;
        c.id = static_cast<index_t>(i);
        c.geometry.is_box = true;
        c.geometry.box = leaves[i].box;
        double mean = 0.0;
        for (index_t p : leaves[i].points) mean += data.y[p];
        if (!leaves[i].points.empty()) {
            mean /= static_cast<double>(leaves[i].points.size());
        }
        c.predictor.kind = predictor_t::kind_t::CONSTANT;
        c.predictor.constant = vec_t::Constant(1, mean);
        cells.push_back(std::move(c));
    }
    partition_t out(domain, std::move(cells));
    out.index_data(data);
    return out;
}

} // namespace riemplex
