#include "riemplex/nn.hpp"

#include <algorithm>
#include <cmath>

namespace riemplex {

std::vector<int> activation_pattern(const layer_spec_t& layer, const vec_t& x) {
    std::vector<int> pattern(layer.out_dim());
    const vec_t z = layer.W * x + layer.b;
    for (int j = 0; j < layer.out_dim(); ++j) pattern[j] = z[j] > 0.0 ? 1 : 0;
    return pattern;
}

void pattern_affine(const layer_spec_t& layer, const std::vector<int>& pattern,
                    mat_t& W_alpha, vec_t& b_alpha) {
    W_alpha = layer.W;
    b_alpha = layer.b;
    for (int j = 0; j < layer.out_dim(); ++j) {
        if (!pattern[j]) {
            W_alpha.row(j).setZero();
            b_alpha[j] = 0.0;
        }
    }
}

std::vector<geom::halfspace_t> pattern_halfspaces(const layer_spec_t& layer,
                                                  const std::vector<int>& pattern) {
    std::vector<geom::halfspace_t> rows;
    for (int j = 0; j < layer.out_dim(); ++j) {
        const vec_t w = layer.W.row(j).transpose();
        if (pattern[j]) {
            rows.push_back({-w, layer.b[j]}); // w.x + b >= 0
        } else {
            rows.push_back({w, -layer.b[j]}); // w.x + b <= 0
        }
    }
    return rows;
}

partition_t layer_partition(const layer_spec_t& layer, const domain_t& domain,
                            const mat_t& data) {
    if (data.rows() == 0) {
        throw input_error_t("layer_partition: activation cells need data witnesses");
    }
    if (static_cast<int>(data.cols()) != layer.in_dim()) {
        throw input_error_t("layer_partition: data dimension does not match the layer");
    }
    std::set<std::vector<int>> patterns;
    for (index_t i = 0; i < data.rows(); ++i) {
        patterns.insert(activation_pattern(layer, data.row(i).transpose()));
    }
    std::vector<partition_cell_t> cells;
    index_t id = 0;
    for (const auto& pat : patterns) {
        partition_cell_t c;
        c.id = id++;
        c.geometry.is_box = false;
        c.geometry.halfspaces = pattern_halfspaces(layer, pat);
        c.predictor.kind = predictor_t::kind_t::AFFINE;
        pattern_affine(layer, pat, c.predictor.W, c.predictor.b);
        cells.push_back(std::move(c));
    }
    partition_t out(domain, std::move(cells));
    dataset_t ds;
    ds.X = data;
    out.index_data(ds);
    return out;
}

namespace {

// Pull a target-space halfspace u.y <= c back through y = Wx + b.
geom::halfspace_t pull_back(const geom::halfspace_t& h, const mat_t& W,
                            const vec_t& b) {
    return {W.transpose() * h.a, h.c - h.a.dot(b)};
}

std::vector<geom::halfspace_t> closure_rows(const partition_t& part, index_t id) {
    std::vector<geom::halfspace_t> rows;
    vec_t lo, hi;
    part.closure_system(id, rows, lo, hi);
    const int n = part.domain().dim();
    for (int j = 0; j < n; ++j) {
        vec_t e = vec_t::Zero(n);
        e[j] = 1.0;
        rows.push_back({e, hi[j]});
        rows.push_back({-e, -lo[j]});
    }
    return rows;
}

} // namespace

refine_result_t refine_layer(const partition_t& prev, const layer_spec_t& layer,
                             const partition_t& next, int max_dim, double tol,
                             member_fn_t next_member) {
    if (!next_member) {
        next_member = [&next](const vec_t& z) {
            auto id = next.locate(z);
            return id ? *id : NO_VERTEX;
        };
    }
    refine_result_t out;
    std::vector<partition_cell_t> cells;
    index_t id = 0;

    struct meta_t {
        index_t source;
        index_t target;
        std::vector<int> pattern;
    };
    std::vector<meta_t> metas;

    for (const auto& src : prev.cells()) {
        if (src.predictor.kind != predictor_t::kind_t::AFFINE) {
            throw input_error_t("refine_layer: source cells carry no affine map");
        }
        const mat_t& W = src.predictor.W;
        const vec_t& b = src.predictor.b;
        // recover the pattern from the zeroed rows
        std::vector<int> pattern(layer.out_dim());
        for (int j = 0; j < layer.out_dim(); ++j) {
            pattern[j] = W.row(j).norm() > 0.0 || b[j] != 0.0 ? 1 : 0;
        }

        std::vector<geom::halfspace_t> src_rows;
        vec_t lo, hi;
        prev.closure_system(src.id, src_rows, lo, hi);

        for (const auto& tgt : next.cells()) {
            std::vector<geom::halfspace_t> rows = src_rows;
            for (const auto& h : closure_rows(next, tgt.id)) {
                rows.push_back(pull_back(h, W, b));
            }
            geom::chebyshev_t ch = geom::chebyshev_center(rows, lo, hi);
            if (!(ch.radius > tol)) continue;
            // half-open membership: the image of the interior must really
            // live in this target, not merely touch its closure
            if (next_member(W * ch.center + b) != tgt.id) continue;

            partition_cell_t c;
            c.id = id;
            c.geometry.is_box = false;
            c.geometry.halfspaces = rows;
            c.predictor = src.predictor;
            cells.push_back(std::move(c));
            metas.push_back({src.id, tgt.id, pattern});
            ++id;
        }
    }
    if (cells.empty()) {
        throw internal_error_t("refine_layer: no refined cells survive");
    }

    out.refined = partition_t(prev.domain(), std::move(cells));
    for (std::size_t i = 0; i < metas.size(); ++i) {
        out.vertex_map[static_cast<index_t>(i)] = metas[i].target;
        out.source_cell[static_cast<index_t>(i)] = metas[i].source;
        out.source_pattern[static_cast<index_t>(i)] = metas[i].pattern;
    }

    // Simplicial-map verification: image vertices of every refined simplex
    // must span a simplex of the next nerve.
    nerve_t refined_nerve = build_nerve(out.refined, max_dim, tol);
    nerve_t next_nerve = build_nerve(next, max_dim, tol);
    for (const auto& s : refined_nerve.complex.all_simplices()) {
        std::set<index_t> image;
        for (index_t v : s.vertices) image.insert(out.vertex_map.at(v));
        const simplex_t img(std::vector<index_t>(image.begin(), image.end()));
        if (!next_nerve.complex.contains(img)) {
            std::string msg = "refine_layer: image of {";
            for (index_t v : s.vertices) msg += std::to_string(v) + " ";
            msg += "} spans no simplex in the target nerve";
            throw internal_error_t(msg);
        }
    }
    return out;
}

pullback_result_t pullback_volume(const partition_t& level_partition,
                                  index_t refined_cell, const mat_t& W_alpha,
                                  const volume_options_t& opts) {
    pullback_result_t out;
    volume_result_t src = cell_volume(level_partition, refined_cell, opts);
    out.source_volume = src.value;
    out.exact = src.exact;
    out.std_error = src.std_error;

    if (W_alpha.rows() != W_alpha.cols()) {
        out.rank_deficient = true;
        out.value = 0.0; // the image lives in a lower-dimensional subspace
        return out;
    }
    const double det = W_alpha.determinant();
    if (std::abs(det) < 1e-12) {
        out.rank_deficient = true;
        out.value = 0.0;
        return out;
    }
    out.value = std::abs(det) * src.value;
    out.std_error = std::abs(det) * src.std_error;
    return out;
}

layer_sequence_t backward_sequence(const std::vector<layer_spec_t>& layers,
                                   const domain_t& domain, const mat_t& data,
                                   int max_dim) {
    if (layers.empty()) throw input_error_t("backward_sequence: no layers");
    if (data.rows() == 0) throw input_error_t("backward_sequence: no data");

    const int L = static_cast<int>(layers.size());
    layer_sequence_t seq;
    seq.layers = layers;

    // forward images of the data at every level
    seq.data_images.push_back(data);
    for (int l = 0; l < L; ++l) {
        const mat_t& Z = seq.data_images.back();
        mat_t next(Z.rows(), layers[l].out_dim());
        for (index_t i = 0; i < Z.rows(); ++i) {
            vec_t y = layers[l].W * Z.row(i).transpose() + layers[l].b;
            next.row(i) = y.cwiseMax(0.0).transpose();
        }
        seq.data_images.push_back(next);
    }

    std::vector<domain_t> domains(L);
    domains[0] = domain;
    for (int l = 1; l < L; ++l) domains[l] = domain_from_points(seq.data_images[l]);

    // deepest level first: its own layer partition, nothing to refine
    std::vector<nn_level_t> levels(L);
    {
        nn_level_t& top = levels[L - 1];
        top.level = L - 1;
        top.domain = domains[L - 1];
        top.partition =
            layer_partition(layers[L - 1], domains[L - 1], seq.data_images[L - 1]);
        top.nerve = build_nerve(top.partition, max_dim);
        for (const auto& c : top.partition.cells()) {
            top.vertex_map[c.id] = 0; // the single terminal output region
            std::vector<int> pattern(layers[L - 1].out_dim());
            const mat_t& W = c.predictor.W;
            for (int j = 0; j < layers[L - 1].out_dim(); ++j) {
                pattern[j] =
                    W.row(j).norm() > 0.0 || c.predictor.b[j] != 0.0 ? 1 : 0;
            }
            top.source_pattern[c.id] = pattern;
            top.affine_W[c.id] = c.predictor.W;
            top.affine_b[c.id] = c.predictor.b;
            top.lookup[{pattern, 0}] = c.id;
        }
    }

    // membership through the pattern chain, resolved from the top down
    std::function<index_t(int, const vec_t&)> member = [&](int l,
                                                           const vec_t& z) -> index_t {
        const auto pattern = activation_pattern(layers[l], z);
        index_t target = 0;
        if (l < L - 1) {
            mat_t W_a;
            vec_t b_a;
            pattern_affine(layers[l], pattern, W_a, b_a);
            target = member(l + 1, W_a * z + b_a);
            if (target == NO_VERTEX) return NO_VERTEX;
        }
        auto it = levels[l].lookup.find({pattern, target});
        return it == levels[l].lookup.end() ? NO_VERTEX : it->second;
    };

    for (int l = L - 2; l >= 0; --l) {
        partition_t base = layer_partition(layers[l], domains[l], seq.data_images[l]);
        member_fn_t next_member = [&member, l](const vec_t& z) {
            return member(l + 1, z);
        };
        refine_result_t res = refine_layer(base, layers[l], levels[l + 1].partition,
                                           max_dim, 1e-9, next_member);
        nn_level_t& lvl = levels[l];
        lvl.level = l;
        lvl.domain = domains[l];
        lvl.partition = std::move(res.refined);
        lvl.nerve = build_nerve(lvl.partition, max_dim);
        lvl.vertex_map = std::move(res.vertex_map);
        lvl.source_pattern = std::move(res.source_pattern);
        for (const auto& c : lvl.partition.cells()) {
            lvl.affine_W[c.id] = c.predictor.W;
            lvl.affine_b[c.id] = c.predictor.b;
            lvl.lookup[{lvl.source_pattern.at(c.id), lvl.vertex_map.at(c.id)}] = c.id;
        }
    }

    // index each level's data image with the half-open membership
    for (int l = 0; l < L; ++l) {
        dataset_t ds;
        ds.X = seq.data_images[l];
        levels[l].partition.index_data_with(
            ds, [&member, l](const vec_t& z) { return member(l, z); });
    }
    seq.levels = std::move(levels);

    // composed pullback volumes for the K^(0) cells
    for (const auto& c : seq.levels[0].partition.cells()) {
        mat_t W_tot = seq.levels[0].affine_W.at(c.id);
        vec_t b_tot = seq.levels[0].affine_b.at(c.id);
        index_t cursor = seq.levels[0].vertex_map.at(c.id);
        bool square = W_tot.rows() == W_tot.cols();
        for (int l = 1; l < L; ++l) {
            const mat_t& Wn = seq.levels[l].affine_W.at(cursor);
            const vec_t& bn = seq.levels[l].affine_b.at(cursor);
            b_tot = Wn * b_tot + bn;
            W_tot = Wn * W_tot;
            square = square && Wn.rows() == Wn.cols();
            if (l + 1 < L) cursor = seq.levels[l].vertex_map.at(cursor);
        }
        const double src = cell_volume(seq.levels[0].partition, c.id).value;
        if (square && W_tot.rows() == W_tot.cols() &&
            std::abs(W_tot.determinant()) > 1e-12) {
            seq.composed_volume[c.id] = std::abs(W_tot.determinant()) * src;
            seq.composed_exact[c.id] = true;
        } else {
            seq.composed_volume[c.id] = 0.0; // image collapses or changes dim
            seq.composed_exact[c.id] = false;
            seq.notes.push_back("cell " + std::to_string(c.id) +
                                ": composed map not invertible, image volume 0");
        }
    }
    return seq;
}

enriched_complex_t enriched_complex(const layer_sequence_t& seq,
                                    const volume_options_t& vol_opts) {
    if (seq.levels.empty()) throw input_error_t("enriched_complex: empty sequence");
    enriched_complex_t out;
    const nn_level_t& level0 = seq.levels.front();
    nerve_t nerve = build_nerve(level0.partition, level0.nerve.complex.max_dim_cap());
    out.structure =
        riemannian_structure_t::build(level0.partition, std::move(nerve), vol_opts);

    const int L = static_cast<int>(seq.layers.size());
    for (const auto& c : level0.partition.cells()) {
        mat_t W_tot = level0.affine_W.at(c.id);
        vec_t b_tot = level0.affine_b.at(c.id);
        index_t cursor = level0.vertex_map.at(c.id);
        for (int l = 1; l < L; ++l) {
            const mat_t& Wn = seq.levels[l].affine_W.at(cursor);
            const vec_t& bn = seq.levels[l].affine_b.at(cursor);
            b_tot = Wn * b_tot + bn;
            W_tot = Wn * W_tot;
            if (l + 1 < L) cursor = seq.levels[l].vertex_map.at(cursor);
        }
        out.full_W[c.id] = W_tot;
        out.full_b[c.id] = b_tot;
    }
    return out;
}

std::vector<std::vector<int>> pattern_chain(const std::vector<layer_spec_t>& layers,
                                            const vec_t& x) {
    std::vector<std::vector<int>> chain;
    vec_t z = x;
    for (const auto& layer : layers) {
        chain.push_back(activation_pattern(layer, z));
        z = (layer.W * z + layer.b).cwiseMax(0.0);
    }
    return chain;
}

index_t level_member(const layer_sequence_t& seq, std::size_t level, const vec_t& z) {
    const auto& layer = seq.layers[level];
    const auto pattern = activation_pattern(layer, z);
    index_t target = 0;
    if (level + 1 < seq.levels.size()) {
        mat_t W_a;
        vec_t b_a;
        pattern_affine(layer, pattern, W_a, b_a);
        target = level_member(seq, level + 1, W_a * z + b_a);
        if (target == NO_VERTEX) return NO_VERTEX;
    }
    auto it = seq.levels[level].lookup.find({pattern, target});
    return it == seq.levels[level].lookup.end() ? NO_VERTEX : it->second;
}

std::vector<index_t> cell_chain(const layer_sequence_t& seq, const vec_t& x) {
    std::vector<index_t> chain;
    vec_t z = x;
    for (std::size_t l = 0; l < seq.levels.size(); ++l) {
        chain.push_back(level_member(seq, l, z));
        mat_t W_a;
        vec_t b_a;
        pattern_affine(seq.layers[l], activation_pattern(seq.layers[l], z), W_a, b_a);
        z = W_a * z + b_a;
    }
    return chain;
}

} // namespace riemplex
