#include "riemplex/io.hpp"

#include <fstream>
#include <sstream>

namespace riemplex::io {

namespace {

vec_t vec_from(const json& arr) {
    vec_t v(static_cast<index_t>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<index_t>(i)] = arr[i];
    return v;
}

json vec_to(const vec_t& v) {
    json arr = json::array();
    for (index_t i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

mat_t mat_from(const json& rows) {
    if (rows.empty()) return mat_t(0, 0);
    mat_t M(static_cast<index_t>(rows.size()),
            static_cast<index_t>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) {
            throw validation_error_t("matrix rows have unequal lengths");
        }
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            M(static_cast<index_t>(i), static_cast<index_t>(j)) = rows[i][j];
        }
    }
    return M;
}

json mat_to(const mat_t& M) {
    json rows = json::array();
    for (index_t i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (index_t j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(row);
    }
    return rows;
}

json simplex_to(const simplex_t& s) {
    json arr = json::array();
    for (index_t v : s.vertices) arr.push_back(v);
    return arr;
}

} // namespace

partition_t parse_partition(const json& doc) {
    try {
        if (!doc.contains("domain") || !doc["domain"].contains("bounds")) {
            throw validation_error_t("partition: missing domain.bounds");
        }
        const auto& bounds = doc["domain"]["bounds"];
        const int n = static_cast<int>(bounds.size());
        domain_t dom;
        dom.bounds.lo.resize(n);
        dom.bounds.hi.resize(n);
        for (int j = 0; j < n; ++j) {
            dom.bounds.lo[j] = bounds[j][0];
            dom.bounds.hi[j] = bounds[j][1];
        }

        if (!doc.contains("cells") || doc["cells"].empty()) {
            throw validation_error_t("partition: empty cell list");
        }
        std::vector<partition_cell_t> cells;
        for (const auto& jc : doc["cells"]) {
            partition_cell_t c;
            if (!jc.contains("id")) throw validation_error_t("cell: missing id");
            c.id = jc["id"];
            if (jc.contains("box")) {
                c.geometry.is_box = true;
                const auto& bx = jc["box"];
                if (static_cast<int>(bx.size()) != n) {
                    throw validation_error_t("cell: box dimension mismatch");
                }
                c.geometry.box.lo.resize(n);
                c.geometry.box.hi.resize(n);
                for (int j = 0; j < n; ++j) {
                    c.geometry.box.lo[j] = bx[j][0];
                    c.geometry.box.hi[j] = bx[j][1];
                }
            } else if (jc.contains("halfspaces")) {
                c.geometry.is_box = false;
                for (const auto& jh : jc["halfspaces"]) {
                    // stored as w.x + b <= 0
                    geom::halfspace_t h;
                    h.a = vec_from(jh["w"]);
                    if (h.a.size() != n) {
                        throw validation_error_t("halfspace dimension mismatch");
                    }
                    h.c = -static_cast<double>(jh["b"]);
                    c.geometry.halfspaces.push_back(std::move(h));
                }
            } else {
                throw validation_error_t("cell: needs box or halfspaces");
            }
            if (jc.contains("predictor")) {
                const auto& jp = jc["predictor"];
                if (jp.contains("constant")) {
                    c.predictor.kind = predictor_t::kind_t::CONSTANT;
                    if (jp["constant"].is_array()) {
                        c.predictor.constant = vec_from(jp["constant"]);
                    } else {
                        c.predictor.constant =
                            vec_t::Constant(1, static_cast<double>(jp["constant"]));
                    }
                } else if (jp.contains("affine")) {
                    c.predictor.kind = predictor_t::kind_t::AFFINE;
                    c.predictor.W = mat_from(jp["affine"]["W"]);
                    c.predictor.b = vec_from(jp["affine"]["b"]);
                }
            }
            cells.push_back(std::move(c));
        }
        return partition_t(std::move(dom), std::move(cells));
    } catch (const json::exception& e) {
        throw validation_error_t(std::string("partition: malformed JSON: ") + e.what());
    }
}

partition_t load_partition(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw input_error_t(std::string("cannot parse ") + path + ": " + e.what());
    }
    return parse_partition(doc);
}

json partition_to_json(const partition_t& part) {
    json doc;
    json bounds = json::array();
    for (int j = 0; j < part.domain().dim(); ++j) {
        bounds.push_back({part.domain().bounds.lo[j], part.domain().bounds.hi[j]});
    }
    doc["domain"]["bounds"] = bounds;
    json cells = json::array();
    for (const auto& c : part.cells()) {
        json jc;
        jc["id"] = c.id;
        if (c.geometry.is_box) {
            json bx = json::array();
            for (int j = 0; j < c.geometry.box.dim(); ++j) {
                bx.push_back({c.geometry.box.lo[j], c.geometry.box.hi[j]});
            }
            jc["box"] = bx;
        } else {
            json hs = json::array();
            for (const auto& h : c.geometry.halfspaces) {
                hs.push_back({{"w", vec_to(h.a)}, {"b", -h.c}});
            }
            jc["halfspaces"] = hs;
        }
        if (c.predictor.kind == predictor_t::kind_t::CONSTANT) {
            jc["predictor"]["constant"] = vec_to(c.predictor.constant);
        } else if (c.predictor.kind == predictor_t::kind_t::AFFINE) {
            jc["predictor"]["affine"]["W"] = mat_to(c.predictor.W);
            jc["predictor"]["affine"]["b"] = vec_to(c.predictor.b);
        }
        cells.push_back(jc);
    }
    doc["cells"] = cells;
    return doc;
}

dataset_t load_dataset_csv(const std::string& path, int expected_features) {
    std::istringstream in(read_text(path));
    std::string line;
    std::vector<std::vector<double>> rows;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (first) {
            first = false;
            try {
                (void)std::stod(fields.at(0));
            } catch (...) {
                continue; // header line
            }
        }
        std::vector<double> vals;
        for (const auto& f : fields) {
            try {
                vals.push_back(std::stod(f));
            } catch (...) {
                throw validation_error_t("dataset: non-numeric field '" + f + "'");
            }
        }
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw validation_error_t("dataset: no data rows");

    const int cols = static_cast<int>(rows[0].size());
    if (cols != expected_features && cols != expected_features + 1) {
        throw validation_error_t("dataset: expected " +
                                 std::to_string(expected_features) +
                                 " feature columns (plus optional response)");
    }
    dataset_t out;
    out.has_y = cols == expected_features + 1;
    out.X.resize(static_cast<index_t>(rows.size()), expected_features);
    if (out.has_y) out.y.resize(static_cast<index_t>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<int>(rows[i].size()) != cols) {
            throw validation_error_t("dataset: ragged row " + std::to_string(i));
        }
        for (int j = 0; j < expected_features; ++j) {
            out.X(static_cast<index_t>(i), j) = rows[i][j];
        }
        if (out.has_y) out.y[static_cast<index_t>(i)] = rows[i][expected_features];
    }
    return out;
}

std::vector<layer_spec_t> parse_network(const json& doc) {
    try {
        if (!doc.contains("layers") || doc["layers"].empty()) {
            throw validation_error_t("network: missing layers");
        }
        std::vector<layer_spec_t> layers;
        for (const auto& jl : doc["layers"]) {
            layer_spec_t layer;
            layer.W = mat_from(jl["W"]);
            layer.b = vec_from(jl["b"]);
            if (layer.b.size() != layer.W.rows()) {
                throw validation_error_t("network: bias length != weight rows");
            }
            if (!layers.empty() && layers.back().out_dim() != layer.in_dim()) {
                throw validation_error_t("network: consecutive layer shape mismatch");
            }
            layers.push_back(std::move(layer));
        }
        return layers;
    } catch (const json::exception& e) {
        throw validation_error_t(std::string("network: malformed JSON: ") + e.what());
    }
}

std::vector<layer_spec_t> load_network(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw input_error_t(std::string("cannot parse ") + path + ": " + e.what());
    }
    return parse_network(doc);
}

// ================================================================
// Report emitters
// ================================================================

json complex_to_json(const simplicial_complex_t& K) {
    json out;
    out["dim"] = K.dim();
    json by_dim = json::array();
    for (int p = 0; p <= K.dim(); ++p) {
        json level = json::array();
        for (const auto& s : K.simplices(p)) level.push_back(simplex_to(s));
        by_dim.push_back(level);
    }
    out["simplices"] = by_dim;
    json counts = json::array();
    for (int p = 0; p <= K.dim(); ++p) counts.push_back(K.count(p));
    out["counts"] = counts;
    return out;
}

json faces_to_json(const nerve_t& nerve) {
    json out = json::array();
    for (const auto& [s, f] : nerve.faces) {
        json jf;
        jf["simplex"] = simplex_to(s);
        jf["dim"] = f.dim;
        jf["measure"] = f.measure;
        if (f.dim >= 0) jf["carrier_point"] = vec_to(f.carrier.point);
        out.push_back(jf);
    }
    return out;
}

json metric_report(const riemannian_structure_t& rs) {
    json out;
    json verts = json::array();
    for (const auto& v : rs.complex().simplices(0)) {
        const index_t id = v.vertices[0];
        json jv;
        jv["vertex"] = id;
        jv["weight"] = rs.vertex_inner(id);
        mat_t G = rs.star_gram(v, 1);
        jv["gram"] = mat_to(G);
        json order = json::array();
        for (const auto& e : rs.star_basis(v, 1)) order.push_back(simplex_to(e));
        jv["gram_order"] = order;
        const double cond = G.rows() > 0 ? rs.gram_condition(id) : 1.0;
        if (std::isfinite(cond)) {
            jv["condition"] = cond;
        } else {
            jv["condition"] = "inf";
            jv["singular"] = true;
        }
        verts.push_back(jv);
    }
    out["vertices"] = verts;
    json edges = json::array();
    for (const auto& e : rs.complex().simplices(1)) {
        json je;
        je["edge"] = simplex_to(e);
        je["inner"] = rs.edge_inner(e.vertices[0], e, e);
        je["length"] = rs.edge_length(e);
        edges.push_back(je);
    }
    out["edges"] = edges;
    json degenerate = json::array();
    for (const auto& s : rs.degenerate_flags()) degenerate.push_back(simplex_to(s));
    out["degenerate_carriers"] = degenerate;
    return out;
}

json density_to_json(const density_field_t& field) {
    json out;
    out["scheme"] = to_string(field.scheme);
    out["alpha"] = field.alpha;
    out["rho_floor"] = field.rho_floor;
    out["energy_residual"] = field.energy_residual;
    out["display_form_residual"] = field.display_residual;
    json rv = json::array();
    for (const auto& [v, r] : field.rho_vertex) rv.push_back({{"vertex", v}, {"rho", r}});
    out["rho_vertex"] = rv;
    json re = json::array();
    for (const auto& [e, r] : field.rho_edge) {
        re.push_back({{"edge", simplex_to(e)}, {"rho", r}});
    }
    out["rho_edge"] = re;
    json clamped = json::array();
    for (index_t v : field.clamped) clamped.push_back(v);
    out["clamped_vertices"] = clamped;
    return out;
}

json graph_to_json(const weighted_graph_t& graph) {
    json out;
    json verts = json::array();
    for (index_t v : graph.vertices) verts.push_back(v);
    out["vertices"] = verts;
    json edges = json::array();
    for (const auto& e : graph.edges) {
        edges.push_back({{"u", e.u}, {"v", e.v}, {"length", e.length}});
    }
    out["edges"] = edges;
    return out;
}

json curvature_to_json(const curvature_report_t& report) {
    json out;
    out["r_grid"] = report.r_grid;
    out["kappa_stat_choice"] = report.kappa_stat_choice;
    json verts = json::array();
    for (const auto& [v, row] : report.vertex) {
        json jv;
        jv["vertex"] = v;
        for (const auto& [name, value] : row) jv["measures"][name] = value;
        auto f = report.vertex_flags.find(v);
        if (f != report.vertex_flags.end() && !f->second.empty()) {
            jv["flags"] = f->second;
        }
        jv["kappa_stat"] = report.kappa_stat.at(v);
        verts.push_back(jv);
    }
    out["vertices"] = verts;
    json edges = json::array();
    for (const auto& [e, row] : report.edge) {
        json je;
        je["edge"] = simplex_to(e);
        for (const auto& [name, value] : row) je["measures"][name] = value;
        edges.push_back(je);
    }
    out["edges"] = edges;
    out["regularizer"] = report.regularizer_value;
    out["energy"] = report.energy;
    out["warnings"] = report.warnings;
    return out;
}

std::string curvature_csv(const curvature_report_t& report) {
    std::ostringstream out;
    out << "kind,id_a,id_b,measure,value\n";
    for (const auto& [v, row] : report.vertex) {
        for (const auto& [name, value] : row) {
            out << "vertex," << v << ",," << name << "," << dump(json(value)) << "\n";
        }
    }
    for (const auto& [e, row] : report.edge) {
        for (const auto& [name, value] : row) {
            out << "edge," << e.vertices[0] << "," << e.vertices[1] << "," << name
                << "," << dump(json(value)) << "\n";
        }
    }
    return out.str();
}

json signature_to_json(const spectral_signature_t& sig) {
    json out;
    out["dims"] = sig.dims;
    out["ratios"] = sig.ratios;
    out["geometric_health"] = sig.geometric_health;
    out["warnings"] = sig.warnings;
    return out;
}

json sequence_report(const layer_sequence_t& seq) {
    json out;
    out["levels"] = json::array();
    for (const auto& lvl : seq.levels) {
        json jl;
        jl["level"] = lvl.level;
        jl["cells"] = lvl.partition.size();
        jl["nerve"] = complex_to_json(lvl.nerve.complex);
        json vm = json::array();
        for (const auto& [from, to] : lvl.vertex_map) {
            vm.push_back({{"from", from}, {"to", to}});
        }
        jl["vertex_map"] = vm;
        json pats = json::array();
        for (const auto& [id, pat] : lvl.source_pattern) {
            pats.push_back({{"cell", id}, {"pattern", pat}});
        }
        jl["patterns"] = pats;
        // fiber sizes of the map into the next level
        std::map<index_t, int> fiber;
        for (const auto& [from, to] : lvl.vertex_map) fiber[to]++;
        json jf = json::array();
        for (const auto& [to, count] : fiber) {
            jf.push_back({{"target", to}, {"size", count}});
        }
        jl["fibers"] = jf;
        json vols = json::array();
        for (const auto& c : lvl.partition.cells()) {
            vols.push_back({{"cell", c.id},
                            {"volume", cell_volume(lvl.partition, c.id).value}});
        }
        jl["volumes"] = vols;
        out["levels"].push_back(jl);
    }
    json composed = json::array();
    for (const auto& [id, vol] : seq.composed_volume) {
        composed.push_back({{"cell", id},
                            {"volume", vol},
                            {"exact", seq.composed_exact.at(id)}});
    }
    out["composed_volumes"] = composed;
    out["notes"] = seq.notes;
    return out;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw validation_error_t("cannot open for writing: " + path);
    out << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error_t("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace riemplex::io
