// Command-line front end: ingest partition/dataset/network files, run the
// geometric pipeline, and emit deterministic JSON and CSV reports.

#include "riemplex/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

using namespace riemplex;
using io::json;

namespace {

#ifndef RIEMPLEX_VERSION
#define RIEMPLEX_VERSION "0.1.0"
#endif

struct run_options_t {
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    int max_dim = 3;
    double tol = 1e-9;
    int workers = 1; // acceptance runs use 1; kept in the report for audit
};

// Only Monte Carlo paths require an explicit seed; everything else records
// the seed as absent and stays exact.
std::uint64_t require_seed(const run_options_t& run, bool mc_needed) {
    if (!mc_needed) return run.seed.value_or(0);
    if (!run.seed) {
        throw validation_error_t(
            "this run reaches a Monte Carlo path; pass an explicit --seed");
    }
    return *run.seed;
}

bool partition_needs_mc(const partition_t& part) {
    if (part.domain().dim() <= 3) return false;
    for (const auto& c : part.cells()) {
        if (!c.geometry.is_box) return true;
    }
    return false;
}

json envelope(const std::string& subcommand, const run_options_t& run,
              const json& config) {
    json out;
    out["tool"] = "riemplex";
    out["version"] = RIEMPLEX_VERSION;
    out["subcommand"] = subcommand;
    out["seed"] = run.seed ? json(*run.seed) : json(nullptr);
    out["workers"] = run.workers;
    out["config"] = config;
    return out;
}

void emit(const run_options_t& run, const std::string& name, const json& doc) {
    std::filesystem::create_directories(run.out_dir);
    io::write_text(run.out_dir + "/" + name, io::dump(doc));
}

// Vertex observations from a dataset: per-cell response means; cells
// without data fall back to the predictor (flagged in the report).
std::pair<vec_t, json> vertex_observations(const partition_t& part,
                                           const dataset_t& data,
                                           const std::vector<simplex_t>& order) {
    vec_t y = vec_t::Zero(static_cast<index_t>(order.size()));
    json flags = json::array();
    for (std::size_t i = 0; i < order.size(); ++i) {
        const index_t id = order[i].vertices[0];
        auto it = part.data_index().find(id);
        if (it != part.data_index().end() && !it->second.empty() && data.has_y) {
            double mean = 0.0;
            for (index_t p : it->second) mean += data.y[p];
            y[static_cast<index_t>(i)] = mean / static_cast<double>(it->second.size());
        } else if (part.cell(id).predictor.kind == predictor_t::kind_t::CONSTANT) {
            y[static_cast<index_t>(i)] = part.cell(id).predictor.constant[0];
            flags.push_back({{"vertex", id}, {"note", "no data, used predictor"}});
        } else {
            flags.push_back({{"vertex", id}, {"note", "no data, used 0"}});
        }
    }
    return {y, flags};
}

std::map<index_t, double> observation_map(const vec_t& y,
                                          const std::vector<simplex_t>& order) {
    std::map<index_t, double> f;
    for (std::size_t i = 0; i < order.size(); ++i) {
        f[order[i].vertices[0]] = y[static_cast<index_t>(i)];
    }
    return f;
}

// ================================================================
// Subcommands
// ================================================================

int cmd_nerve(const run_options_t& run, const std::string& partition_path) {
    partition_t part = io::load_partition(partition_path);
    require_seed(run, partition_needs_mc(part));
    nerve_t nerve = build_nerve(part, run.max_dim, run.tol);
    json doc = envelope("nerve", run,
                        {{"partition", partition_path},
                         {"max_dim", run.max_dim},
                         {"tol", run.tol}});
    doc["complex"] = io::complex_to_json(nerve.complex);
    doc["faces"] = io::faces_to_json(nerve);
    emit(run, "nerve.json", doc);
    return 0;
}

int cmd_metric(const run_options_t& run, const std::string& partition_path) {
    partition_t part = io::load_partition(partition_path);
    volume_options_t vol;
    vol.seed = require_seed(run, partition_needs_mc(part));
    nerve_t nerve = build_nerve(part, run.max_dim, run.tol);
    auto rs = riemannian_structure_t::build(std::move(part), std::move(nerve), vol);
    json doc = envelope("metric", run,
                        {{"partition", partition_path}, {"max_dim", run.max_dim}});
    doc["metric"] = io::metric_report(rs);
    emit(run, "metric.json", doc);
    return 0;
}

int cmd_spline(const run_options_t& run, const std::string& partition_path,
               const std::string& data_path,
               const std::vector<std::string>& penalty_specs) {
    partition_t part = io::load_partition(partition_path);
    require_seed(run, partition_needs_mc(part));
    dataset_t data = io::load_dataset_csv(data_path, part.domain().dim());
    if (!data.has_y) {
        throw validation_error_t("spline: the dataset needs a response column");
    }
    part.index_data(data);
    nerve_t nerve = build_nerve(part, run.max_dim, run.tol);
    auto rs = riemannian_structure_t::build(std::move(part), std::move(nerve));
    auto ops = hodge_operators_t::build(rs);

    spline_problem_t prob;
    for (const auto& spec : penalty_specs) {
        spline_term_t term;
        if (std::sscanf(spec.c_str(), "%d:%d:%lf", &term.p, &term.k, &term.lambda) !=
            3) {
            throw validation_error_t("spline: penalty must look like p:k:lambda");
        }
        prob.penalties.push_back(term);
    }
    auto [y, flags] = vertex_observations(rs.partition(), data, ops.basis(0));
    prob.y = y;
    vec_t u = solve_simplicial_spline(prob, ops);

    json doc = envelope("spline", run,
                        {{"partition", partition_path},
                         {"data", data_path},
                         {"penalties", penalty_specs}});
    json sol = json::array();
    for (std::size_t i = 0; i < ops.basis(0).size(); ++i) {
        sol.push_back({{"vertex", ops.basis(0)[i].vertices[0]},
                       {"y", y[static_cast<index_t>(i)]},
                       {"u", u[static_cast<index_t>(i)]}});
    }
    doc["solution"] = sol;
    doc["energy"] = spline_energy(prob, ops, u);
    doc["observation_flags"] = flags;
    emit(run, "spline.json", doc);
    return 0;
}

struct density_cli_t {
    std::string scheme = "arithmetic";
    double alpha = 1.0;
    double lambda = 0.0;
};

density_field_t compute_density(const riemannian_structure_t& rs,
                                const hodge_operators_t& ops,
                                const density_cli_t& opts) {
    const auto& order = ops.basis(0);
    vec_t counts = vec_t::Zero(static_cast<index_t>(order.size()));
    for (std::size_t i = 0; i < order.size(); ++i) {
        counts[static_cast<index_t>(i)] =
            static_cast<double>(rs.partition().count(order[i].vertices[0]));
    }
    density_field_t field = estimate_density(ops, counts, opts.lambda);
    field.alpha = opts.alpha;
    interpolate_edge_density(field, rs, edge_scheme_from_string(opts.scheme));
    return field;
}

int cmd_density(const run_options_t& run, const std::string& partition_path,
                const std::string& data_path, const density_cli_t& opts) {
    partition_t part = io::load_partition(partition_path);
    require_seed(run, partition_needs_mc(part));
    dataset_t data = io::load_dataset_csv(data_path, part.domain().dim());
    part.index_data(data);
    nerve_t nerve = build_nerve(part, run.max_dim, run.tol);
    auto rs = riemannian_structure_t::build(std::move(part), std::move(nerve));
    auto ops = hodge_operators_t::build(rs);
    density_field_t field = compute_density(rs, ops, opts);
    auto graph = density_weighted_graph(field, rs, opts.alpha);

    json doc = envelope("density", run,
                        {{"partition", partition_path},
                         {"data", data_path},
                         {"density_scheme", opts.scheme},
                         {"alpha", opts.alpha},
                         {"lambda_density", opts.lambda}});
    doc["density"] = io::density_to_json(field);
    doc["weighted_graph"] = io::graph_to_json(graph);
    emit(run, "density.json", doc);
    return 0;
}

int cmd_curvature(const run_options_t& run, const std::string& partition_path,
                  const std::string& data_path, const density_cli_t& dopts,
                  const std::vector<double>& r_grid, const curvature_config_t& cfg) {
    partition_t part = io::load_partition(partition_path);
    require_seed(run, partition_needs_mc(part));
    dataset_t data = io::load_dataset_csv(data_path, part.domain().dim());
    part.index_data(data);
    nerve_t nerve = build_nerve(part, run.max_dim, run.tol);
    auto rs = riemannian_structure_t::build(std::move(part), std::move(nerve));
    auto ops = hodge_operators_t::build(rs);
    density_field_t field = compute_density(rs, ops, dopts);
    auto graph = density_weighted_graph(field, rs, dopts.alpha);
    curvature_context_t ctx(rs, graph, field, cfg);

    auto [y, flags] = vertex_observations(rs.partition(), data, ops.basis(0));
    auto f = observation_map(y, ops.basis(0));
    auto report = build_curvature_report(ctx, f, &data, r_grid);

    json doc = envelope("curvature", run,
                        {{"partition", partition_path},
                         {"data", data_path},
                         {"density_scheme", dopts.scheme},
                         {"alpha", dopts.alpha},
                         {"lambda_density", dopts.lambda},
                         {"r_grid", r_grid},
                         {"tau", cfg.tau},
                         {"lambda_edge", cfg.lambda_edge},
                         {"functional_weights", cfg.alpha}});
    doc["curvature"] = io::curvature_to_json(report);
    doc["observation_flags"] = flags;
    emit(run, "curvature.json", doc);
    std::filesystem::create_directories(run.out_dir);
    io::write_text(run.out_dir + "/curvature.csv", io::curvature_csv(report));
    return 0;
}

int cmd_ensemble(const run_options_t& run, const std::vector<std::string>& tree_paths) {
    std::vector<partition_t> trees;
    for (const auto& p : tree_paths) trees.push_back(io::load_partition(p));
    auto ens = refine_ensemble(trees, run.tol);
    require_seed(run, partition_needs_mc(ens.refined));
    auto rs = ensemble_metric(ens, run.max_dim);

    json doc = envelope("ensemble", run,
                        {{"trees", tree_paths}, {"max_dim", run.max_dim}});
    doc["refined_cells"] = ens.refined.size();
    json prov = json::array();
    for (const auto& [id, src] : ens.provenance) {
        prov.push_back({{"cell", id}, {"sources", src}});
    }
    doc["provenance"] = prov;
    json ktable = json::array();
    double total_volume = 0.0;
    for (const auto& c : ens.refined.cells()) {
        total_volume += cell_volume(ens.refined, c.id).value;
    }
    doc["refined_volume_total"] = total_volume;
    for (const auto& e : rs.complex().simplices(1)) {
        ktable.push_back({{"pair", {e.vertices[0], e.vertices[1]}},
                          {"K", cooccurrence(ens, {e.vertices[0], e.vertices[1]})}});
    }
    doc["cooccurrence"] = ktable;
    doc["metric"] = io::metric_report(rs);
    emit(run, "ensemble.json", doc);
    return 0;
}

int cmd_boost_monitor(const run_options_t& run,
                      const std::vector<std::string>& tree_paths) {
    if (tree_paths.empty()) throw validation_error_t("boost-monitor: no trees");
    auto st = boosting_state_t::start(io::load_partition(tree_paths[0]), std::nullopt,
                                      run.max_dim);
    std::ostringstream csv;
    csv << "m,energy,lambda2_ratio,mu_ratios,geometric_health,cells,mean_K\n";
    json trace = json::array();

    auto record = [&](int m) {
        auto sig = st.signature(static_cast<std::size_t>(m - 1));
        double mean_k = 0.0;
        std::int64_t edges = 0;
        nerve_t nerve = build_nerve(st.ensemble().refined, 1);
        for (const auto& e : nerve.complex.simplices(1)) {
            mean_k += st.k_value(e.vertices[0], e.vertices[1]);
            ++edges;
        }
        if (edges > 0) mean_k /= static_cast<double>(edges);

        double lambda2_ratio = 1.0;
        std::vector<double> mu_ratios;
        for (std::size_t i = 0; i < sig.dims.size(); ++i) {
            if (sig.dims[i] == 0) lambda2_ratio = sig.ratios[i];
            else mu_ratios.push_back(sig.ratios[i]);
        }
        csv << m << "," << st.energy_series()[m - 1] << "," << lambda2_ratio << ",\"";
        for (std::size_t i = 0; i < mu_ratios.size(); ++i) {
            if (i) csv << ";";
            csv << mu_ratios[i];
        }
        csv << "\"," << sig.geometric_health << "," << st.ensemble().refined.size()
            << "," << mean_k << "\n";
        trace.push_back({{"m", m},
                         {"energy", st.energy_series()[m - 1]},
                         {"signature", io::signature_to_json(sig)},
                         {"cells", st.ensemble().refined.size()},
                         {"mean_K", mean_k}});
    };

    record(1);
    for (std::size_t i = 1; i < tree_paths.size(); ++i) {
        st.step(io::load_partition(tree_paths[i]));
        record(static_cast<int>(i) + 1);
    }

    json doc = envelope("boost-monitor", run, {{"trees", tree_paths}});
    doc["trace"] = trace;
    doc["lambda1"] = st.lambda1();
    emit(run, "boost.json", doc);
    std::filesystem::create_directories(run.out_dir);
    io::write_text(run.out_dir + "/boost_trace.csv", csv.str());
    return 0;
}

int cmd_nn_analyze(const run_options_t& run, const std::string& weights_path,
                   const std::string& data_path, const std::string& domain_spec) {
    auto layers = io::load_network(weights_path);
    dataset_t data = io::load_dataset_csv(data_path, layers.front().in_dim());

    domain_t dom;
    if (domain_spec == "auto") {
        dom = domain_from_points(data.X);
    } else {
        json doc = json::parse(io::read_text(domain_spec));
        const auto& bounds = doc.at("bounds");
        const int n = static_cast<int>(bounds.size());
        dom.bounds.lo.resize(n);
        dom.bounds.hi.resize(n);
        for (int j = 0; j < n; ++j) {
            dom.bounds.lo[j] = bounds[j][0];
            dom.bounds.hi[j] = bounds[j][1];
        }
    }

    bool mc_needed = false;
    for (const auto& l : layers) mc_needed = mc_needed || l.out_dim() > 3;
    volume_options_t vol;
    vol.seed = require_seed(run, mc_needed || dom.dim() > 3);

    auto seq = backward_sequence(layers, dom, data.X, run.max_dim);
    auto enriched = enriched_complex(seq, vol);

    json doc = envelope("nn-analyze", run,
                        {{"weights", weights_path},
                         {"data", data_path},
                         {"domain", domain_spec},
                         {"max_dim", run.max_dim},
                         {"cell_enumeration", "data-witnessed activation patterns"}});
    doc["sequence"] = io::sequence_report(seq);
    doc["enriched_metric"] = io::metric_report(enriched.structure);
    json affines = json::array();
    for (const auto& [id, W] : enriched.full_W) {
        json row;
        row["cell"] = id;
        json wj = json::array();
        for (index_t i = 0; i < W.rows(); ++i) {
            json r = json::array();
            for (index_t j = 0; j < W.cols(); ++j) r.push_back(W(i, j));
            wj.push_back(r);
        }
        row["W"] = wj;
        json bj = json::array();
        const vec_t& b = enriched.full_b.at(id);
        for (index_t i = 0; i < b.size(); ++i) bj.push_back(b[i]);
        row["b"] = bj;
        affines.push_back(row);
    }
    doc["composed_affine"] = affines;
    emit(run, "nn.json", doc);
    return 0;
}

int cmd_report(const run_options_t& run, const std::string& partition_path,
               const std::string& data_path, const density_cli_t& dopts) {
    partition_t part = io::load_partition(partition_path);
    require_seed(run, partition_needs_mc(part));
    dataset_t data = io::load_dataset_csv(data_path, part.domain().dim());
    part.index_data(data);
    nerve_t nerve = build_nerve(part, run.max_dim, run.tol);
    auto rs = riemannian_structure_t::build(std::move(part), std::move(nerve));
    auto ops = hodge_operators_t::build(rs);
    density_field_t field = compute_density(rs, ops, dopts);
    auto graph = density_weighted_graph(field, rs, dopts.alpha);
    curvature_context_t ctx(rs, graph, field);
    auto [y, flags] = vertex_observations(rs.partition(), data, ops.basis(0));
    auto f = observation_map(y, ops.basis(0));
    auto curv = build_curvature_report(ctx, f, &data, {1.0});

    json doc = envelope("report", run,
                        {{"partition", partition_path},
                         {"data", data_path},
                         {"density_scheme", dopts.scheme},
                         {"alpha", dopts.alpha},
                         {"lambda_density", dopts.lambda}});
    doc["complex"] = io::complex_to_json(rs.complex());
    doc["metric"] = io::metric_report(rs);
    doc["density"] = io::density_to_json(field);
    doc["curvature"] = io::curvature_to_json(curv);
    auto snap = spectrum_of(ops);
    json spectra = json::array();
    for (const auto& lam : snap.by_dim) {
        json l = json::array();
        for (index_t i = 0; i < lam.size(); ++i) l.push_back(lam[i]);
        spectra.push_back(l);
    }
    doc["spectra"] = spectra;
    doc["observation_flags"] = flags;
    emit(run, "report.json", doc);
    return 0;
}

json error_record(int code, const std::string& kind, const std::string& message) {
    json doc;
    doc["error"]["code"] = code;
    doc["error"]["kind"] = kind;
    doc["error"]["message"] = message;
    return doc;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Riemannian simplicial-complex analysis of partition models"};
    app.require_subcommand(1);

    run_options_t run;
    std::string partition_path, data_path, weights_path, domain_spec = "auto";
    std::vector<std::string> tree_paths, penalty_specs;
    density_cli_t dopts;
    std::vector<double> r_grid = {1.0};
    curvature_config_t curv_cfg;
    std::vector<double> func_weights;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", run.out_dir, "output directory");
        cmd->add_option("--seed", run.seed,
                        "random seed (required on Monte Carlo paths)");
        cmd->add_option("--max-dim", run.max_dim, "nerve dimension cap");
        cmd->add_option("--tol", run.tol, "intersection tolerance");
        cmd->add_option("--workers", run.workers, "worker count (recorded)");
    };

    auto* nerve_cmd = app.add_subcommand("nerve", "nerve complex of a partition");
    nerve_cmd->add_option("--partition", partition_path)->required();
    add_common(nerve_cmd);

    auto* metric_cmd = app.add_subcommand("metric", "Riemannian structure report");
    metric_cmd->add_option("--partition", partition_path)->required();
    add_common(metric_cmd);

    auto* spline_cmd = app.add_subcommand("spline", "simplicial spline smoothing");
    spline_cmd->add_option("--partition", partition_path)->required();
    spline_cmd->add_option("--data", data_path)->required();
    spline_cmd->add_option("--penalty", penalty_specs,
                           "penalty term p:k:lambda (repeatable)");
    add_common(spline_cmd);

    auto* density_cmd = app.add_subcommand("density", "density estimation");
    density_cmd->add_option("--partition", partition_path)->required();
    density_cmd->add_option("--data", data_path)->required();
    density_cmd->add_option("--density-scheme", dopts.scheme,
                            "arithmetic|harmonic|lift|geometric");
    density_cmd->add_option("--alpha", dopts.alpha, "density weight exponent");
    density_cmd->add_option("--lambda-density", dopts.lambda);
    add_common(density_cmd);

    auto* curv_cmd = app.add_subcommand("curvature", "curvature report");
    curv_cmd->add_option("--partition", partition_path)->required();
    curv_cmd->add_option("--data", data_path)->required();
    curv_cmd->add_option("--density-scheme", dopts.scheme);
    curv_cmd->add_option("--alpha", dopts.alpha);
    curv_cmd->add_option("--lambda-density", dopts.lambda);
    curv_cmd->add_option("--r-grid", r_grid, "ball/sphere radii");
    curv_cmd->add_option("--tau", curv_cfg.tau, "Huber transition");
    curv_cmd->add_option("--lambda-edge", curv_cfg.lambda_edge);
    curv_cmd->add_option("--weights", func_weights,
                         "functional Ricci weights (4 values)");
    add_common(curv_cmd);

    auto* ens_cmd = app.add_subcommand("ensemble", "refined overlay and metric");
    ens_cmd->add_option("--trees", tree_paths, "partition files")->required();
    add_common(ens_cmd);

    auto* boost_cmd = app.add_subcommand("boost-monitor", "sequential geometry trace");
    boost_cmd->add_option("--trees", tree_paths, "partition files in order")
        ->required();
    add_common(boost_cmd);

    auto* nn_cmd = app.add_subcommand("nn-analyze", "layer sequence analysis");
    nn_cmd->add_option("--weights", weights_path)->required();
    nn_cmd->add_option("--data", data_path)->required();
    nn_cmd->add_option("--domain", domain_spec, "auto or a bounds JSON file");
    add_common(nn_cmd);

    auto* report_cmd = app.add_subcommand("report", "combined pipeline report");
    report_cmd->add_option("--partition", partition_path)->required();
    report_cmd->add_option("--data", data_path)->required();
    report_cmd->add_option("--density-scheme", dopts.scheme);
    report_cmd->add_option("--alpha", dopts.alpha);
    report_cmd->add_option("--lambda-density", dopts.lambda);
    add_common(report_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cout << io::dump(error_record(2, "parse", e.what()));
        return 2;
    }

    try {
        if (!func_weights.empty()) {
            if (func_weights.size() != 4) {
                throw validation_error_t("curvature: --weights needs 4 values");
            }
            double total = 0.0;
            for (double w : func_weights) total += w;
            if (total <= 0.0) throw validation_error_t("curvature: weights sum to 0");
            for (int i = 0; i < 4; ++i) curv_cfg.alpha[i] = func_weights[i] / total;
        }
        if (nerve_cmd->parsed()) return cmd_nerve(run, partition_path);
        if (metric_cmd->parsed()) return cmd_metric(run, partition_path);
        if (spline_cmd->parsed())
            return cmd_spline(run, partition_path, data_path, penalty_specs);
        if (density_cmd->parsed())
            return cmd_density(run, partition_path, data_path, dopts);
        if (curv_cmd->parsed())
            return cmd_curvature(run, partition_path, data_path, dopts, r_grid,
                                 curv_cfg);
        if (ens_cmd->parsed()) return cmd_ensemble(run, tree_paths);
        if (boost_cmd->parsed()) return cmd_boost_monitor(run, tree_paths);
        if (nn_cmd->parsed())
            return cmd_nn_analyze(run, weights_path, data_path, domain_spec);
        if (report_cmd->parsed())
            return cmd_report(run, partition_path, data_path, dopts);
    } catch (const validation_error_t& e) {
        std::cout << io::dump(error_record(3, "validation", e.what()));
        return 3;
    } catch (const input_error_t& e) {
        std::cout << io::dump(error_record(3, "validation", e.what()));
        return 3;
    } catch (const internal_error_t& e) {
        std::cout << io::dump(error_record(4, "internal", e.what()));
        return 4;
    } catch (const std::exception& e) {
        std::cout << io::dump(error_record(4, "internal", e.what()));
        return 4;
    }
    return 0;
}
