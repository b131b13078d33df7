#include "riemplex/partition.hpp"

#include <algorithm>
#include <cmath>

namespace riemplex {

double box_t::volume() const {
    double v = 1.0;
    for (int j = 0; j < dim(); ++j) v *= (hi[j] - lo[j]);
    return v;
}

bool box_t::contains(const vec_t& x, double tol) const {
    for (int j = 0; j < dim(); ++j) {
        if (x[j] < lo[j] - tol || x[j] > hi[j] + tol) return false;
    }
    return true;
}

domain_t domain_from_points(const mat_t& X) {
    if (X.rows() == 0) throw validation_error_t("domain_from_points: empty dataset");
    domain_t d;
    d.bounds.lo = X.colwise().minCoeff();
    d.bounds.hi = X.colwise().maxCoeff();
    // A flat coordinate still needs positive extent.
    for (int j = 0; j < d.dim(); ++j) {
        if (d.bounds.hi[j] - d.bounds.lo[j] < 1e-12) {
            d.bounds.lo[j] -= 0.5;
            d.bounds.hi[j] += 0.5;
        }
    }
    return d;
}

vec_t predictor_t::evaluate(const vec_t& x) const {
    switch (kind) {
        case kind_t::CONSTANT: return constant;
        case kind_t::AFFINE: return W * x + b;
        case kind_t::NONE: break;
    }
    throw input_error_t("predictor: cell has no local prediction function");
}

partition_t::partition_t(domain_t domain, std::vector<partition_cell_t> cells)
    : domain_(std::move(domain)), cells_(std::move(cells)) {
    const int n = domain_.dim();
    for (int j = 0; j < n; ++j) {
        if (!(domain_.bounds.lo[j] < domain_.bounds.hi[j])) {
            throw validation_error_t("partition: domain bounds must satisfy lo < hi");
        }
    }
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const auto& cell = cells_[i];
        if (!by_id_.emplace(cell.id, i).second) {
            throw validation_error_t("partition: duplicate cell id");
        }
        if (cell.geometry.is_box) {
            const auto& b = cell.geometry.box;
            if (b.dim() != n) throw validation_error_t("partition: box dimension mismatch");
            for (int j = 0; j < n; ++j) {
                if (b.lo[j] < domain_.bounds.lo[j] - 1e-9 ||
                    b.hi[j] > domain_.bounds.hi[j] + 1e-9) {
                    throw validation_error_t("partition: box leaves the domain");
                }
                if (!(b.lo[j] < b.hi[j])) {
                    throw input_error_t("partition: degenerate box cell (empty interior)");
                }
            }
        } else {
            std::vector<geom::halfspace_t> rows;
            vec_t lo, hi;
            // closure_system needs by_id_, so build the system inline.
            rows = cell.geometry.halfspaces;
            lo = domain_.bounds.lo;
            hi = domain_.bounds.hi;
            geom::chebyshev_t ch = geom::chebyshev_center(rows, lo, hi);
            if (!(ch.radius > 1e-9)) {
                throw input_error_t("partition: degenerate cell (empty interior)");
            }
            interior_cache_[cell.id] = ch.center;
        }
    }
}

const partition_cell_t& partition_t::cell(index_t id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw input_error_t("partition: unknown cell id");
    return cells_[it->second];
}

void partition_t::closure_system(index_t id, std::vector<geom::halfspace_t>& rows,
                                 vec_t& lo, vec_t& hi) const {
    const auto& c = cell(id);
    rows.clear();
    if (c.geometry.is_box) {
        lo = c.geometry.box.lo;
        hi = c.geometry.box.hi;
    } else {
        rows = c.geometry.halfspaces;
        lo = domain_.bounds.lo;
        hi = domain_.bounds.hi;
    }
}

const vec_t& partition_t::interior_point(index_t id) const {
    auto it = interior_cache_.find(id);
    if (it != interior_cache_.end()) return it->second;
    const auto& c = cell(id);
    vec_t p;
    if (c.geometry.is_box) {
        p = 0.5 * (c.geometry.box.lo + c.geometry.box.hi);
    } else {
        std::vector<geom::halfspace_t> rows;
        vec_t lo, hi;
        closure_system(id, rows, lo, hi);
        p = geom::chebyshev_center(rows, lo, hi).center;
    }
    return interior_cache_.emplace(id, std::move(p)).first->second;
}

std::optional<index_t> partition_t::locate(const vec_t& x, double tol) const {
    for (const auto& c : cells_) {
        if (c.geometry.is_box) {
            if (c.geometry.box.contains(x, tol)) return c.id;
        } else {
            bool in = domain_.bounds.contains(x, tol);
            for (const auto& h : c.geometry.halfspaces) {
                if (!in) break;
                if (h.a.dot(x) > h.c + tol * (1.0 + h.a.norm())) in = false;
            }
            if (in) return c.id;
        }
    }
    return std::nullopt;
}

void partition_t::index_data(const dataset_t& data, double tol) {
    data_index_.clear();
    for (const auto& c : cells_) data_index_[c.id] = {};
    for (index_t i = 0; i < data.size(); ++i) {
        auto id = locate(data.X.row(i).transpose(), tol);
        if (!id) {
            throw validation_error_t("partition: data point falls outside every cell");
        }
        data_index_[*id].push_back(i);
    }
}

void partition_t::index_data_with(
    const dataset_t& data, const std::function<index_t(const vec_t&)>& locator) {
    data_index_.clear();
    for (const auto& c : cells_) data_index_[c.id] = {};
    for (index_t i = 0; i < data.size(); ++i) {
        const index_t id = locator(data.X.row(i).transpose());
        if (id == NO_VERTEX) continue;
        data_index_[id].push_back(i);
    }
}

index_t partition_t::count(index_t cell_id) const {
    auto it = data_index_.find(cell_id);
    return it == data_index_.end() ? 0 : static_cast<index_t>(it->second.size());
}

// ================================================================
// Multi-cell intersection machinery
// ================================================================

namespace {

// Combined closed system of several cells: tightened bounding box plus the
// union of halfspace rows.
void combined_system(const partition_t& partition, const std::vector<index_t>& ids,
                     std::vector<geom::halfspace_t>& rows, vec_t& lo, vec_t& hi) {
    rows.clear();
    lo = partition.domain().bounds.lo;
    hi = partition.domain().bounds.hi;
    for (index_t id : ids) {
        const auto& c = partition.cell(id);
        if (c.geometry.is_box) {
            lo = lo.cwiseMax(c.geometry.box.lo);
            hi = hi.cwiseMin(c.geometry.box.hi);
        } else {
            for (const auto& h : c.geometry.halfspaces) rows.push_back(h);
        }
    }
}

} // namespace

bool cells_closure_intersect(const partition_t& partition,
                             const std::vector<index_t>& cell_ids, double tol) {
    std::vector<geom::halfspace_t> rows;
    vec_t lo, hi;
    combined_system(partition, cell_ids, rows, lo, hi);
    if (rows.empty()) {
        for (int j = 0; j < lo.size(); ++j) {
            if (lo[j] > hi[j] + tol) return false;
        }
        return true;
    }
    // Degenerate boxes (shared hyperplane) still admit a feasibility test
    // once the empty directions are widened into the tolerance band.
    for (int j = 0; j < lo.size(); ++j) {
        if (lo[j] > hi[j] + tol) return false;
        if (lo[j] > hi[j]) {
            const double mid = 0.5 * (lo[j] + hi[j]);
            lo[j] = hi[j] = mid;
        }
    }
    return geom::feasible_closed(rows, lo, hi, tol);
}

face_t face_measure(const partition_t& partition, const std::vector<index_t>& cell_ids,
                    double tol) {
    if (cell_ids.size() < 2) {
        throw input_error_t("face_measure: needs at least two cells");
    }
    face_t face;
    face.cell_ids = cell_ids;
    std::sort(face.cell_ids.begin(), face.cell_ids.end());

    std::vector<geom::halfspace_t> rows;
    vec_t lo, hi;
    combined_system(partition, face.cell_ids, rows, lo, hi);
    for (int j = 0; j < lo.size(); ++j) {
        if (lo[j] > hi[j] + tol) return face; // empty marker
        if (lo[j] > hi[j]) {
            const double mid = 0.5 * (lo[j] + hi[j]);
            lo[j] = hi[j] = mid;
        }
    }

    std::vector<vec_t> verts = geom::enumerate_vertices(rows, lo, hi, tol);
    if (verts.empty()) {
        geom::chebyshev_t ch = geom::chebyshev_center(rows, lo, hi);
        if (ch.radius < -tol) return face; // empty
        face.dim = 0;
        face.measure = 1.0;
        face.carrier.point = ch.center;
        face.carrier.basis = mat_t::Zero(lo.size(), 0);
        face.carrier.dim = 0;
        return face;
    }

    face.carrier = geom::affine_hull(verts);
    face.dim = face.carrier.dim;
    if (face.dim == 0) {
        face.measure = 1.0; // nonempty point intersection
    } else {
        std::vector<geom::halfspace_t> all = rows;
        const int n = static_cast<int>(lo.size());
        for (int j = 0; j < n; ++j) {
            vec_t e = vec_t::Zero(n);
            e[j] = 1.0;
            all.push_back({e, hi[j]});
            all.push_back({-e, -lo[j]});
        }
        face.measure = geom::polytope_measure(verts, all, tol);
    }
    return face;
}

volume_result_t cell_volume(const partition_t& partition, index_t cell_id,
                            const volume_options_t& opts) {
    const auto& c = partition.cell(cell_id);
    volume_result_t out;
    if (c.geometry.is_box) {
        out.value = c.geometry.box.volume();
        return out;
    }
    const int n = partition.domain().dim();
    std::vector<geom::halfspace_t> rows;
    vec_t lo, hi;
    partition.closure_system(cell_id, rows, lo, hi);
    if (n <= opts.exact_max_dim) {
        std::vector<vec_t> verts = geom::enumerate_vertices(rows, lo, hi);
        if (verts.empty()) {
            throw internal_error_t("cell_volume: validated cell produced no vertices");
        }
        std::vector<geom::halfspace_t> all = rows;
        for (int j = 0; j < n; ++j) {
            vec_t e = vec_t::Zero(n);
            e[j] = 1.0;
            all.push_back({e, hi[j]});
            all.push_back({-e, -lo[j]});
        }
        geom::affine_hull_t hull = geom::affine_hull(verts);
        if (hull.dim < n) {
            throw internal_error_t("cell_volume: cell is not full-dimensional");
        }
        out.value = geom::polytope_measure(verts, all);
        return out;
    }
    rng_t rng(opts.seed);
    geom::mc_volume_t mc = geom::monte_carlo_volume(rows, lo, hi, opts.mc_samples, rng);
    out.value = mc.volume;
    out.std_error = mc.std_error;
    out.exact = false;
    return out;
}

std::optional<double> dihedral_cos(const partition_t& partition, index_t cell_id,
                                   const face_t& face_a, const face_t& face_b) {
    const int n = partition.domain().dim();
    if (face_a.dim != n - 1 || face_b.dim != n - 1) return std::nullopt;

    if (face_a.cell_ids == face_b.cell_ids) return 1.0; // a facet against itself

    const vec_t na_raw = geom::hull_normal(face_a.carrier, n);
    const vec_t nb_raw = geom::hull_normal(face_b.carrier, n);

    const vec_t& x0 = partition.interior_point(cell_id);
    auto inward = [&](const vec_t& nrm, const geom::affine_hull_t& carrier) {
        return nrm.dot(x0 - carrier.point) >= 0.0 ? nrm : vec_t(-nrm);
    };
    const vec_t na = inward(na_raw, face_a.carrier);
    const vec_t nb = inward(nb_raw, face_b.carrier);

    const double d = na.dot(nb);
    // Parallel carriers never meet transversally; no interior arc exists.
    if (std::abs(d) >= 1.0 - 1e-9) return 0.0;
    return std::clamp(-d, -1.0, 1.0);
}

nerve_t build_nerve(const partition_t& partition, int max_dim, double tol) {
    if (max_dim < 1) throw input_error_t("build_nerve: max_dim must be >= 1");
    nerve_t nerve;
    nerve.complex = simplicial_complex_t(std::max(max_dim, 1));

    std::vector<index_t> ids;
    for (const auto& c : partition.cells()) ids.push_back(c.id);
    std::sort(ids.begin(), ids.end());

    for (index_t id : ids) nerve.complex.insert_closed(simplex_t({id}));

    // Pairwise adjacency first, then incremental extension: a candidate
    // superset is tested only when all of its pairs are already edges.
    std::set<std::pair<index_t, index_t>> edges;
    std::vector<simplex_t> frontier;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            if (cells_closure_intersect(partition, {ids[i], ids[j]}, tol)) {
                simplex_t e({ids[i], ids[j]});
                nerve.complex.insert_closed(e);
                edges.insert({ids[i], ids[j]});
                frontier.push_back(e);
            }
        }
    }

    auto adjacent = [&](index_t a, index_t b) {
        if (a > b) std::swap(a, b);
        return edges.count({a, b}) > 0;
    };

    int p = 1;
    while (p < max_dim && !frontier.empty()) {
        std::vector<simplex_t> next;
        std::set<simplex_t> tested;
        for (const auto& s : frontier) {
            for (index_t v : ids) {
                if (v <= s.vertices.back()) continue; // canonical extension order
                bool clique = true;
                for (index_t u : s.vertices) {
                    if (!adjacent(u, v)) {
                        clique = false;
                        break;
                    }
                }
                if (!clique) continue;
                std::vector<index_t> cand = s.vertices;
                cand.push_back(v);
                simplex_t c(cand);
                if (!tested.insert(c).second) continue;
                if (cells_closure_intersect(partition, c.vertices, tol)) {
                    nerve.complex.insert_closed(c);
                    next.push_back(c);
                }
            }
        }
        frontier = std::move(next);
        ++p;
    }

    // Face records for every simplex of dimension >= 1.
    for (int q = 1; q <= nerve.complex.dim(); ++q) {
        for (const auto& s : nerve.complex.simplices(q)) {
            nerve.faces[s] = face_measure(partition, s.vertices, tol);
        }
    }
    return nerve;
}

partition_check_t check_partition(const partition_t& partition, std::int64_t n_samples,
                                  rng_t& rng, double tol) {
    const int n = partition.domain().dim();
    const auto& lo = partition.domain().bounds.lo;
    const auto& hi = partition.domain().bounds.hi;

    partition_check_t out;
    out.samples = n_samples;
    vec_t x(n);
    for (std::int64_t s = 0; s < n_samples; ++s) {
        for (int j = 0; j < n; ++j) x[j] = rng.uniform(lo[j], hi[j]);
        int strict = 0;
        bool near_boundary = false;
        for (const auto& c : partition.cells()) {
            bool interior = true;
            bool boundary = true;
            if (c.geometry.is_box) {
                for (int j = 0; j < n; ++j) {
                    const double a = c.geometry.box.lo[j], b = c.geometry.box.hi[j];
                    if (x[j] <= a + tol || x[j] >= b - tol) interior = false;
                    if (x[j] < a - tol || x[j] > b + tol) {
                        interior = false;
                        boundary = false;
                        break;
                    }
                }
            } else {
                for (const auto& h : c.geometry.halfspaces) {
                    const double v = h.a.dot(x) - h.c;
                    const double band = tol * (1.0 + h.a.norm());
                    if (v >= -band) interior = false;
                    if (v > band) {
                        interior = false;
                        boundary = false;
                        break;
                    }
                }
            }
            if (interior) ++strict;
            if (!interior && boundary) near_boundary = true;
        }
        if (strict > 1) ++out.multi_interior;
        if (strict == 0) {
            if (near_boundary) ++out.boundary_band;
            else ++out.uncovered;
        }
    }
    return out;
}

} // namespace riemplex
