#include "riemplex/metric.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace riemplex {

riemannian_structure_t riemannian_structure_t::build(partition_t partition,
                                                     nerve_t nerve,
                                                     const volume_options_t& vol_opts) {
    riemannian_structure_t rs;
    for (const auto& c : partition.cells()) {
        rs.cell_volume_[c.id] = cell_volume(partition, c.id, vol_opts).value;
    }
    rs.partition_ = std::move(partition);
    rs.nerve_ = std::move(nerve);
    return rs;
}

const face_t& riemannian_structure_t::face(const simplex_t& s) const {
    auto it = nerve_.faces.find(s);
    if (it == nerve_.faces.end()) {
        throw input_error_t("metric: no face record for the requested simplex");
    }
    return it->second;
}

double riemannian_structure_t::vertex_inner(index_t v) const {
    auto it = cell_volume_.find(v);
    if (it == cell_volume_.end()) throw input_error_t("metric: unknown vertex");
    double val = it->second;
    if (ensemble_ && ensemble_->freq) {
        val += ensemble_->lambda(0) * ensemble_->freq(v);
    }
    return val;
}

// Level-(dim sigma + 1) geometric inner product <sigma ^ v, sigma ^ v'>.
double riemannian_structure_t::level_inner(const simplex_t& sigma, index_t v,
                                           index_t vp) const {
    std::tuple<simplex_t, index_t, index_t> key{sigma, std::min(v, vp),
                                                std::max(v, vp)};
    {
        std::lock_guard<std::mutex> lock(*memo_mutex_);
        auto it = level_cache_.find(key);
        if (it != level_cache_.end()) return it->second;
    }

    const int n = partition_.domain().dim();
    const int expected_dim = n - sigma.dim() - 1;

    auto extended = [&](index_t u) {
        std::vector<index_t> ids = sigma.vertices;
        ids.push_back(u);
        return simplex_t(ids);
    };

    double value = 0.0;
    const simplex_t sv = extended(v);
    const simplex_t svp = extended(vp);
    if (!nerve_.complex.contains(sv) || !nerve_.complex.contains(svp)) {
        value = 0.0; // the cells never meet
    } else {
        const face_t& fa = face(sv);
        const face_t& fb = face(svp);
        if (expected_dim == 0) {
            // Point-intersection level: counting measure and cos = 1.
            value = (fa.dim >= 0 ? 1.0 : 0.0) * (fb.dim >= 0 ? 1.0 : 0.0);
        } else if (fa.dim != expected_dim || fb.dim != expected_dim) {
            value = 0.0; // boundary of too-low dimension
        } else if (v == vp) {
            value = fa.measure;
        } else {
            const double c = level_cos(sigma, fa, fb);
            value = std::sqrt(fa.measure * fb.measure) * c;
        }
    }

    std::lock_guard<std::mutex> lock(*memo_mutex_);
    level_cache_.emplace(key, value);
    return value;
}

// Interior angle between the carriers of two faces of F_sigma, measured
// inside the affine span of F_sigma. The first normal points toward the
// cell added by fa, the second away from the cell added by fb; for base
// vertices this is exactly the (inward, outward) facet convention.
double riemannian_structure_t::level_cos(const simplex_t& sigma, const face_t& fa,
                                         const face_t& fb) const {
    const int n = partition_.domain().dim();
    if (sigma.dim() == 0) {
        auto c = dihedral_cos(partition_, sigma.vertices[0], fa, fb);
        return c.value_or(0.0);
    }

    const face_t& fs = face(sigma);
    const int k = n - sigma.dim();
    if (fs.dim != k) {
        std::lock_guard<std::mutex> lock(*memo_mutex_);
        degenerate_.insert(sigma);
        return 0.0;
    }

    auto normal_in_span = [&](const face_t& f) -> std::optional<vec_t> {
        // Face carrier expressed in F_sigma coordinates.
        mat_t rel = fs.carrier.basis.transpose() * f.carrier.basis; // k x (k-1)
        if (rel.cols() != k - 1) return std::nullopt;
        Eigen::JacobiSVD<mat_t> svd(rel.transpose(), Eigen::ComputeFullV);
        vec_t nrm = svd.matrixV().col(k - 1);
        const vec_t offset =
            fs.carrier.basis.transpose() * (f.carrier.point - fs.carrier.point);
        const double side = nrm.dot(offset);
        if (std::abs(side) < 1e-12) return std::nullopt;
        return side > 0 ? nrm : vec_t(-nrm);
    };

    auto na = normal_in_span(fa); // toward the cell fa adds
    auto nb = normal_in_span(fb);
    if (!na || !nb) {
        std::lock_guard<std::mutex> lock(*memo_mutex_);
        degenerate_.insert(sigma);
        return 0.0;
    }
    const double d = na->dot(-(*nb)); // second normal points away
    if (std::abs(d) >= 1.0 - 1e-9) return 0.0; // parallel carriers never meet
    return std::clamp(d, -1.0, 1.0);
}

double riemannian_structure_t::edge_inner(index_t base, const simplex_t& e1,
                                          const simplex_t& e2) const {
    if (e1.dim() != 1 || e2.dim() != 1) {
        throw input_error_t("edge_inner: arguments must be edges");
    }
    const simplex_t b({base});
    if (!e1.contains(b) || !e2.contains(b)) {
        throw input_error_t("edge_inner: edges not incident to the base vertex");
    }
    if (!nerve_.complex.contains(e1) || !nerve_.complex.contains(e2)) {
        throw input_error_t("edge_inner: edge not in the nerve");
    }
    auto other = [&](const simplex_t& e) {
        return e.vertices[0] == base ? e.vertices[1] : e.vertices[0];
    };
    const index_t u = other(e1);
    const index_t w = other(e2);
    double val = level_inner(b, u, w);
    if (ensemble_ && ensemble_->cooccurrence) {
        const double kij = ensemble_->cooccurrence({std::min(base, u), std::max(base, u)});
        const double kik = ensemble_->cooccurrence({std::min(base, w), std::max(base, w)});
        val += ensemble_->lambda(1) * std::sqrt(kij * kik);
    }
    return val;
}

double riemannian_structure_t::higher_inner(const simplex_t& sigma,
                                            const simplex_t& rho1,
                                            const simplex_t& rho2) const {
    if (rho1.dim() != rho2.dim()) {
        throw input_error_t("higher_inner: chains of different dimension");
    }
    if (!rho1.contains(sigma) || !rho2.contains(sigma)) {
        throw input_error_t("higher_inner: simplices do not extend the base");
    }
    const int p = rho1.dim();
    if (p == 1) {
        return edge_inner(sigma.vertices[0], rho1, rho2);
    }

    const int q = p - sigma.dim();
    if (q == 0) {
        // Self product of the base: the measure of its own face; vertex
        // volume at dimension 0.
        if (sigma.dim() == 0) return vertex_inner(sigma.vertices[0]);
        const face_t& f = face(sigma);
        return f.empty() ? 0.0 : f.measure;
    }

    auto rest_of = [&](const simplex_t& rho) {
        std::vector<index_t> rest;
        for (index_t id : rho.vertices) {
            if (!std::binary_search(sigma.vertices.begin(), sigma.vertices.end(), id))
                rest.push_back(id);
        }
        return rest; // ascending
    };
    const std::vector<index_t> rest1 = rest_of(rho1);
    const std::vector<index_t> rest2 = rest_of(rho2);

    // Orientation of the canonical simplex relative to (sigma, rest).
    auto orientation = [&](const simplex_t& rho, const std::vector<index_t>& rest) {
        std::vector<index_t> arranged = sigma.vertices;
        arranged.insert(arranged.end(), rest.begin(), rest.end());
        return geom::permutation_sign(arranged, rho.vertices);
    };
    const int sign = orientation(rho1, rest1) * orientation(rho2, rest2);

    mat_t G(q, q);
    for (int a = 0; a < q; ++a) {
        for (int b = 0; b < q; ++b) {
            G(a, b) = level_inner(sigma, rest1[a], rest2[b]);
        }
    }
    double val = sign * G.determinant();

    if (ensemble_ && ensemble_->cooccurrence) {
        mat_t Kg(q, q);
        for (int a = 0; a < q; ++a) {
            for (int b = 0; b < q; ++b) {
                std::vector<index_t> ids = sigma.vertices;
                ids.push_back(rest1[a]);
                ids.push_back(rest2[b]);
                std::sort(ids.begin(), ids.end());
                ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
                Kg(a, b) = ensemble_->cooccurrence(ids);
            }
        }
        val += ensemble_->lambda(p) * sign * Kg.determinant();
    }
    return val;
}

std::vector<simplex_t> riemannian_structure_t::star_basis(const simplex_t& sigma,
                                                          int p) const {
    return star_members(nerve_.complex, sigma, p);
}

mat_t riemannian_structure_t::star_gram(const simplex_t& sigma, int p) const {
    if (p < sigma.dim()) {
        throw input_error_t("star_gram: dimension below dim sigma");
    }
    if (p > nerve_.complex.dim()) return mat_t(0, 0); // empty star
    std::pair<simplex_t, int> key{sigma, p};
    {
        std::lock_guard<std::mutex> lock(*memo_mutex_);
        auto it = gram_cache_.find(key);
        if (it != gram_cache_.end()) return it->second;
    }
    const auto members = star_basis(sigma, p);
    const int m = static_cast<int>(members.size());
    mat_t G(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = i; j < m; ++j) {
            G(i, j) = higher_inner(sigma, members[i], members[j]);
            G(j, i) = G(i, j);
        }
    }
    std::lock_guard<std::mutex> lock(*memo_mutex_);
    gram_cache_.emplace(key, G);
    return G;
}

double riemannian_structure_t::gram_condition(index_t v) const {
    mat_t G = star_gram(simplex_t({v}), 1);
    if (G.rows() == 0) throw input_error_t("gram_condition: empty vertex Gram");
    Eigen::SelfAdjointEigenSolver<mat_t> eig(G);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo <= 1e-12 * std::max(hi, 0.0)) return INF_MARKER;
    return hi / lo;
}

bool riemannian_structure_t::gram_singular(index_t v) const {
    return !std::isfinite(gram_condition(v));
}

double riemannian_structure_t::edge_length(const simplex_t& e) const {
    if (e.dim() != 1) throw input_error_t("edge_length: not an edge");
    const double s = edge_inner(e.vertices[0], e, e);
    return std::sqrt(std::max(0.0, s));
}

double simplex_volume_cayley_menger(const mat_t& edge_lengths) {
    const int m = static_cast<int>(edge_lengths.rows());
    if (edge_lengths.cols() != m || m < 1) {
        throw input_error_t("cayley-menger: length matrix must be square");
    }
    for (int i = 0; i < m; ++i) {
        if (edge_lengths(i, i) != 0.0) {
            throw input_error_t("cayley-menger: nonzero diagonal length");
        }
        for (int j = i + 1; j < m; ++j) {
            if (edge_lengths(i, j) < 0.0 ||
                std::abs(edge_lengths(i, j) - edge_lengths(j, i)) > 1e-12) {
                throw input_error_t("cayley-menger: lengths must be symmetric, >= 0");
            }
        }
    }
    const int p = m - 1;
    if (p == 0) return 1.0;

    mat_t B(m + 1, m + 1);
    B(0, 0) = 0.0;
    for (int i = 0; i < m; ++i) {
        B(0, i + 1) = 1.0;
        B(i + 1, 0) = 1.0;
        for (int j = 0; j < m; ++j) {
            const double l = edge_lengths(i, j);
            B(i + 1, j + 1) = l * l;
        }
    }
    const double factor = ((p + 1) % 2 == 0) ? 1.0 : -1.0; // (-1)^{p+1}
    double denom = std::pow(2.0, p);
    for (int i = 2; i <= p; ++i) denom *= static_cast<double>(i) * i; // 2^p (p!)^2
    const double det = B.determinant();
    const double vol2 = factor * det / denom;

    double scale = 1.0;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            scale = std::max(scale, std::pow(edge_lengths(i, j), 2.0 * p));
    if (vol2 < -1e-10 * scale) {
        throw input_error_t(
            "cayley-menger: sign of (-1)^{p+1} det is negative, lengths not embeddable");
    }
    return std::sqrt(std::max(0.0, vol2));
}

} // namespace riemplex
