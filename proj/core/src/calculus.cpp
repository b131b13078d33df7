#include "riemplex/calculus.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace riemplex {

namespace {

constexpr double kEigZero = 1e-10; // spectral zero threshold for signatures

mat_t psd_clip(const mat_t& W, double* clip_mag) {
    if (W.rows() == 0) return W;
    Eigen::SelfAdjointEigenSolver<mat_t> eig(W);
    vec_t lam = eig.eigenvalues();
    double clipped = 0.0;
    for (int i = 0; i < lam.size(); ++i) {
        if (lam[i] < 0.0) {
            clipped = std::max(clipped, -lam[i]);
            lam[i] = 0.0;
        }
    }
    if (clip_mag) *clip_mag = std::max(*clip_mag, clipped);
    return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

mat_t psd_pinv(const mat_t& W) {
    if (W.rows() == 0) return W;
    Eigen::SelfAdjointEigenSolver<mat_t> eig(W);
    const double cut = 1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    vec_t inv = vec_t::Zero(eig.eigenvalues().size());
    for (int i = 0; i < inv.size(); ++i) {
        if (eig.eigenvalues()[i] > cut) inv[i] = 1.0 / eig.eigenvalues()[i];
    }
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

mat_t psd_inv_sqrt(const mat_t& W) {
    Eigen::SelfAdjointEigenSolver<mat_t> eig(W);
    const double cut = 1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    vec_t inv = vec_t::Zero(eig.eigenvalues().size());
    for (int i = 0; i < inv.size(); ++i) {
        if (eig.eigenvalues()[i] > cut) inv[i] = 1.0 / std::sqrt(eig.eigenvalues()[i]);
    }
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

} // namespace

mat_t graph_laplacian(const riemannian_structure_t& rs) {
    const auto verts = basis_of(rs.complex(), 0);
    const int n = static_cast<int>(verts.size());
    std::map<index_t, int> pos;
    for (int i = 0; i < n; ++i) pos[verts[i].vertices[0]] = i;

    mat_t L = mat_t::Zero(n, n);
    for (const auto& e : rs.complex().simplices(1)) {
        const double a = rs.edge_inner(e.vertices[0], e, e);
        const int i = pos.at(e.vertices[0]);
        const int j = pos.at(e.vertices[1]);
        L(i, j) -= a;
        L(j, i) -= a;
        L(i, i) += a;
        L(j, j) += a;
    }
    return L;
}

hodge_operators_t hodge_operators_t::build(const riemannian_structure_t& rs) {
    hodge_operators_t ops;
    ops.structure_ = &rs;
    const auto& K = rs.complex();
    const int d = K.dim();

    ops.bases_.resize(d + 1);
    ops.boundary_.resize(d + 1);
    ops.weight_raw_.resize(d + 1);
    ops.weight_psd_.resize(d + 1);
    ops.weight_pinv_.resize(d + 1);
    ops.lap_form_.resize(d + 1);
    ops.whitney_.resize(d + 1);

    for (int p = 0; p <= d; ++p) ops.bases_[p] = basis_of(K, p);
    for (int p = 1; p <= d; ++p) ops.boundary_[p] = boundary_matrix(K, p);

    // Entrywise weight matrices from the metric. Off-diagonal entries use
    // the full common face as the base simplex; diagonals use the lowest
    // vertex. Disjoint simplices share no star and get 0.
    for (int p = 0; p <= d; ++p) {
        const auto& basis = ops.bases_[p];
        const int m = static_cast<int>(basis.size());
        mat_t W = mat_t::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            for (int j = i; j < m; ++j) {
                double val = 0.0;
                if (p == 0) {
                    val = (i == j) ? rs.vertex_inner(basis[i].vertices[0]) : 0.0;
                } else if (i == j) {
                    val = rs.higher_inner(simplex_t({basis[i].vertices[0]}), basis[i],
                                          basis[i]);
                } else {
                    std::vector<index_t> shared;
                    std::set_intersection(basis[i].vertices.begin(),
                                          basis[i].vertices.end(),
                                          basis[j].vertices.begin(),
                                          basis[j].vertices.end(),
                                          std::back_inserter(shared));
                    if (!shared.empty()) {
                        val = rs.higher_inner(simplex_t(shared), basis[i], basis[j]);
                    }
                }
                W(i, j) = val;
                W(j, i) = val;
            }
        }
        ops.weight_raw_[p] = W;
        ops.weight_psd_[p] = psd_clip(W, &ops.clip_magnitude_);
        ops.weight_pinv_[p] = psd_pinv(ops.weight_psd_[p]);
    }

    for (int p = 0; p <= d; ++p) {
        const int np = static_cast<int>(ops.bases_[p].size());
        mat_t A = mat_t::Zero(np, np);
        if (p + 1 <= d && !ops.bases_[p + 1].empty()) {
            const mat_t& Bup = ops.boundary_[p + 1];
            A += Bup * ops.weight_psd_[p + 1] * Bup.transpose();
        }
        if (p >= 1) {
            const mat_t& B = ops.boundary_[p];
            A += ops.weight_psd_[p] * B.transpose() * ops.weight_pinv_[p - 1] * B *
                 ops.weight_psd_[p];
        }
        ops.lap_form_[p] = A;
    }

    // Whitney lift matrices from Cayley-Menger volumes over metric lengths.
    const int n0 = static_cast<int>(ops.bases_[0].size());
    std::map<index_t, int> vpos;
    for (int i = 0; i < n0; ++i) vpos[ops.bases_[0][i].vertices[0]] = i;
    for (int p = 0; p <= d; ++p) {
        const auto& basis = ops.bases_[p];
        mat_t Kp = mat_t::Zero(static_cast<int>(basis.size()), n0);
        for (std::size_t s = 0; s < basis.size(); ++s) {
            double vol = 0.0;
            try {
                vol = ops.simplex_volume(basis[s]);
            } catch (const input_error_t&) {
                // metric lengths not embeddable: the lift vanishes there
                // and the simplex is flagged for reports
                ops.whitney_flagged_.insert(basis[s]);
            }
            const double w = vol / static_cast<double>(p + 1);
            for (index_t v : basis[s].vertices) {
                Kp(static_cast<int>(s), vpos.at(v)) = w;
            }
        }
        ops.whitney_[p] = Kp;
    }

    ops.graph_laplacian_ = graph_laplacian(rs);

    vec_t w0 = ops.weight_psd_[0].diagonal();
    const double total = w0.sum();
    ops.centering_ =
        mat_t::Identity(n0, n0) - vec_t::Ones(n0) * (w0.transpose() / total);
    return ops;
}

const std::vector<simplex_t>& hodge_operators_t::basis(int p) const {
    if (p < 0 || p >= static_cast<int>(bases_.size())) {
        throw input_error_t("hodge: dimension out of range");
    }
    return bases_[p];
}

index_t hodge_operators_t::vertex_position(index_t vertex_id) const {
    const auto& b = bases_[0];
    auto it = std::lower_bound(b.begin(), b.end(), simplex_t({vertex_id}));
    if (it == b.end() || it->vertices[0] != vertex_id) {
        throw input_error_t("hodge: unknown vertex id");
    }
    return static_cast<index_t>(it - b.begin());
}

const mat_t& hodge_operators_t::boundary_op(int p) const {
    if (p < 1 || p >= static_cast<int>(boundary_.size())) {
        throw input_error_t("hodge: boundary operator out of range");
    }
    return boundary_[p];
}

const mat_t& hodge_operators_t::weight(int p) const {
    if (p < 0 || p >= static_cast<int>(weight_raw_.size())) {
        throw input_error_t("hodge: weight dimension out of range");
    }
    return weight_raw_[p];
}

const mat_t& hodge_operators_t::weight_psd(int p) const {
    if (p < 0 || p >= static_cast<int>(weight_psd_.size())) {
        throw input_error_t("hodge: weight dimension out of range");
    }
    return weight_psd_[p];
}

const mat_t& hodge_operators_t::laplacian_form(int p) const {
    if (p < 0 || p >= static_cast<int>(lap_form_.size())) {
        throw input_error_t("hodge: laplacian dimension out of range");
    }
    return lap_form_[p];
}

mat_t hodge_operators_t::laplacian_power_form(int p, int k) const {
    if (k < 1) throw input_error_t("hodge: laplacian power must be >= 1");
    const mat_t& A = laplacian_form(p);
    mat_t out = A;
    for (int i = 1; i < k; ++i) out = out * weight_pinv_[p] * A;
    return out;
}

vec_t hodge_operators_t::spectrum(int p) const {
    if (p == 0) {
        Eigen::SelfAdjointEigenSolver<mat_t> eig(graph_laplacian_);
        return eig.eigenvalues();
    }
    const mat_t& W = weight_psd_[p];
    if (W.rows() == 0) return vec_t();
    const mat_t R = psd_inv_sqrt(W);
    const mat_t S = R * laplacian_form(p) * R;
    Eigen::SelfAdjointEigenSolver<mat_t> eig(0.5 * (S + S.transpose()));
    return eig.eigenvalues();
}

const mat_t& hodge_operators_t::whitney_matrix(int p) const {
    if (p < 0 || p >= static_cast<int>(whitney_.size())) {
        throw input_error_t("hodge: whitney dimension out of range");
    }
    return whitney_[p];
}

double hodge_operators_t::simplex_volume(const simplex_t& s) const {
    const int m = s.dim() + 1;
    mat_t L = mat_t::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            const simplex_t e({s.vertices[i], s.vertices[j]});
            const double len = structure_->edge_length(e);
            L(i, j) = len;
            L(j, i) = len;
        }
    }
    return simplex_volume_cayley_menger(L);
}

double whitney_lift_value(const mat_t& edge_lengths, const vec_t& u) {
    if (edge_lengths.rows() != u.size()) {
        throw input_error_t("whitney_lift_value: vertex count mismatch");
    }
    const double vol = simplex_volume_cayley_menger(edge_lengths);
    return vol * u.sum() / static_cast<double>(u.size());
}

cochain_t whitney_lift(const vec_t& u, int p, const hodge_operators_t& ops) {
    if (u.size() != static_cast<index_t>(ops.basis(0).size())) {
        throw input_error_t("whitney_lift: function not defined on all vertices");
    }
    for (const auto& s : ops.whitney_flagged()) {
        if (s.dim() == p) {
            throw input_error_t("whitney_lift: simplex lengths not embeddable");
        }
    }
    const vec_t lifted = ops.whitney_matrix(p) * u;
    cochain_t out;
    out.dim = p;
    const auto& basis = ops.basis(p);
    for (std::size_t i = 0; i < basis.size(); ++i) out.values[basis[i]] = lifted[i];
    return out;
}

mat_t extended_laplacian_matrix(const std::vector<double>& alphas,
                                const hodge_operators_t& ops) {
    mat_t L = ops.graph_laplacian_matrix();
    const mat_t& P = ops.centering();
    const mat_t W0inv = [&] {
        vec_t d = ops.weight_psd(0).diagonal();
        for (int i = 0; i < d.size(); ++i) d[i] = 1.0 / d[i];
        return mat_t(d.asDiagonal());
    }();
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        const int p = static_cast<int>(a) + 1;
        if (alphas[a] == 0.0 || p > ops.dim()) continue;
        const mat_t& Kp = ops.whitney_matrix(p);
        L += alphas[a] * W0inv * P.transpose() *
             (Kp.transpose() * ops.laplacian_form(p) * Kp) * P;
    }
    return L;
}

vec_t extended_laplacian_apply(const vec_t& u, const std::vector<double>& alphas,
                               const hodge_operators_t& ops) {
    for (double a : alphas) {
        if (a < 0.0) throw input_error_t("extended laplacian: alphas must be >= 0");
    }
    return extended_laplacian_matrix(alphas, ops) * u;
}

mat_t spline_penalty_matrix(const std::vector<spline_term_t>& terms,
                            const hodge_operators_t& ops) {
    const int n0 = static_cast<int>(ops.basis(0).size());
    mat_t Q = mat_t::Zero(n0, n0);
    const mat_t& P = ops.centering();
    for (const auto& t : terms) {
        if (t.lambda < 0.0) throw input_error_t("spline: lambda must be >= 0");
        if (t.lambda == 0.0 || t.p > ops.dim()) continue;
        const mat_t KP = ops.whitney_matrix(t.p) * P;
        Q += t.lambda * KP.transpose() * ops.laplacian_power_form(t.p, t.k) * KP;
    }
    return 0.5 * (Q + Q.transpose());
}

vec_t solve_simplicial_spline(const spline_problem_t& problem,
                              const hodge_operators_t& ops) {
    const int n0 = static_cast<int>(ops.basis(0).size());
    if (problem.y.size() != n0) {
        throw input_error_t("spline: observation vector has wrong length");
    }
    const mat_t Q = spline_penalty_matrix(problem.penalties, ops);
    const mat_t M = mat_t::Identity(n0, n0) + Q;
    Eigen::LLT<mat_t> llt(M);
    if (llt.info() != Eigen::Success) {
        throw internal_error_t("spline: system matrix not positive definite");
    }
    vec_t u = llt.solve(problem.y);
    const double res = (M * u - problem.y).norm();
    if (res > 1e-8 * std::max(1.0, problem.y.norm())) {
        u += llt.solve(problem.y - M * u); // one refinement pass
    }
    return u;
}

double spline_energy(const spline_problem_t& problem, const hodge_operators_t& ops,
                     const vec_t& u) {
    const mat_t Q = spline_penalty_matrix(problem.penalties, ops);
    const vec_t r = problem.y - u;
    return r.squaredNorm() + u.dot(Q * u);
}

spectrum_snapshot_t spectrum_of(const hodge_operators_t& ops) {
    spectrum_snapshot_t snap;
    for (int p = 0; p <= ops.dim(); ++p) snap.by_dim.push_back(ops.spectrum(p));
    return snap;
}

spectral_signature_t spectral_signature(const std::vector<spectrum_snapshot_t>& series,
                                        std::size_t at, std::size_t baseline) {
    if (series.empty() || at >= series.size() || baseline >= series.size()) {
        throw input_error_t("spectral_signature: iteration out of range");
    }
    auto smallest_positive = [](const vec_t& lam, int p) -> double {
        if (p == 0) {
            // spectral gap: second eigenvalue of the graph Laplacian
            return lam.size() >= 2 ? lam[1] : 0.0;
        }
        for (int i = 0; i < lam.size(); ++i) {
            if (lam[i] > kEigZero) return lam[i];
        }
        return 0.0;
    };

    spectral_signature_t sig;
    const auto& base = series[baseline];
    const auto& cur = series[at];
    double health = INF_MARKER;
    for (std::size_t p = 0; p < base.by_dim.size() && p < cur.by_dim.size(); ++p) {
        const double b = smallest_positive(base.by_dim[p], static_cast<int>(p));
        if (b <= kEigZero) {
            sig.warnings.push_back("dimension " + std::to_string(p) +
                                   ": baseline eigenvalue is zero, excluded");
            continue;
        }
        const double c = smallest_positive(cur.by_dim[p], static_cast<int>(p));
        sig.dims.push_back(static_cast<int>(p));
        sig.ratios.push_back(c / b);
        health = std::min(health, c / b);
    }
    sig.geometric_health = std::isfinite(health) ? health : 1.0;
    return sig;
}

} // namespace riemplex
