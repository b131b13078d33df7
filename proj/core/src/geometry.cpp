#include "riemplex/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace riemplex::geom {

// ================================================================
// Simplex method
// ================================================================

namespace {

// One simplex pass over tableau T = [A | b] with cost row kept separately.
// Bland's rule: entering = lowest eligible index, leaving = lowest basic
// index among min-ratio rows.
lp_status_t run_simplex(mat_t& T, std::vector<int>& basis, vec_t& cost,
                        double& objective, double eps) {
    const int m = static_cast<int>(T.rows());
    const int n = static_cast<int>(T.cols()) - 1;

    // Reduced costs: objective row z = cost - sum over basic rows.
    vec_t z = cost;
    double obj = 0.0;
    for (int i = 0; i < m; ++i) {
        const double cb = cost[basis[i]];
        if (cb != 0.0) {
            z -= cb * T.row(i).head(n).transpose();
            obj -= cb * T(i, n);
        }
    }

    const int max_iters = 50 * (m + n + 10);
    for (int iter = 0; iter < max_iters; ++iter) {
        int enter = -1;
        for (int j = 0; j < n; ++j) {
            if (z[j] < -eps) { enter = j; break; }
        }
        if (enter < 0) {
            objective = -obj;
            return lp_status_t::OPTIMAL;
        }

        int leave = -1;
        double best_ratio = 0.0;
        for (int i = 0; i < m; ++i) {
            const double aij = T(i, enter);
            if (aij > eps) {
                const double ratio = T(i, n) / aij;
                if (leave < 0 || ratio < best_ratio - eps ||
                    (std::abs(ratio - best_ratio) <= eps && basis[i] < basis[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
        }
        if (leave < 0) return lp_status_t::UNBOUNDED;

        // Pivot on (leave, enter).
        T.row(leave) /= T(leave, enter);
        for (int i = 0; i < m; ++i) {
            if (i == leave) continue;
            const double f = T(i, enter);
            if (f != 0.0) T.row(i) -= f * T.row(leave);
        }
        const double fz = z[enter];
        if (fz != 0.0) {
            z -= fz * T.row(leave).head(n).transpose();
            obj -= fz * T(leave, n);
        }
        basis[leave] = enter;
    }
    throw internal_error_t("simplex: iteration limit reached");
}

} // namespace

lp_result_t solve_lp_standard(const mat_t& A, const vec_t& b, const vec_t& c,
                              double pivot_eps) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());

    // Phase 1 tableau: [A I | b] with b >= 0.
    mat_t T(m, n + m + 1);
    T.block(0, 0, m, n) = A;
    T.block(0, n, m, m) = mat_t::Identity(m, m);
    T.col(n + m) = b;
    for (int i = 0; i < m; ++i) {
        if (T(i, n + m) < 0.0) T.row(i) *= -1.0;
        T(i, n + i) = 1.0; // restore the artificial after a possible sign flip
        for (int j = 0; j < m; ++j)
            if (j != i) T(i, n + j) = 0.0;
    }

    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;

    vec_t phase1_cost = vec_t::Zero(n + m);
    phase1_cost.tail(m).setOnes();

    double obj1 = 0.0;
    lp_status_t s1 = run_simplex(T, basis, phase1_cost, obj1, pivot_eps);
    if (s1 != lp_status_t::OPTIMAL || obj1 > 1e-7 * (1.0 + b.cwiseAbs().maxCoeff())) {
        return {lp_status_t::INFEASIBLE, vec_t(), 0.0};
    }

    // Drive remaining artificials out of the basis; rows that cannot be
    // pivoted are redundant and get neutralized.
    std::vector<bool> row_active(m, true);
    for (int i = 0; i < m; ++i) {
        if (basis[i] < n) continue;
        int enter = -1;
        for (int j = 0; j < n; ++j) {
            if (std::abs(T(i, j)) > 1e-8) { enter = j; break; }
        }
        if (enter < 0) {
            row_active[i] = false;
            continue;
        }
        T.row(i) /= T(i, enter);
        for (int k = 0; k < m; ++k) {
            if (k == i) continue;
            const double f = T(k, enter);
            if (f != 0.0) T.row(k) -= f * T.row(i);
        }
        basis[i] = enter;
    }

    // Phase 2 on the original columns only (artificial columns are pinned by
    // zeroing them so they can never re-enter).
    mat_t T2(m, n + 1);
    T2.block(0, 0, m, n) = T.block(0, 0, m, n);
    T2.col(n) = T.col(n + m);
    for (int i = 0; i < m; ++i) {
        if (!row_active[i]) {
            T2.row(i).setZero(); // redundant constraint
            basis[i] = -1;
        }
    }
    // Compact away neutralized rows.
    std::vector<int> keep;
    for (int i = 0; i < m; ++i)
        if (basis[i] >= 0) keep.push_back(i);
    mat_t T3(static_cast<int>(keep.size()), n + 1);
    std::vector<int> basis3;
    for (size_t i = 0; i < keep.size(); ++i) {
        T3.row(static_cast<int>(i)) = T2.row(keep[i]);
        basis3.push_back(basis[keep[i]]);
    }

    vec_t cost = c;
    double obj2 = 0.0;
    lp_status_t s2 = run_simplex(T3, basis3, cost, obj2, pivot_eps);
    if (s2 != lp_status_t::OPTIMAL) return {s2, vec_t(), 0.0};

    vec_t x = vec_t::Zero(n);
    for (size_t i = 0; i < basis3.size(); ++i) {
        if (basis3[i] < n) x[basis3[i]] = T3(static_cast<int>(i), n);
    }
    return {lp_status_t::OPTIMAL, x, obj2};
}

// ================================================================
// Chebyshev center / feasibility
// ================================================================

chebyshev_t chebyshev_center(const std::vector<halfspace_t>& rows, const vec_t& lo,
                             const vec_t& hi) {
    const int n = static_cast<int>(lo.size());
    for (int j = 0; j < n; ++j) {
        if (lo[j] > hi[j]) return {vec_t(), -INF_MARKER};
    }

    // Normalized rows: constraint rows plus both box sides. Variables are
    // u = x - lo >= 0, r = r+ - r- free; slacks make each row an equality.
    std::vector<vec_t> na;
    std::vector<double> nc;
    for (const auto& h : rows) {
        const double nrm = h.a.norm();
        if (nrm < 1e-14) {
            if (h.c < -1e-12) return {vec_t(), -INF_MARKER}; // 0 <= c violated
            continue;
        }
        na.push_back(h.a / nrm);
        nc.push_back((h.c - h.a.dot(lo)) / nrm);
    }
    for (int j = 0; j < n; ++j) {
        vec_t e = vec_t::Zero(n);
        e[j] = 1.0;
        na.push_back(e);
        nc.push_back(hi[j] - lo[j]);
        na.push_back(-e);
        nc.push_back(0.0);
    }

    const int m = static_cast<int>(na.size());
    // Columns: u (n), r+, r-, slacks (m).
    mat_t A = mat_t::Zero(m, n + 2 + m);
    vec_t b(m);
    for (int i = 0; i < m; ++i) {
        A.row(i).head(n) = na[i].transpose();
        A(i, n) = 1.0;
        A(i, n + 1) = -1.0;
        A(i, n + 2 + i) = 1.0;
        b[i] = nc[i];
    }
    vec_t c = vec_t::Zero(n + 2 + m);
    c[n] = -1.0; // maximize r
    c[n + 1] = 1.0;

    lp_result_t res = solve_lp_standard(A, b, c);
    if (res.status != lp_status_t::OPTIMAL) return {vec_t(), -INF_MARKER};
    chebyshev_t out;
    out.center = res.x.head(n) + lo;
    out.radius = res.x[n] - res.x[n + 1];
    return out;
}

bool feasible_closed(const std::vector<halfspace_t>& rows, const vec_t& lo,
                     const vec_t& hi, double tol) {
    chebyshev_t ch = chebyshev_center(rows, lo, hi);
    return ch.radius >= -tol;
}

// ================================================================
// Vertex enumeration and polytope measures
// ================================================================

std::vector<vec_t> enumerate_vertices(const std::vector<halfspace_t>& rows,
                                      const vec_t& lo, const vec_t& hi, double tol,
                                      std::int64_t max_combinations) {
    const int n = static_cast<int>(lo.size());
    std::vector<halfspace_t> all = rows;
    for (int j = 0; j < n; ++j) {
        vec_t e = vec_t::Zero(n);
        e[j] = 1.0;
        all.push_back({e, hi[j]});
        all.push_back({-e, -lo[j]});
    }
    const int m = static_cast<int>(all.size());
    if (n == 0) return {vec_t()};

    // Dedupe identical rows to cut the combination count.
    {
        std::vector<halfspace_t> uniq;
        for (const auto& h : all) {
            bool dup = false;
            for (const auto& u : uniq) {
                if ((u.a - h.a).lpNorm<Eigen::Infinity>() < 1e-12 &&
                    std::abs(u.c - h.c) < 1e-12) {
                    dup = true;
                    break;
                }
            }
            if (!dup) uniq.push_back(h);
        }
        all = std::move(uniq);
    }
    const int mu = static_cast<int>(all.size());

    std::int64_t combos = 1;
    for (int i = 0; i < n; ++i) combos = combos * (mu - i) / (i + 1);
    if (combos > max_combinations) {
        throw internal_error_t("vertex enumeration: too many constraint subsets");
    }

    const double scale = std::max(1.0, (hi - lo).lpNorm<Eigen::Infinity>());
    const double feas_tol = tol * scale;
    const double point_tol = 1e-7 * scale;

    std::vector<vec_t> verts;
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;

    mat_t M(n, n);
    vec_t rhs(n);
    while (true) {
        for (int i = 0; i < n; ++i) {
            M.row(i) = all[idx[i]].a.transpose();
            rhs[i] = all[idx[i]].c;
        }
        Eigen::FullPivLU<mat_t> lu(M);
        lu.setThreshold(1e-9);
        if (lu.rank() == n) {
            vec_t x = lu.solve(rhs);
            bool ok = x.allFinite();
            for (int i = 0; ok && i < mu; ++i) {
                if (all[i].a.dot(x) > all[i].c + feas_tol) ok = false;
            }
            if (ok) {
                bool dup = false;
                for (const auto& v : verts) {
                    if ((v - x).lpNorm<Eigen::Infinity>() < point_tol) {
                        dup = true;
                        break;
                    }
                }
                if (!dup) verts.push_back(x);
            }
        }
        // next combination
        int k = n - 1;
        while (k >= 0 && idx[k] == mu - n + k) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
    }
    return verts;
}

affine_hull_t affine_hull(const std::vector<vec_t>& points, double tol) {
    affine_hull_t hull;
    if (points.empty()) return hull;
    const int n = static_cast<int>(points[0].size());
    vec_t mu = vec_t::Zero(n);
    for (const auto& p : points) mu += p;
    mu /= static_cast<double>(points.size());

    mat_t D(static_cast<int>(points.size()), n);
    for (size_t i = 0; i < points.size(); ++i) D.row(static_cast<int>(i)) = (points[i] - mu).transpose();

    Eigen::JacobiSVD<mat_t> svd(D, Eigen::ComputeThinV);
    const vec_t sv = svd.singularValues();
    const double cut = tol * std::max(1.0, sv.size() > 0 ? sv[0] : 0.0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > cut) ++rank;

    hull.point = mu;
    hull.dim = rank;
    hull.basis = svd.matrixV().leftCols(rank);
    return hull;
}

vec_t hull_normal(const affine_hull_t& hull, int ambient_dim) {
    if (hull.dim != ambient_dim - 1) {
        throw input_error_t("hull_normal: carrier is not codimension 1");
    }
    // Orthonormal complement of the basis via full SVD of its transpose.
    mat_t B = hull.basis;
    Eigen::JacobiSVD<mat_t> svd(B.transpose(), Eigen::ComputeFullV);
    return svd.matrixV().col(ambient_dim - 1);
}

namespace {

double measure_recursive(const std::vector<vec_t>& verts,
                         const std::vector<halfspace_t>& rows, double tol);

// 2-d polygon area: vertices of a convex polygon in hull coordinates,
// angular sort around the centroid, shoelace.
double polygon_area(std::vector<Eigen::Vector2d> pts) {
    Eigen::Vector2d c(0, 0);
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    std::sort(pts.begin(), pts.end(), [&](const auto& a, const auto& b) {
        return std::atan2(a.y() - c.y(), a.x() - c.x()) <
               std::atan2(b.y() - c.y(), b.x() - c.x());
    });
    double area = 0.0;
    const size_t k = pts.size();
    for (size_t i = 0; i < k; ++i) {
        const auto& p = pts[i];
        const auto& q = pts[(i + 1) % k];
        area += p.x() * q.y() - q.x() * p.y();
    }
    return std::abs(area) / 2.0;
}

double measure_in_hull(const std::vector<vec_t>& verts,
                       const std::vector<halfspace_t>& rows,
                       const affine_hull_t& hull, double tol) {
    const int k = hull.dim;
    if (k == 0) return 1.0;
    if (k == 1) {
        double lo = INF_MARKER, hi = -INF_MARKER;
        for (const auto& v : verts) {
            const double t = hull.basis.col(0).dot(v - hull.point);
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
        return hi - lo;
    }
    if (k == 2) {
        std::vector<Eigen::Vector2d> pts;
        pts.reserve(verts.size());
        for (const auto& v : verts) {
            const vec_t y = hull.basis.transpose() * (v - hull.point);
            pts.emplace_back(y[0], y[1]);
        }
        return polygon_area(pts);
    }

    // k >= 3: facet decomposition. Facets come from active constraint rows;
    // coplanar rows collapse onto the same vertex set.
    const double scale = 1.0 + std::abs(hull.point.lpNorm<Eigen::Infinity>());
    const double act_tol = std::max(tol, 1e-8) * scale;

    vec_t centroid = vec_t::Zero(verts[0].size());
    for (const auto& v : verts) centroid += v;
    centroid /= static_cast<double>(verts.size());
    const vec_t c_hull = hull.basis.transpose() * (centroid - hull.point);

    std::set<std::vector<int>> seen;
    double vol = 0.0;
    for (const auto& row : rows) {
        std::vector<int> active;
        for (size_t i = 0; i < verts.size(); ++i) {
            if (std::abs(row.a.dot(verts[i]) - row.c) <= act_tol * (1.0 + row.a.norm()))
                active.push_back(static_cast<int>(i));
        }
        if (static_cast<int>(active.size()) < k) continue;
        if (!seen.insert(active).second) continue;

        std::vector<vec_t> fverts;
        for (int i : active) fverts.push_back(verts[i]);
        affine_hull_t fhull = affine_hull(fverts);
        if (fhull.dim != k - 1) continue;

        const double fmeasure = measure_in_hull(fverts, rows, fhull, tol);

        // Distance from the interior point to the facet plane, inside hull coords.
        const vec_t f_pt = hull.basis.transpose() * (fhull.point - hull.point);
        mat_t f_basis = hull.basis.transpose() * fhull.basis; // k x (k-1)
        Eigen::JacobiSVD<mat_t> svd(f_basis.transpose(), Eigen::ComputeFullV);
        const vec_t nrm = svd.matrixV().col(k - 1);
        vol += std::abs(nrm.dot(c_hull - f_pt)) * fmeasure;
    }
    return vol / static_cast<double>(k);
}

double measure_recursive(const std::vector<vec_t>& verts,
                         const std::vector<halfspace_t>& rows, double tol) {
    affine_hull_t hull = affine_hull(verts);
    return measure_in_hull(verts, rows, hull, tol);
}

} // namespace

double polytope_measure(const std::vector<vec_t>& verts,
                        const std::vector<halfspace_t>& rows, double tol) {
    if (verts.empty()) return 0.0;
    return measure_recursive(verts, rows, tol);
}

mc_volume_t monte_carlo_volume(const std::vector<halfspace_t>& rows, const vec_t& lo,
                               const vec_t& hi, std::int64_t n_samples, rng_t& rng) {
    const int n = static_cast<int>(lo.size());
    double box_vol = 1.0;
    for (int j = 0; j < n; ++j) box_vol *= (hi[j] - lo[j]);

    std::int64_t hits = 0;
    vec_t x(n);
    for (std::int64_t s = 0; s < n_samples; ++s) {
        for (int j = 0; j < n; ++j) x[j] = rng.uniform(lo[j], hi[j]);
        bool in = true;
        for (const auto& h : rows) {
            if (h.a.dot(x) > h.c) {
                in = false;
                break;
            }
        }
        if (in) ++hits;
    }
    const double frac = static_cast<double>(hits) / static_cast<double>(n_samples);
    mc_volume_t out;
    out.volume = frac * box_vol;
    out.std_error = box_vol * std::sqrt(std::max(0.0, frac * (1.0 - frac) /
                                                          static_cast<double>(n_samples)));
    out.samples = n_samples;
    return out;
}

// ================================================================
// Optimal transport
// ================================================================

double wasserstein1(const vec_t& mu, const vec_t& nu, const mat_t& cost) {
    const int r = static_cast<int>(mu.size());
    const int s = static_cast<int>(nu.size());
    if (cost.rows() != r || cost.cols() != s) {
        throw input_error_t("wasserstein1: cost matrix shape mismatch");
    }
    if (std::abs(mu.sum() - nu.sum()) > 1e-9 * (1.0 + std::abs(mu.sum()))) {
        throw input_error_t("wasserstein1: measures carry different total mass");
    }

    mat_t A = mat_t::Zero(r + s, r * s);
    vec_t b(r + s);
    vec_t c(r * s);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < s; ++j) {
            const int col = i * s + j;
            A(i, col) = 1.0;
            A(r + j, col) = 1.0;
            c[col] = cost(i, j);
        }
    }
    b.head(r) = mu;
    b.tail(s) = nu;

    lp_result_t res = solve_lp_standard(A, b, c);
    if (res.status != lp_status_t::OPTIMAL) {
        throw internal_error_t("wasserstein1: transport LP did not solve");
    }
    return res.objective;
}

int permutation_sign(const std::vector<index_t>& from, const std::vector<index_t>& to) {
    const size_t n = from.size();
    if (to.size() != n) throw input_error_t("permutation_sign: length mismatch");
    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) {
        bool found = false;
        for (size_t j = 0; j < n; ++j) {
            if (to[j] == from[i]) {
                perm[i] = j;
                found = true;
                break;
            }
        }
        if (!found) throw input_error_t("permutation_sign: not a permutation");
    }
    int sign = 1;
    std::vector<bool> vis(n, false);
    for (size_t i = 0; i < n; ++i) {
        if (vis[i]) continue;
        size_t len = 0, j = i;
        while (!vis[j]) {
            vis[j] = true;
            j = perm[j];
            ++len;
        }
        if (len % 2 == 0) sign = -sign;
    }
    return sign;
}

} // namespace riemplex::geom
