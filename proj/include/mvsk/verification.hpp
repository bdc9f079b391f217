#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "oracle.hpp"
#include "rng.hpp"
#include "simplex.hpp"

namespace mvsk {

/// Dense central comoment arrays for cross-checking the matrix-free oracles.
/// third and fourth are flattened row-major: third(j, k*n+l) and
/// fourth(j, (k*n+l)*n+m). Memory is O(n^4), hence the hard cap.
struct ExplicitTensors {
    index_t n = 0;
    Mat sigma;  // (1/T) sum a_t a_t^T
    Mat third;  // (1/T) sum a_t (a_t x a_t)^T
    Mat fourth; // (1/T) sum a_t (a_t x a_t x a_t)^T
};

inline constexpr index_t explicit_tensor_cap = 32;

inline ExplicitTensors build_explicit_tensors(const ReturnPanel& panel) {
    const index_t n = panel.assets();
    const index_t T = panel.periods();
    if (n > explicit_tensor_cap)
        throw domain_error("build_explicit_tensors: dense comoments are capped at 32 assets");
    ExplicitTensors tx;
    tx.n = n;
    tx.sigma = Mat::Zero(n, n);
    tx.third = Mat::Zero(n, n * n);
    tx.fourth = Mat::Zero(n, n * n * n);
    Vec a2(n * n), a3(n * n * n);
    for (index_t t = 0; t < T; ++t) {
        const Vec a = panel.A.row(t).transpose();
        for (index_t j = 0; j < n; ++j)
            for (index_t k = 0; k < n; ++k) a2[j * n + k] = a[j] * a[k];
        for (index_t p = 0; p < n * n; ++p)
            for (index_t l = 0; l < n; ++l) a3[p * n + l] = a2[p] * a[l];
        tx.sigma.noalias() += a * a.transpose();
        tx.third.noalias() += a * a2.transpose();
        tx.fourth.noalias() += a * a3.transpose();
    }
    const double inv_T = 1.0 / static_cast<double>(T);
    tx.sigma *= inv_T;
    tx.third *= inv_T;
    tx.fourth *= inv_T;
    return tx;
}

/// Objective and gradient through the dense tensors; the symmetric-tensor
/// gradient rule gives grad = -c1 mu + 2 c2 Sx - 3 c3 C3[.,x,x] + 4 c4 C4[.,x,x,x].
inline std::pair<double, Vec> tensor_value_grad(const ExplicitTensors& tx, const Vec& mu,
                                                const PreferenceCoefficients& c,
                                                const Vec& x) {
    const index_t n = tx.n;
    if (x.size() != n || mu.size() != n)
        throw dimension_error("tensor_value_grad: size mismatch");
    Vec w2(n * n), w3(n * n * n);
    for (index_t j = 0; j < n; ++j)
        for (index_t k = 0; k < n; ++k) w2[j * n + k] = x[j] * x[k];
    for (index_t p = 0; p < n * n; ++p)
        for (index_t l = 0; l < n; ++l) w3[p * n + l] = w2[p] * x[l];
    const Vec y2 = tx.sigma * x;
    const Vec y3 = tx.third * w2;
    const Vec y4 = tx.fourth * w3;
    const double f = -c.c1 * mu.dot(x) + c.c2 * x.dot(y2) - c.c3 * x.dot(y3) +
                     c.c4 * x.dot(y4);
    Vec g = -c.c1 * mu + 2.0 * c.c2 * y2 - 3.0 * c.c3 * y3 + 4.0 * c.c4 * y4;
    return {f, std::move(g)};
}

/// Global convexity certificate for the period penalty: psi''(s) > 0 for all
/// real s iff c4 > 0 and 8 c2 c4 > 3 c3^2. margin is inf_s psi''(s).
struct CertificateReport {
    bool certified = false;
    double gap = 0;    // 8 c2 c4 - 3 c3^2
    double margin = 0; // inf of psi'' over the real line
};

inline CertificateReport convexity_certificate(const PreferenceCoefficients& c) {
    CertificateReport r;
    r.gap = 8.0 * c.c2 * c.c4 - 3.0 * c.c3 * c.c3;
    r.certified = c.c4 > 0 && r.gap > 0;
    if (c.c4 > 0)
        r.margin = r.gap / (4.0 * c.c4);
    else if (c.c4 == 0 && c.c3 == 0)
        r.margin = 2.0 * c.c2;
    else
        r.margin = -std::numeric_limits<double>::infinity();
    return r;
}

/// Largest singular value of A by power iteration on A^T A.
inline double operator_norm(const Mat& A, double tol = 1e-8, int max_iter = 500) {
    if (A.size() == 0) return 0.0;
    SplitMix64 rng(0x09e377u);
    Vec v(A.cols());
    for (index_t i = 0; i < v.size(); ++i) v[i] = rng.next_normal();
    const double nv = v.norm();
    if (nv > 0)
        v /= nv;
    else
        v.setConstant(1.0 / std::sqrt(static_cast<double>(v.size())));
    double sigma = 0.0;
    for (int k = 0; k < max_iter; ++k) {
        const Vec w = A * v;
        const double s = w.norm();
        if (!(s > 0)) return 0.0;
        Vec u = A.transpose() * w;
        const double nu = u.norm();
        const bool settled = std::abs(s - sigma) <= tol * std::max(1.0, s);
        sigma = s;
        if (settled || !(nu > 0)) break;
        v = u / nu;
    }
    return sigma;
}

/// Smoothness and curvature constants of the objective over the tau-slice,
/// all derived from the operator norm bound B on the centered sample values.
struct RegularityReport {
    double tau = 0;
    double a_norm = 0;   // ||A||_op by power iteration
    double b_tau = 0;    // bound on |z_t| over the slice
    double l_tau = 0;    // gradient Lipschitz bound
    double m_tau = 0;    // Hessian Lipschitz bound
    double psi2_min = 0; // min psi'' on [-B, B]
    double psi2_max = 0; // max psi'' on [-B, B]
    double sigma_min_au = std::numeric_limits<double>::quiet_NaN();
    double sigma_max_au = std::numeric_limits<double>::quiet_NaN();
    double kappa_au = std::numeric_limits<double>::quiet_NaN();
    double mu_tau = std::numeric_limits<double>::quiet_NaN();
};

inline RegularityReport regularity_constants(const ReturnPanel& panel,
                                             const PreferenceCoefficients& c,
                                             double tau = 1e-8) {
    RegularityReport r;
    r.tau = tau;
    r.a_norm = operator_norm(panel.A);
    const double B = r.a_norm;
    r.b_tau = B;
    const double T = static_cast<double>(panel.periods());
    auto psi2 = [&](double s) { return 2.0 * c.c2 - 6.0 * c.c3 * s + 12.0 * c.c4 * s * s; };
    r.psi2_min = std::min(psi2(-B), psi2(B));
    r.psi2_max = std::max(psi2(-B), psi2(B));
    if (c.c4 > 0) {
        const double s_star = c.c3 / (4.0 * c.c4);
        if (std::abs(s_star) <= B) r.psi2_min = std::min(r.psi2_min, psi2(s_star));
    }
    r.l_tau = (r.a_norm * r.a_norm / T) *
              (2.0 * c.c2 + 6.0 * c.c3 * B + 12.0 * c.c4 * B * B);
    r.m_tau = (r.a_norm * r.a_norm * r.a_norm / T) * (6.0 * c.c3 + 24.0 * c.c4 * B);
    const index_t n = panel.assets();
    if (n >= 2 && n <= 512) {
        TangentBasis basis(n);
        const Mat W = basis.map_through(panel.A);
        Eigen::BDCSVD<Mat> svd(W);
        const Vec& sv = svd.singularValues();
        r.sigma_max_au = sv(0);
        r.sigma_min_au = sv(sv.size() - 1);
        r.kappa_au = r.sigma_min_au > 0
                         ? r.sigma_max_au / r.sigma_min_au
                         : std::numeric_limits<double>::infinity();
        r.mu_tau = (r.psi2_min / T) * r.sigma_min_au * r.sigma_min_au;
    }
    return r;
}

/// Eigenvalues of the reduced Hessian U^T grad^2 f(x) U + lambda I, formed
/// densely through the one-reflection sample map; capped well below sizes
/// where the matrix-free path is the only sane option.
struct SpectrumReport {
    double lambda_min = 0;
    double lambda_max = 0;
    double kappa_plus = 0; // lambda_max / lambda_min when positive definite
    index_t nonpositive = 0;
    Vec eigenvalues; // ascending
};

inline SpectrumReport reduced_hessian_spectrum(const ReturnPanel& panel,
                                               const PreferenceCoefficients& c,
                                               const Vec& x, double lambda = 0.0) {
    const index_t n = panel.assets();
    if (n < 2) throw domain_error("reduced_hessian_spectrum: needs at least 2 assets");
    if (n > 2048)
        throw domain_error("reduced_hessian_spectrum: dense spectrum is capped at 2048 assets");
    if (x.size() != n) throw dimension_error("reduced_hessian_spectrum: x has wrong length");
    Oracle oracle(panel, c);
    OracleCache cache = oracle.make_cache(x);
    const Vec psi2 = oracle.hessian_diag_weights(cache);
    TangentBasis basis(n);
    const Mat W = basis.map_through(panel.A);
    Mat M = (W.transpose() * psi2.asDiagonal() * W) /
            static_cast<double>(panel.periods());
    M.diagonal().array() += lambda;
    Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw numeric_error("reduced_hessian_spectrum: eigensolver failed");
    SpectrumReport rep;
    rep.eigenvalues = es.eigenvalues();
    rep.lambda_min = rep.eigenvalues(0);
    rep.lambda_max = rep.eigenvalues(rep.eigenvalues.size() - 1);
    rep.kappa_plus = rep.lambda_min > 0
                         ? rep.lambda_max / rep.lambda_min
                         : std::numeric_limits<double>::infinity();
    for (index_t i = 0; i < rep.eigenvalues.size(); ++i)
        if (rep.eigenvalues(i) <= 0) ++rep.nonpositive;
    return rep;
}

/// First-order reference: monotone projected gradient with Barzilai-Borwein
/// trial lengths and Armijo backtracking, run to a tight residual. Slow and
/// simple on purpose; the acceptance battery compares the main solver to it.
struct BaselineResult {
    Vec x;
    double f = 0;
    double kkt = 0;
    int iterations = 0;
};

inline BaselineResult projected_gradient_baseline(const ReturnPanel& panel,
                                                  const PreferenceCoefficients& coeffs,
                                                  double tau = 1e-8, double tol = 1e-8,
                                                  int max_iter = 20000, Vec x0 = Vec()) {
    const index_t n = panel.assets();
    Oracle oracle(panel, coeffs);
    if (x0.size() == 0) x0 = Vec::Constant(n, 1.0 / static_cast<double>(n));
    OracleCache cache = oracle.make_cache(std::move(x0));
    double f = oracle.value(cache);
    Vec g = oracle.gradient(cache);
    Vec x = cache.x;

    double L = 10.0;
    bool have_bb = false;
    Vec bb_s, bb_y;
    int k = 0;
    double r = gradient_mapping_residual(x, g, tau);
    for (; k < max_iter && r > tol; ++k) {
        double L0 = L;
        if (have_bb) {
            const double sy = bb_s.dot(bb_y), ss = bb_s.squaredNorm();
            L0 = (ss > 0 && sy > 0) ? sy / ss : L;
            L0 = std::min(std::max(L0, 1e-2), 1e12);
        }
        double Lk = L0;
        bool stepped = false;
        for (int bt = 0; bt < 40; ++bt) {
            Vec xp = project_slice(x - g / Lk, tau, 1.0);
            Vec dp = xp - x;
            const double gdp = g.dot(dp);
            if (gdp < 0) {
                OracleCache cp = oracle.make_cache(std::move(xp));
                const double fp = oracle.value(cp);
                if (fp <= f + 1e-4 * gdp) {
                    Vec gp = oracle.gradient(cp);
                    bb_s = std::move(dp);
                    bb_y = gp - g;
                    have_bb = true;
                    x = cp.x;
                    f = fp;
                    g = std::move(gp);
                    L = Lk;
                    stepped = true;
                    break;
                }
            }
            if (Lk > 1e13) break;
            Lk *= 2.0;
        }
        if (!stepped) break;
        r = gradient_mapping_residual(x, g, tau);
    }
    return {std::move(x), f, r, k};
}

} // namespace mvsk
