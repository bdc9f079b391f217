#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>

#include "linesearch.hpp"
#include "oracle.hpp"
#include "rng.hpp"
#include "simplex.hpp"

namespace mvsk {

/// Householder frame around the normalized reduced gradient: nu = g/||g|| and
/// an orthonormal m x (m-1) complement Q with Q^T nu = 0, both applied
/// matrix-free in O(m) through the reflector H = I - beta v v^T (H e1 = -s nu).
struct ReducedFrame {
    Vec nu;
    double grad_norm = 0;
    Vec v;
    double beta = 0;

    index_t m() const { return nu.size(); }

    // Q eta: pad to (0, eta) and reflect
    Vec apply_Q(const Vec& eta) const {
        Vec p(nu.size());
        p[0] = 0.0;
        p.tail(nu.size() - 1) = eta;
        return p - (beta * v.dot(p)) * v;
    }

    // Q^T w: reflect and drop the first coordinate
    Vec apply_Qt(const Vec& w) const {
        Vec h = w - (beta * v.dot(w)) * v;
        return h.tail(nu.size() - 1);
    }
};

inline ReducedFrame householder_frame(const Vec& reduced_grad) {
    const double gn = reduced_grad.norm();
    if (!(gn > 0))
        throw domain_error("householder_frame: zero reduced gradient (stationary)");
    if (reduced_grad.size() < 2)
        throw dimension_error("householder_frame: need m >= 2");
    ReducedFrame f;
    f.nu = reduced_grad / gn;
    f.grad_norm = gn;
    const double s = f.nu[0] >= 0.0 ? 1.0 : -1.0; // sign away from cancellation
    f.v = f.nu;
    f.v[0] += s;
    f.beta = 2.0 / f.v.squaredNorm();
    return f;
}

/// Tangent solve configuration: direct dense factorization or truncated PCG.
struct TangentSolveConfig {
    enum class Mode { direct, pcg };
    Mode mode = Mode::direct;
    double lambda = 0.0;
    double krylov_tol = 1e-3;
    int krylov_maxit = 15;
    bool jacobi = false;     // optional diagonal preconditioner, off by default
    bool exact_trace = false; // pcg mode: force exact column-wise trace
    int hutchinson_probes = 8;
    int probe_maxit = 5;
};

struct DirectionDiagnostics {
    double reduced_grad_norm = 0;
    double u_norm = 0;
    int krylov_iters = 0;
    bool pcg_breakdown = false;
    bool lambda_fallback = false;
};

namespace detail {

// CG on the tangent operator, truncated at `cap` iterations or at relative
// residual `tol` against the rhs norm; nonpositive curvature returns the
// current iterate with the breakdown flag (still a valid direction: the
// normal component of d_y guarantees descent regardless of u).
template <class Op>
Vec cg_capped(const Op& H, const Vec& rhs, double tol, int cap,
              const Vec* jacobi_diag, int& iters, bool& breakdown) {
    Vec x = Vec::Zero(rhs.size());
    Vec r = rhs;
    Vec z = jacobi_diag ? Vec(r.cwiseQuotient(*jacobi_diag)) : r;
    Vec p = z;
    double rz = r.dot(z);
    const double target = tol * rhs.norm();
    int it = 0;
    while (it < cap && r.norm() > target) {
        Vec Hp = H(p);
        const double pHp = p.dot(Hp);
        if (pHp <= 0.0) {
            breakdown = true;
            break;
        }
        const double alpha = rz / pHp;
        x += alpha * p;
        r -= alpha * Hp;
        z = jacobi_diag ? Vec(r.cwiseQuotient(*jacobi_diag)) : r;
        const double rz2 = r.dot(z);
        p = z + (rz2 / rz) * p;
        rz = rz2;
        ++it;
    }
    iters += it;
    return x;
}

} // namespace detail

/// The affine-normal descent direction in ambient (face) coordinates:
/// d = U (Q u - nu) with u solving H_{T,lambda} u = h - (||gbar||/n) a.
/// The identity grad^T d = -||U^T grad|| holds for every u, truncated or not.
///
/// Direct mode assembles the dense tangent operator through the sample-side
/// representation W = A U Q: H = (1/T) W^T diag(psi'') W + lambda I, and the
/// exact log-determinant correction a_j = tr(H^-1 T_j) collapses to
/// a = (1/T) W^T (psi''' o diag(W H^-1 W^T)), one symmetric solve with T
/// right-hand sides. PCG mode keeps everything matrix-free and estimates a
/// with seeded Hutchinson probes (or exactly, column by column, on request).
inline Vec yand_direction(const Oracle& oracle, const TangentBasis& basis,
                          const OracleCache& cache, const TangentSolveConfig& cfg,
                          std::uint64_t it_seed = 0,
                          DirectionDiagnostics* diag_out = nullptr) {
    const index_t n = oracle.assets();
    const index_t m = n - 1;
    DirectionDiagnostics local;
    DirectionDiagnostics& diag = diag_out ? *diag_out : local;

    const Vec& g = oracle.gradient(cache);
    Vec gbar = basis.apply_transpose(g);
    const double gn = gbar.norm();
    diag.reduced_grad_norm = gn;
    if (!(gn > 0))
        throw domain_error("yand_direction: stationary point, no direction");
    if (m == 1)
        return basis.apply(-gbar / gn);

    const ReducedFrame frame = householder_frame(gbar);
    const index_t mm = m - 1;
    const auto& c = oracle.coeffs();
    const bool has_third = (c.c3 != 0.0 || c.c4 != 0.0);

    Vec u;
    if (cfg.mode == TangentSolveConfig::Mode::direct) {
        // sample-side frame W = A U Q, one blocked panel product
        Mat UQ(n, mm);
        for (index_t k = 0; k < mm; ++k) {
            Vec e = Vec::Zero(mm);
            e[k] = 1.0;
            UQ.col(k) = basis.apply(frame.apply_Q(e));
        }
        oracle.counter()->forward += static_cast<std::uint64_t>(mm);
        Mat W = oracle.A() * UQ;
        const Vec psi2 = oracle.hessian_diag_weights(cache);
        const double T = static_cast<double>(oracle.periods());

        oracle.counter()->forward += 1;
        Vec t_nu = oracle.A() * basis.apply(frame.nu);
        Vec h = W.transpose() * psi2.cwiseProduct(t_nu) / T;

        auto solve_with = [&](double lam) -> Vec {
            Eigen::MatrixXd M = (W.transpose() * psi2.asDiagonal() * W) / T;
            M.diagonal().array() += lam;
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
            Vec a = Vec::Zero(mm);
            if (has_third) {
                const Vec psi3 = (-6.0 * c.c3 + 24.0 * c.c4 * cache.z.array()).matrix();
                Eigen::MatrixXd S = lu.solve(Eigen::MatrixXd(W.transpose()));
                Vec q = (W.array() * S.transpose().array()).rowwise().sum().matrix();
                a = W.transpose() * psi3.cwiseProduct(q) / T;
            }
            return lu.solve(Vec(h - (gn / static_cast<double>(n)) * a));
        };
        u = solve_with(cfg.lambda);
        if (!u.allFinite()) {
            // singular unregularized operator: retry with the pcg-default ridge
            diag.lambda_fallback = true;
            u = solve_with(std::max(cfg.lambda, 1e-4));
            if (!u.allFinite())
                throw numeric_error("yand_direction: tangent solve failed");
        }
    } else {
        auto Hop = [&](const Vec& e) -> Vec {
            Vec amb = basis.apply(frame.apply_Q(e));
            Vec hv = oracle.hvp(cache, amb);
            Vec red = frame.apply_Qt(basis.apply_transpose(hv));
            return red + cfg.lambda * e;
        };
        std::optional<Vec> jd;
        if (cfg.jacobi) {
            // probe-estimated diagonal, clamped away from zero
            SplitMix64 rng(0x0d1a6ULL ^ it_seed);
            Vec dg = Vec::Zero(mm);
            for (int p = 0; p < 8; ++p) {
                Vec r(mm);
                for (index_t i = 0; i < mm; ++i) r[i] = rng.next_sign();
                dg += r.cwiseProduct(Hop(r));
            }
            dg /= 8.0;
            const double floor_val = std::max(1e-12, cfg.lambda);
            jd = dg.cwiseMax(floor_val);
        }
        const Vec* jdp = jd ? &*jd : nullptr;

        Vec hvec = frame.apply_Qt(
            basis.apply_transpose(oracle.hvp(cache, basis.apply(frame.nu))));

        Vec a = Vec::Zero(mm);
        if (has_third) {
            if (cfg.exact_trace) {
                for (index_t k = 0; k < mm; ++k) {
                    Vec e = Vec::Zero(mm);
                    e[k] = 1.0;
                    Vec p = detail::cg_capped(Hop, e, cfg.krylov_tol, cfg.krylov_maxit,
                                              jdp, diag.krylov_iters, diag.pcg_breakdown);
                    a += frame.apply_Qt(basis.apply_transpose(oracle.third_action(
                        cache, basis.apply(frame.apply_Q(p)), basis.apply(frame.apply_Q(e)))));
                }
            } else {
                SplitMix64 rng(0x5eedULL ^ it_seed);
                for (int pr = 0; pr < cfg.hutchinson_probes; ++pr) {
                    Vec r(mm);
                    for (index_t i = 0; i < mm; ++i) r[i] = rng.next_sign();
                    Vec s = detail::cg_capped(Hop, r, cfg.krylov_tol, cfg.probe_maxit,
                                              jdp, diag.krylov_iters, diag.pcg_breakdown);
                    a += frame.apply_Qt(basis.apply_transpose(oracle.third_action(
                        cache, basis.apply(frame.apply_Q(s)), basis.apply(frame.apply_Q(r)))));
                }
                a /= static_cast<double>(cfg.hutchinson_probes);
            }
        }
        Vec rhs = hvec - (gn / static_cast<double>(n)) * a;
        u = detail::cg_capped(Hop, rhs, cfg.krylov_tol, cfg.krylov_maxit, jdp,
                              diag.krylov_iters, diag.pcg_breakdown);
    }
    diag.u_norm = u.norm();
    return basis.apply(frame.apply_Q(u) - frame.nu);
}

} // namespace mvsk
