#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "panel.hpp"

namespace mvsk {

/// Orthonormal basis U (n x n-1) of the simplex tangent space {v : 1^T v = 0},
/// taken from the Householder reflector that maps e1 to (1/sqrt(n)) 1. The
/// reflector is applied matrix-free in O(n); a dense U is cached only for
/// n <= dense_cap so large instances avoid the n^2 term.
class TangentBasis {
public:
    static constexpr index_t dense_cap = 512;

    explicit TangentBasis(index_t n, Vec x_ref = Vec()) : n_(n) {
        if (n < 2)
            throw dimension_error("tangent basis needs n >= 2");
        if (x_ref.size() == 0)
            x_ref = Vec::Constant(n, 1.0 / static_cast<double>(n));
        if (x_ref.size() != n || x_ref.minCoeff() <= 0.0 ||
            std::abs(x_ref.sum() - 1.0) > 1e-10)
            throw domain_error("tangent basis: reference point must be interior");
        x_ref_ = std::move(x_ref);
        // v = e1 - w with w = (1/sqrt n) 1; H = I - beta v v^T sends e1 to w
        v_ = Vec::Constant(n, -1.0 / std::sqrt(static_cast<double>(n)));
        v_[0] += 1.0;
        beta_ = 2.0 / v_.squaredNorm();
        if (n <= dense_cap) {
            dense_.resize(n, n - 1);
            for (index_t j = 0; j < n - 1; ++j) {
                Vec e = Vec::Zero(n);
                e[j + 1] = 1.0;
                dense_.col(j) = e - (beta_ * v_[j + 1]) * v_;
            }
        }
    }

    index_t ambient_dim() const { return n_; }
    index_t tangent_dim() const { return n_ - 1; }
    const Vec& x_ref() const { return x_ref_; }
    bool has_dense() const { return dense_.size() > 0; }
    const Mat& dense() const { return dense_; }
    // Householder reflector (I - beta v v^T) whose trailing columns are U
    const Vec& reflector() const { return v_; }
    double reflector_beta() const { return beta_; }

    /// A U for a sample map A without materializing U: one reflected copy of A
    Mat map_through(const Mat& A) const {
        if (A.cols() != n_)
            throw dimension_error("tangent basis: sample map has wrong width");
        Vec Av = A * v_;
        Mat AH = A - (beta_ * Av) * v_.transpose();
        return AH.rightCols(n_ - 1);
    }

    // U y (linear part of the lift)
    Vec apply(const Vec& y) const {
        if (y.size() != n_ - 1)
            throw dimension_error("tangent basis: bad reduced vector length");
        Vec p(n_);
        p[0] = 0.0;
        p.tail(n_ - 1) = y;
        return p - (beta_ * v_.dot(p)) * v_;
    }

    // U^T x
    Vec apply_transpose(const Vec& x) const {
        if (x.size() != n_)
            throw dimension_error("tangent basis: bad ambient vector length");
        Vec h = x - (beta_ * v_.dot(x)) * v_;
        return h.tail(n_ - 1);
    }

    Vec lift(const Vec& y) const { return x_ref_ + apply(y); }
    Vec reduce(const Vec& x) const { return apply_transpose(x - x_ref_); }

private:
    index_t n_;
    Vec x_ref_;
    Vec v_;
    double beta_;
    Mat dense_;
};

/// Largest alpha with x + alpha d in the tau-slice; +inf when no coordinate
/// decreases. Exact formula min over d_i < 0 of (x_i - tau) / (-d_i).
inline double alpha_max(const Vec& x, const Vec& d, double tau) {
    double cap = std::numeric_limits<double>::infinity();
    for (index_t i = 0; i < x.size(); ++i)
        if (d[i] < 0.0)
            cap = std::min(cap, (x[i] - tau) / (-d[i]));
    return std::max(cap, 0.0);
}

/// Euclidean projection onto the simplex slice {u : 1^T u = mass, u >= tau}
/// via the substitution u = tau 1 + w and sort-and-threshold projection of w
/// onto the scaled simplex of mass (mass - n tau).
inline Vec project_slice(const Vec& v, double tau, double mass = 1.0) {
    const index_t n = v.size();
    const double s = mass - static_cast<double>(n) * tau;
    if (!(tau >= 0.0) || !(s > 0.0))
        throw domain_error("project_slice: need 0 <= tau < mass/n");
    std::vector<double> u(static_cast<std::size_t>(n));
    for (index_t i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] = v[i] - tau;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, theta = 0.0;
    for (index_t k = 0; k < n; ++k) {
        css += u[static_cast<std::size_t>(k)];
        const double cand = (css - s) / static_cast<double>(k + 1);
        if (u[static_cast<std::size_t>(k)] > cand) theta = cand;
    }
    Vec out(n);
    for (index_t i = 0; i < n; ++i)
        out[i] = std::max(v[i] - tau - theta, 0.0) + tau;
    return out;
}

/// Interior first-order stationarity residual ||(I - 11^T/n) g||_2, equal to
/// ||U^T g||_2 by orthonormality. Zero iff stationary in the simplex interior.
inline double projected_kkt_residual(const Vec& g) {
    const double mean = g.mean();
    return (g.array() - mean).matrix().norm();
}

/// Boundary-aware residual ||x - P(x - g)||_2 over the tau-slice; vanishes
/// exactly at constrained stationary points, including on faces. This is the
/// solver's termination residual (the interior form above cannot see active
/// bounds).
inline double gradient_mapping_residual(const Vec& x, const Vec& g, double tau) {
    return (x - project_slice(x - g, tau)).norm();
}

/// Active-face bookkeeping: which coordinates stay free, at what pinned value.
struct FaceState {
    std::vector<index_t> free_indices;
    double fixed_value = 0.0;
    index_t parent_assets = 0;

    index_t free_count() const { return static_cast<index_t>(free_indices.size()); }
};

/// A face-restricted problem: free columns of A, matching mu slice, and the
/// pinned mass folded into the sample offset z = A_free x_free + zoff. The
/// face objective keeps the pinned linear term so face values equal full
/// objective values exactly.
struct FaceProblem {
    FaceState state;
    Mat A;
    Vec mu;
    Vec zoff;
    double mu_pinned_term = 0.0; // c1-independent pinned part of mu^T x
    double free_mass = 1.0;
};

inline FaceProblem restrict_to_face(const Mat& A, const Vec& mu, const Vec& x, double tau) {
    const index_t n = A.cols();
    FaceProblem fp;
    fp.state.fixed_value = tau;
    fp.state.parent_assets = n;
    for (index_t i = 0; i < n; ++i)
        if (x[i] > tau + 1e-12) fp.state.free_indices.push_back(i);
    const index_t nf = fp.state.free_count();
    if (nf == 0)
        throw domain_error("restrict_to_face: degenerate face, all coordinates pinned");
    fp.A.resize(A.rows(), nf);
    fp.mu.resize(nf);
    for (index_t j = 0; j < nf; ++j) {
        fp.A.col(j) = A.col(fp.state.free_indices[static_cast<std::size_t>(j)]);
        fp.mu[j] = mu[fp.state.free_indices[static_cast<std::size_t>(j)]];
    }
    fp.zoff = Vec::Zero(A.rows());
    double mu_pin = 0.0;
    std::size_t next_free = 0;
    for (index_t i = 0; i < n; ++i) {
        if (next_free < fp.state.free_indices.size() &&
            fp.state.free_indices[next_free] == i) {
            ++next_free;
        } else {
            fp.zoff += tau * A.col(i);
            mu_pin += tau * mu[i];
        }
    }
    fp.mu_pinned_term = mu_pin;
    fp.free_mass = 1.0 - static_cast<double>(n - nf) * tau;
    return fp;
}

} // namespace mvsk
