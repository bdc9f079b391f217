#pragma once

#include <cmath>
#include <memory>
#include <tuple>
#include <utility>

#include "panel.hpp"

namespace mvsk {

/// Per-iterate cache: z = Ax (+ face offset) and its elementwise powers.
/// Built once per accepted iterate, reused by every derivative query at x.
struct OracleCache {
    Vec x;
    Vec z, z2, z3;
    double f_value = 0;
    mutable bool has_grad = false;
    mutable Vec grad;
};

/// Exact matrix-free MVSK oracle over a centered panel, optionally restricted
/// to a face: with offset zoff the sample projection is z = A x + zoff, which
/// is how pinned-coordinate mass enters a face sub-problem. The referenced A
/// must outlive the oracle (faces keep their restricted panel next to it).
///
/// Cost contract, counted by PassCounter: cache build 1 forward pass,
/// gradient 1 transpose pass (so value+gradient = 2), hvp 2, third_action 3.
class Oracle {
public:
    Oracle(const Mat& A, Vec mu, PreferenceCoefficients coeffs,
           std::shared_ptr<PassCounter> counter = nullptr, Vec zoff = Vec(),
           double value_offset = 0.0)
        : A_(&A), mu_(std::move(mu)), zoff_(std::move(zoff)), c_(coeffs),
          f_offset_(value_offset),
          passes_(counter ? std::move(counter) : std::make_shared<PassCounter>()) {
        if (mu_.size() != A_->cols())
            throw dimension_error("oracle: mu length does not match panel columns");
        if (zoff_.size() != 0 && zoff_.size() != A_->rows())
            throw dimension_error("oracle: offset length does not match panel rows");
    }

    Oracle(const ReturnPanel& panel, PreferenceCoefficients coeffs,
           std::shared_ptr<PassCounter> counter = nullptr)
        : Oracle(panel.A, panel.mu, coeffs, std::move(counter)) {}

    index_t periods() const { return A_->rows(); }
    index_t assets() const { return A_->cols(); }
    const Mat& A() const { return *A_; }
    const Vec& mu() const { return mu_; }
    const PreferenceCoefficients& coeffs() const { return c_; }
    const std::shared_ptr<PassCounter>& counter() const { return passes_; }

    OracleCache make_cache(Vec x) const {
        if (x.size() != A_->cols())
            throw dimension_error("oracle: iterate length does not match panel");
        OracleCache cache;
        cache.z = forward(x);
        cache.z2 = cache.z.cwiseProduct(cache.z);
        cache.z3 = cache.z2.cwiseProduct(cache.z);
        const double T = static_cast<double>(A_->rows());
        cache.f_value = f_offset_ - c_.c1 * mu_.dot(x) +
                        (c_.c2 * cache.z2.sum() - c_.c3 * cache.z3.sum() +
                         c_.c4 * cache.z2.dot(cache.z2)) / T;
        cache.x = std::move(x);
        if (!std::isfinite(cache.f_value))
            throw numeric_error("oracle: non-finite objective value");
        return cache;
    }

    double value(const OracleCache& cache) const { return cache.f_value; }

    std::tuple<double, double, double, double> moments(const OracleCache& cache) const {
        const double T = static_cast<double>(A_->rows());
        return {mu_.dot(cache.x), cache.z2.sum() / T, cache.z3.sum() / T,
                cache.z2.dot(cache.z2) / T};
    }

    const Vec& gradient(const OracleCache& cache) const {
        if (!cache.has_grad) {
            const double T = static_cast<double>(A_->rows());
            Vec w = (2.0 * c_.c2 * cache.z - 3.0 * c_.c3 * cache.z2 +
                     4.0 * c_.c4 * cache.z3) / T;
            cache.grad = -c_.c1 * mu_ + transpose_apply(w);
            if (!cache.grad.allFinite())
                throw numeric_error("oracle: non-finite gradient");
            cache.has_grad = true;
        }
        return cache.grad;
    }

    Vec hvp(const OracleCache& cache, const Vec& v) const {
        const double T = static_cast<double>(A_->rows());
        Vec Av = forward_tangent(v);
        Vec w = (2.0 * c_.c2 - 6.0 * c_.c3 * cache.z.array() +
                 12.0 * c_.c4 * cache.z2.array()).matrix().cwiseProduct(Av) / T;
        Vec out = transpose_apply(w);
        if (!out.allFinite())
            throw numeric_error("oracle: non-finite Hessian product");
        return out;
    }

    Vec third_action(const OracleCache& cache, const Vec& u, const Vec& v) const {
        const double T = static_cast<double>(A_->rows());
        Vec Au = forward_tangent(u);
        Vec Av = forward_tangent(v);
        Vec w = (-6.0 * c_.c3 + 24.0 * c_.c4 * cache.z.array())
                    .matrix().cwiseProduct(Au).cwiseProduct(Av) / T;
        Vec out = transpose_apply(w);
        if (!out.allFinite())
            throw numeric_error("oracle: non-finite third-order action");
        return out;
    }

    // psi''(z_t) = 2 c2 - 6 c3 z_t + 12 c4 z_t^2 per sample
    Vec hessian_diag_weights(const OracleCache& cache) const {
        return (2.0 * c_.c2 - 6.0 * c_.c3 * cache.z.array() +
                12.0 * c_.c4 * cache.z2.array()).matrix();
    }

    // one-pass sample projection w = Ad of a direction (line model input)
    Vec sample_direction(const Vec& d) const { return forward_tangent(d); }

private:
    // sample projection of an iterate: face offset included
    Vec forward(const Vec& x) const {
        ++passes_->forward;
        Vec z = (*A_) * x;
        if (zoff_.size()) z += zoff_;
        return z;
    }
    // sample projection of a direction: no offset (directions are differences)
    Vec forward_tangent(const Vec& v) const {
        ++passes_->forward;
        return (*A_) * v;
    }
    Vec transpose_apply(const Vec& w) const {
        ++passes_->transpose;
        return A_->transpose() * w;
    }

    const Mat* A_;
    Vec mu_;
    Vec zoff_;
    PreferenceCoefficients c_;
    double f_offset_ = 0.0; // face restriction: pinned linear term, keeps
                            // face values equal to full objective values
    std::shared_ptr<PassCounter> passes_;
};

} // namespace mvsk
