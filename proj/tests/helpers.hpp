#pragma once

// Independent reference implementations for the test suite: straight-loop
// objective evaluation, central finite differences, a grid line minimizer,
// and a variational check for the slice projection. Deliberately written
// against the raw definitions (plain loops, no shared code paths with the
// library) so agreement is evidence, not tautology.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <mvsk/mvsk.hpp>

namespace testref {

using mvsk::index_t;
using mvsk::Mat;
using mvsk::Vec;

// f(x) = -c1 mu.x + (1/T) sum_t [c2 z^2 - c3 z^3 + c4 z^4], z = (A x)_t
inline double ref_value(const Mat& A, const Vec& mu, const mvsk::PreferenceCoefficients& c,
                        const Vec& x) {
    const index_t T = A.rows(), n = A.cols();
    double lin = 0;
    for (index_t i = 0; i < n; ++i) lin += mu[i] * x[i];
    double acc = 0;
    for (index_t t = 0; t < T; ++t) {
        double z = 0;
        for (index_t i = 0; i < n; ++i) z += A(t, i) * x[i];
        const double z2 = z * z;
        acc += c.c2 * z2 - c.c3 * z2 * z + c.c4 * z2 * z2;
    }
    return -c.c1 * lin + acc / static_cast<double>(T);
}

inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double h) {
    Vec g(x.size());
    for (index_t i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

// central difference of a vector field along direction u
inline Vec fd_directional(const std::function<Vec(const Vec&)>& field, const Vec& x,
                          const Vec& u, double h) {
    return (field(x + h * u) - field(x - h * u)) / (2.0 * h);
}

inline std::pair<double, double> grid_line_min(const std::function<double(double)>& phi,
                                               double cap, int points = 100000) {
    double best_a = 0, best_v = phi(0.0);
    for (int k = 1; k <= points; ++k) {
        const double a = cap * static_cast<double>(k) / static_cast<double>(points);
        const double v = phi(a);
        if (v < best_v) {
            best_v = v;
            best_a = a;
        }
    }
    return {best_a, best_v};
}

// Variational characterization of proj onto {y >= tau, 1'y = mass}: feasible,
// and there is a multiplier theta with v_i - y_i = theta on inactive
// coordinates and v_i - tau <= theta on active ones.
inline bool is_valid_projection(const Vec& v, const Vec& y, double tau, double mass,
                                double tol = 1e-9) {
    double sum = 0;
    for (index_t i = 0; i < y.size(); ++i) {
        if (y[i] < tau - tol) return false;
        sum += y[i];
    }
    if (std::abs(sum - mass) > tol * std::max(1.0, std::abs(mass))) return false;
    bool have_theta = false;
    double theta = 0;
    for (index_t i = 0; i < y.size(); ++i)
        if (y[i] > tau + tol) {
            if (!have_theta) {
                theta = v[i] - y[i];
                have_theta = true;
            } else if (std::abs(v[i] - y[i] - theta) > tol)
                return false;
        }
    if (have_theta)
        for (index_t i = 0; i < y.size(); ++i)
            if (y[i] <= tau + tol && v[i] - tau > theta + tol) return false;
    return true;
}

// closed-form long-only 2-asset mean-variance optimum (c3 = c4 = 0, c2 > 0)
inline std::pair<double, double> mv_two_asset_optimum(const Mat& A, const Vec& mu,
                                                      double c1, double c2, double tau) {
    const index_t T = A.rows();
    double p = 0, q = 0, r0 = 0;
    for (index_t t = 0; t < T; ++t) {
        const double d = A(t, 0) - A(t, 1);
        p += d * d;
        q += A(t, 1) * d;
        r0 += A(t, 1) * A(t, 1);
    }
    p /= static_cast<double>(T);
    q /= static_cast<double>(T);
    r0 /= static_cast<double>(T);
    const double dmu = mu[0] - mu[1];
    double w = (c1 * dmu - 2.0 * c2 * q) / (2.0 * c2 * p);
    w = std::min(std::max(w, tau), 1.0 - tau);
    const double f = -c1 * (mu[1] + dmu * w) + c2 * (r0 + 2.0 * q * w + p * w * w);
    return {w, f};
}

// deterministic dense test panel with entries independent of the library RNG
inline mvsk::ReturnPanel lcg_panel(index_t n, index_t T, std::uint32_t seed) {
    std::uint64_t s = seed;
    auto next = [&] {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        return static_cast<double>(s >> 11) / 9007199254740992.0; // [0, 1)
    };
    Mat R(T, n);
    for (index_t t = 0; t < T; ++t)
        for (index_t i = 0; i < n; ++i) R(t, i) = -0.1 + 0.5 * next();
    return mvsk::center_panel(std::move(R));
}

inline Vec simplex_point(index_t n, std::uint32_t seed, double tau = 0.0) {
    std::uint64_t s = seed * 2654435761ull + 1;
    auto next = [&] {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        return static_cast<double>(s >> 11) / 9007199254740992.0;
    };
    Vec x(n);
    double sum = 0;
    for (index_t i = 0; i < n; ++i) {
        x[i] = 0.05 + next();
        sum += x[i];
    }
    const double scale = (1.0 - static_cast<double>(n) * tau) / sum;
    for (index_t i = 0; i < n; ++i) x[i] = tau + x[i] * scale;
    return x;
}

} // namespace testref
