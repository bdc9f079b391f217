#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "oracle.hpp"
#include "simplex.hpp"

namespace mvsk {

/// Mixed sample power sums s_rs = (1/T) sum_t z_t^r w_t^s for the nine (r,s)
/// pairs the quartic line model needs.
struct PowerSums {
    double s11 = 0, s21 = 0, s31 = 0;
    double s02 = 0, s12 = 0, s22 = 0;
    double s03 = 0, s13 = 0, s04 = 0;
};

inline PowerSums power_sums(const Vec& z, const Vec& w) {
    if (z.size() != w.size())
        throw dimension_error("power_sums: length mismatch");
    PowerSums s;
    for (index_t t = 0; t < z.size(); ++t) {
        const double zt = z[t], wt = w[t];
        const double w2 = wt * wt, z2 = zt * zt;
        s.s11 += zt * wt;
        s.s21 += z2 * wt;
        s.s31 += z2 * zt * wt;
        s.s02 += w2;
        s.s12 += zt * w2;
        s.s22 += z2 * w2;
        s.s03 += w2 * wt;
        s.s13 += zt * w2 * wt;
        s.s04 += w2 * w2;
    }
    const double T = static_cast<double>(z.size());
    s.s11 /= T; s.s21 /= T; s.s31 /= T;
    s.s02 /= T; s.s12 /= T; s.s22 /= T;
    s.s03 /= T; s.s13 /= T; s.s04 /= T;
    return s;
}

/// Exact quartic restriction alpha -> f(x + alpha d) on [0, alpha_max].
struct LineModel {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0, a4 = 0;
    double alpha_cap = 0;
    PowerSums sums; // retained for diagnostics

    double eval(double alpha) const {
        return a0 + alpha * (a1 + alpha * (a2 + alpha * (a3 + alpha * a4)));
    }
    double deriv(double alpha) const {
        return a1 + alpha * (2.0 * a2 + alpha * (3.0 * a3 + alpha * 4.0 * a4));
    }
};

/// Builds the quartic model from one extra panel pass (w = Ad); a0 is the
/// cached objective value, a1 = grad^T d by construction of the sums.
inline LineModel line_model(const Oracle& oracle, const OracleCache& cache,
                            const Vec& d, double cap) {
    const double dn = d.norm();
    if (!(dn > 0))
        throw domain_error("line_model: zero direction");
    if (std::abs(d.sum()) > 1e-10 * dn)
        throw domain_error("line_model: direction is not tangent to the simplex");
    LineModel m;
    Vec w = oracle.sample_direction(d);
    m.sums = power_sums(cache.z, w);
    const auto& c = oracle.coeffs();
    m.a0 = cache.f_value;
    m.a1 = -c.c1 * oracle.mu().dot(d) + 2.0 * c.c2 * m.sums.s11 -
           3.0 * c.c3 * m.sums.s21 + 4.0 * c.c4 * m.sums.s31;
    m.a2 = c.c2 * m.sums.s02 - 3.0 * c.c3 * m.sums.s12 + 6.0 * c.c4 * m.sums.s22;
    m.a3 = -c.c3 * m.sums.s03 + 4.0 * c.c4 * m.sums.s13;
    m.a4 = c.c4 * m.sums.s04;
    m.alpha_cap = cap;
    return m;
}

namespace detail {

// Real roots of c3 x^3 + c2 x^2 + c1 x + c0 via the depressed-cubic
// trigonometric/Cardano formulas. Assumes c3 != 0.
inline std::vector<double> cubic_real_roots(double c3, double c2, double c1, double c0) {
    const double p = c2 / c3, q = c1 / c3, r = c0 / c3;
    // t = x + p/3 depresses to t^3 + at + b
    const double a = q - p * p / 3.0;
    const double b = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
    const double shift = p / 3.0;
    std::vector<double> roots;
    const double disc = b * b / 4.0 + a * a * a / 27.0;
    if (disc > 0.0) {
        const double sq = std::sqrt(disc);
        const double u = std::cbrt(-b / 2.0 + sq);
        const double v = std::cbrt(-b / 2.0 - sq);
        roots.push_back(u + v - shift);
    } else if (a == 0.0 && b == 0.0) {
        roots.push_back(-shift);
    } else {
        // three real roots
        constexpr double pi = 3.14159265358979323846;
        const double rho = std::sqrt(-a * a * a / 27.0);
        double cosarg = -b / (2.0 * rho);
        cosarg = std::min(1.0, std::max(-1.0, cosarg));
        const double phi = std::acos(cosarg);
        const double mag = 2.0 * std::sqrt(-a / 3.0);
        for (int k = 0; k < 3; ++k)
            roots.push_back(mag * std::cos((phi + 2.0 * pi * k) / 3.0) - shift);
    }
    return roots;
}

// up to two safeguarded Newton polish steps on the derivative polynomial,
// clamped to the feasible interval
inline double polish_root(const LineModel& m, double alpha) {
    for (int it = 0; it < 2; ++it) {
        const double d1 = m.deriv(alpha);
        const double d2 = 2.0 * m.a2 + alpha * (6.0 * m.a3 + alpha * 12.0 * m.a4);
        if (d2 == 0.0) break;
        double next = alpha - d1 / d2;
        if (!(next > 0.0) || !(next < m.alpha_cap)) break;
        alpha = next;
    }
    return alpha;
}

} // namespace detail

/// Global minimum of the quartic model over [0, alpha_cap]: endpoints plus the
/// real critical points inside the interval; degenerate leading coefficients
/// cascade quartic -> cubic -> quadratic; ties break toward the smallest alpha.
inline std::pair<double, double> minimize_line(const LineModel& m) {
    if (!(m.alpha_cap > 0.0))
        return {0.0, m.a0};
    std::vector<double> cands{0.0, m.alpha_cap};
    const double scale = std::max({std::abs(m.a1), std::abs(m.a2), std::abs(m.a3),
                                   std::abs(m.a4), 1e-300});
    if (std::abs(m.a4) > 1e-14 * scale) {
        for (double r : detail::cubic_real_roots(4.0 * m.a4, 3.0 * m.a3, 2.0 * m.a2, m.a1))
            if (r > 0.0 && r < m.alpha_cap)
                cands.push_back(detail::polish_root(m, r));
    } else if (std::abs(m.a3) > 1e-14 * scale) {
        // quadratic derivative
        const double A = 3.0 * m.a3, B = 2.0 * m.a2, C = m.a1;
        const double disc = B * B - 4.0 * A * C;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            for (double r : {(-B + sq) / (2.0 * A), (-B - sq) / (2.0 * A)})
                if (r > 0.0 && r < m.alpha_cap)
                    cands.push_back(detail::polish_root(m, r));
        }
    } else if (std::abs(m.a2) > 1e-14 * scale) {
        const double r = -m.a1 / (2.0 * m.a2);
        if (r > 0.0 && r < m.alpha_cap) cands.push_back(r);
    }
    double best_alpha = 0.0, best_val = m.a0;
    for (double alpha : cands) {
        const double v = m.eval(alpha);
        if (v < best_val || (v == best_val && alpha < best_alpha)) {
            best_val = v;
            best_alpha = alpha;
        }
    }
    return {best_alpha, best_val};
}

/// Armijo backtracking on a 1-d restriction: largest tested alpha of the form
/// alpha_init * shrink^k satisfying phi(alpha) <= phi(0) + sigma alpha g.d;
/// returns {0, stalled=true} after 60 rejections.
struct ArmijoResult {
    double alpha = 0;
    bool stalled = false;
};

inline ArmijoResult armijo_search(const std::function<double(double)>& phi,
                                  double g_dot_d, double alpha_init,
                                  double sigma = 1e-4, double shrink = 0.5) {
    if (!(g_dot_d < 0))
        throw domain_error("armijo_search: direction is not descent");
    if (!(sigma > 0 && sigma < 1) || !(shrink > 0 && shrink < 1))
        throw domain_error("armijo_search: bad constants");
    const double phi0 = phi(0.0);
    double alpha = alpha_init;
    for (int k = 0; k < 60; ++k) {
        if (phi(alpha) <= phi0 + sigma * alpha * g_dot_d)
            return {alpha, false};
        alpha *= shrink;
    }
    return {0.0, true};
}

} // namespace mvsk
