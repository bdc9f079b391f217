#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace mvsk {

// Row-major storage so both z = Ax and A^T w stream over time-period rows;
// the oracle touches every row per query.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

/// Problem data: raw returns R (T periods x n assets), sample mean mu and the
/// centered matrix A = R - 1 mu^T. Immutable after construction and safe to
/// share across concurrent solver runs.
struct ReturnPanel {
    Mat R;
    Vec mu;
    Mat A;
    std::vector<std::string> asset_ids; // optional, may be empty

    index_t periods() const { return R.rows(); }
    index_t assets() const { return R.cols(); }
};

inline ReturnPanel center_panel(Mat R) {
    if (R.rows() < 2)
        throw dimension_error("center_panel: need at least two time periods");
    if (R.cols() < 1)
        throw dimension_error("center_panel: need at least one asset");
    if (!R.allFinite())
        throw data_error("center_panel: non-finite return entry");
    ReturnPanel p;
    p.mu = R.colwise().mean();
    p.A = R.rowwise() - p.mu.transpose();
    p.R = std::move(R);
    return p;
}

/// Scalarization weights on the first four moments, all nonnegative.
struct PreferenceCoefficients {
    double c1 = 0, c2 = 0, c3 = 0, c4 = 0;

    enum class Origin { crra, profile, custom };
    Origin origin = Origin::custom;
    double gamma = 0;         // set when origin == crra
    std::string profile_name; // set when origin == profile

    std::string origin_label() const {
        switch (origin) {
        case Origin::crra: return "crra(" + std::to_string(gamma) + ")";
        case Origin::profile: return profile_name;
        default: return "custom";
        }
    }
};

inline PreferenceCoefficients make_coefficients(double c1, double c2, double c3, double c4) {
    if (c1 < 0 || c2 < 0 || c3 < 0 || c4 < 0)
        throw domain_error("coefficients must be nonnegative");
    if (c1 == 0 && c2 == 0 && c3 == 0 && c4 == 0)
        throw domain_error("coefficients must not all be zero");
    PreferenceCoefficients c;
    c.c1 = c1; c.c2 = c2; c.c3 = c3; c.c4 = c4;
    return c;
}

// Standard utility-based CRRA calibration:
// (1, g/2, g(g+1)/6, g(g+1)(g+2)/24).
inline PreferenceCoefficients crra_coefficients(double gamma) {
    if (!(gamma > 0))
        throw domain_error("crra_coefficients: gamma must be positive");
    PreferenceCoefficients c;
    c.c1 = 1.0;
    c.c2 = gamma / 2.0;
    c.c3 = gamma * (gamma + 1.0) / 6.0;
    c.c4 = gamma * (gamma + 1.0) * (gamma + 2.0) / 24.0;
    c.origin = PreferenceCoefficients::Origin::crra;
    c.gamma = gamma;
    return c;
}

} // namespace mvsk
