#pragma once

#include <vector>

#include "json.hpp"

#include "solver.hpp"
#include "verification.hpp"

namespace mvsk {

inline nlohmann::json report_to_json(const SolveReport& r) {
    nlohmann::json j;
    j["x_star"] = std::vector<double>(r.x_star.data(), r.x_star.data() + r.x_star.size());
    j["f_star"] = r.f_star;
    j["kkt_residual"] = r.kkt_residual;
    j["interior_residual"] = r.interior_residual;
    j["iterations"] = r.iterations;
    j["face_events"] = r.face_events;
    j["restarts"] = r.restarts;
    j["identification_steps"] = r.identification_steps;
    j["krylov_iters_total"] = r.krylov_iters_total;
    j["oracle_passes"] = r.oracle_passes;
    j["wall_seconds"] = r.wall_seconds;
    j["status"] = to_string(r.status);
    j["config"] = r.config_label;
    return j;
}

inline nlohmann::json report_to_json(const CertificateReport& r) {
    return {{"certified", r.certified}, {"gap", r.gap}, {"margin", r.margin}};
}

inline nlohmann::json report_to_json(const RegularityReport& r) {
    nlohmann::json j;
    j["tau"] = r.tau;
    j["a_norm"] = r.a_norm;
    j["b_tau"] = r.b_tau;
    j["l_tau"] = r.l_tau;
    j["m_tau"] = r.m_tau;
    j["psi2_min"] = r.psi2_min;
    j["psi2_max"] = r.psi2_max;
    j["sigma_min_au"] = r.sigma_min_au;
    j["sigma_max_au"] = r.sigma_max_au;
    j["kappa_au"] = r.kappa_au;
    j["mu_tau"] = r.mu_tau;
    return j;
}

inline nlohmann::json report_to_json(const SpectrumReport& r) {
    nlohmann::json j;
    j["lambda_min"] = r.lambda_min;
    j["lambda_max"] = r.lambda_max;
    j["kappa_plus"] = r.kappa_plus;
    j["nonpositive"] = r.nonpositive;
    j["eigenvalues"] = std::vector<double>(r.eigenvalues.data(),
                                           r.eigenvalues.data() + r.eigenvalues.size());
    return j;
}

} // namespace mvsk
