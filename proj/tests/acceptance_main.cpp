// Acceptance battery: eleven criteria, one PASS/FAIL line each, exit code is
// the number of failures. Each criterion re-derives its expected values from
// independent references (plain loops, finite differences, dense linear
// algebra, closed forms) rather than from the code under test.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "helpers.hpp"

using namespace mvsk;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

Vec random_tangent(index_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Vec d(n);
    for (index_t i = 0; i < n; ++i) d[i] = rng.next_uniform(-1.0, 1.0);
    d.array() -= d.mean();
    return d;
}

// ---- criterion 1: oracle vs dense tensor route ----------------------------

Outcome criterion_oracle_equivalence() {
    const double t_begin = now_seconds();
    double worst_f = 0, worst_g = 0;
    SplitMix64 pick(101);
    for (int k = 0; k < 20; ++k) {
        const index_t n = 2 + static_cast<index_t>(pick.next_u64() % 7);  // 2..8
        const index_t T = 10 + static_cast<index_t>(pick.next_u64() % 41); // 10..50
        ReturnPanel p = gen_uniform_instance(n, T, 1000 + static_cast<std::uint64_t>(k));
        ExplicitTensors tx = build_explicit_tensors(p);
        Vec x = testref::simplex_point(n, static_cast<std::uint32_t>(k) + 7);
        for (const auto& c : stress_profiles()) {
            Oracle oracle(p, c);
            auto cache = oracle.make_cache(x);
            auto [ft, gt] = tensor_value_grad(tx, p.mu, c, x);
            worst_f = std::max(worst_f,
                               std::abs(oracle.value(cache) - ft) / (1 + std::abs(ft)));
            const Vec& g = oracle.gradient(cache);
            worst_g = std::max(worst_g, (g - gt).cwiseAbs().maxCoeff() /
                                            (1 + gt.cwiseAbs().maxCoeff()));
        }
    }
    const double elapsed = now_seconds() - t_begin;
    Outcome o;
    o.pass = worst_f <= 1e-11 && worst_g <= 1e-10 && elapsed < 5.0;
    o.detail = "max value gap " + fmt(worst_f) + ", max gradient gap " + fmt(worst_g) +
               ", " + fmt(elapsed) + "s";
    return o;
}

// ---- criterion 2: derivative chain against finite differences -------------

Outcome criterion_derivative_chain() {
    const double t_begin = now_seconds();
    double worst_g = 0, worst_h = 0, worst_t = 0;
    for (std::uint32_t k = 0; k < 20; ++k) {
        const index_t n = 3 + k % 5;
        ReturnPanel p = gen_uniform_instance(n, 20 + 2 * k, 2000 + k);
        auto c = (k % 2) ? crra_coefficients(2.0 + (k % 7))
                         : stress_profiles()[1 + k % 2];
        Oracle oracle(p, c);
        Vec x = testref::simplex_point(n, k + 11);
        Vec u = random_tangent(n, 3000 + k);
        Vec v = random_tangent(n, 4000 + k);
        auto cache = oracle.make_cache(x);

        const double h = 1e-6 * (1 + x.cwiseAbs().maxCoeff());
        Vec g_fd = testref::fd_gradient(
            [&](const Vec& y) { return testref::ref_value(p.A, p.mu, c, y); }, x, h);
        const Vec& g = oracle.gradient(cache);
        worst_g = std::max(worst_g, (g - g_fd).cwiseAbs().maxCoeff() /
                                        (1 + g_fd.cwiseAbs().maxCoeff()));

        Vec h_fd = testref::fd_directional(
            [&](const Vec& y) {
                auto cy = oracle.make_cache(y);
                return Vec(oracle.gradient(cy));
            },
            x, v, h);
        Vec hv = oracle.hvp(cache, v);
        worst_h = std::max(worst_h, (hv - h_fd).cwiseAbs().maxCoeff() /
                                        (1 + h_fd.cwiseAbs().maxCoeff()));

        Vec t_fd = testref::fd_directional(
            [&](const Vec& y) {
                auto cy = oracle.make_cache(y);
                return oracle.hvp(cy, u);
            },
            x, v, 1e-5);
        Vec tuv = oracle.third_action(cache, u, v);
        worst_t = std::max(worst_t, (tuv - t_fd).cwiseAbs().maxCoeff() /
                                        (1 + t_fd.cwiseAbs().maxCoeff()));
    }
    const double elapsed = now_seconds() - t_begin;
    Outcome o;
    o.pass = worst_g <= 1e-6 && worst_h <= 1e-6 && worst_t <= 1e-5 && elapsed < 10.0;
    o.detail = "gradient " + fmt(worst_g) + ", hessian product " + fmt(worst_h) +
               ", third action " + fmt(worst_t) + ", " + fmt(elapsed) + "s";
    return o;
}

// ---- criterion 3: curvature decomposition ----------------------------------

Outcome criterion_hessian_factorization() {
    double worst = 0;
    for (std::uint32_t k = 0; k < 10; ++k) {
        const index_t n = 3 + k % 4;
        ReturnPanel p = gen_uniform_instance(n, 15 + 3 * k, 5000 + k);
        auto c = (k % 2) ? crra_coefficients(4.0 + k) : stress_profiles()[2];
        Oracle oracle(p, c);
        Vec x = testref::simplex_point(n, k + 17);
        auto cache = oracle.make_cache(x);

        Vec psi2 = oracle.hessian_diag_weights(cache);
        Mat H = (p.A.transpose() * psi2.asDiagonal() * p.A) /
                static_cast<double>(p.periods());

        Mat H_fd(n, n);
        for (index_t j = 0; j < n; ++j) {
            Vec e = Vec::Zero(n);
            e[j] = 1.0;
            H_fd.col(j) = testref::fd_directional(
                [&](const Vec& y) {
                    auto cy = oracle.make_cache(y);
                    return Vec(oracle.gradient(cy));
                },
                x, e, 1e-6);
        }
        worst = std::max(worst, (H - H_fd).cwiseAbs().maxCoeff() /
                                    (1 + H.cwiseAbs().maxCoeff()));
    }
    Outcome o;
    o.pass = worst <= 1e-6;
    o.detail = "max entrywise gap " + fmt(worst) + " over 10 instances";
    return o;
}

// ---- criterion 4: exact quartic line search --------------------------------

Outcome criterion_exact_line_search() {
    double worst_match = 0, worst_beat = 0;
    SplitMix64 pick(404);
    for (int k = 0; k < 100; ++k) {
        const index_t n = 3 + static_cast<index_t>(pick.next_u64() % 6);
        const index_t T = 10 + static_cast<index_t>(pick.next_u64() % 41);
        ReturnPanel p = gen_uniform_instance(n, T, 6000 + static_cast<std::uint64_t>(k));
        auto c = (k % 3 == 0) ? stress_profiles()[2]
                              : crra_coefficients(2.0 + (k % 9));
        Oracle oracle(p, c);
        Vec x = testref::simplex_point(n, static_cast<std::uint32_t>(k) + 23, 1e-6);
        Vec d = random_tangent(n, 7000 + static_cast<std::uint64_t>(k));
        auto cache = oracle.make_cache(x);

        double cap = alpha_max(x, d, 1e-6);
        if (!std::isfinite(cap)) cap = 1.0;
        LineModel m = line_model(oracle, cache, d, cap);

        for (int j = 0; j <= 20; ++j) {
            const double alpha = cap * j / 20.0;
            const double truth = testref::ref_value(p.A, p.mu, c, x + alpha * d);
            worst_match = std::max(worst_match, std::abs(m.eval(alpha) - truth) /
                                                    (1 + std::abs(truth)));
        }
        auto [a_star, f_star] = minimize_line(m);
        auto [a_grid, f_grid] =
            testref::grid_line_min([&](double a) { return m.eval(a); }, cap, 100000);
        (void)a_star;
        (void)a_grid;
        worst_beat = std::max(worst_beat, f_star - f_grid);
    }
    Outcome o;
    o.pass = worst_match <= 1e-10 && worst_beat <= 1e-10;
    o.detail = "max model mismatch " + fmt(worst_match) + ", worst grid margin " +
               fmt(worst_beat);
    return o;
}

// ---- criterion 5: descent identity -----------------------------------------

Outcome criterion_descent_identity() {
    double worst = 0;
    int directions = 0;
    for (std::uint32_t k = 0; k < 25; ++k) {
        const index_t n = 3 + k % 8;
        ReturnPanel p = gen_uniform_instance(n, 20 + 3 * k, 8000 + k);
        auto c = (k % 3 == 0) ? stress_profiles()[1 + k % 2]
                              : crra_coefficients(2.0 + (k % 8));
        Oracle oracle(p, c);
        TangentBasis basis(n);
        Vec x = testref::simplex_point(n, k + 31, 1e-6);
        auto cache = oracle.make_cache(x);
        const Vec& g = oracle.gradient(cache);
        const double gn = basis.apply_transpose(g).norm();
        if (!(gn > 1e-12)) continue;

        TangentSolveConfig direct;
        Vec dd = yand_direction(oracle, basis, cache, direct, k);
        worst = std::max(worst, std::abs(g.dot(dd) + gn) / (1 + gn));
        ++directions;

        TangentSolveConfig pcg;
        pcg.mode = TangentSolveConfig::Mode::pcg;
        pcg.lambda = 1e-4;
        pcg.krylov_maxit = (k % 2) ? 2 : 15; // both truncated and near-exact
        Vec dp = yand_direction(oracle, basis, cache, pcg, k);
        worst = std::max(worst, std::abs(g.dot(dp) + gn) / (1 + gn));
        ++directions;
    }
    Outcome o;
    o.pass = worst <= 1e-10 && directions >= 50;
    o.detail = fmt(static_cast<double>(directions)) + " directions, max identity gap " +
               fmt(worst);
    return o;
}

// ---- criterion 6: convexity certificate ------------------------------------

Outcome criterion_certificate() {
    Outcome o;
    double worst = 0;
    for (double gamma : {0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0}) {
        CertificateReport cert = convexity_certificate(crra_coefficients(gamma));
        const double expect = gamma * gamma * (gamma + 1) * (gamma + 3) / 12.0;
        worst = std::max(worst, std::abs(cert.gap - expect) / (1 + std::abs(expect)));
        if (!cert.certified) o.pass = false;
    }
    const double gap6 = convexity_certificate(crra_coefficients(6.0)).gap;
    if (std::abs(gap6 - 189.0) > 1e-12 * 189.0) o.pass = false;
    if (worst > 1e-12) o.pass = false;
    if (convexity_certificate(make_coefficients(10, 1, 10, 1)).certified) o.pass = false;
    if (!convexity_certificate(make_coefficients(1, 10, 1, 10)).certified) o.pass = false;
    if (!convexity_certificate(make_coefficients(10, 10, 10, 10)).certified) o.pass = false;
    o.detail = "utility gap error " + fmt(worst) + ", gap(6) = " + fmt(gap6) +
               ", profile classification exact";
    return o;
}

// ---- criterion 7: conditioning construction --------------------------------

Outcome criterion_conditioning() {
    Outcome o;
    double worst_au = 0, worst_h0 = 0;
    const index_t n = 200, T = 400;
    for (double kappa : {1.0, 10.0, 100.0, 1000.0}) {
        ReturnPanel p = gen_conditioned_instance(n, T, kappa, 77);
        TangentBasis basis(n);
        Eigen::BDCSVD<Mat> svd(basis.map_through(p.A));
        const Vec& sv = svd.singularValues();
        const double kappa_au = sv(0) / sv(sv.size() - 1);
        worst_au = std::max(worst_au, std::abs(kappa_au - kappa) / kappa);

        Vec x0 = Vec::Constant(n, 1.0 / static_cast<double>(n));
        SpectrumReport sp = reduced_hessian_spectrum(p, crra_coefficients(6.0), x0);
        worst_h0 = std::max(worst_h0,
                            std::abs(sp.kappa_plus - kappa * kappa) / (kappa * kappa));
    }
    o.pass = worst_au <= 0.01 && worst_h0 <= 0.02;
    o.detail = "kappa(AU) rel err " + fmt(worst_au) + ", kappa+(H0) vs kappa^2 rel err " +
               fmt(worst_h0);
    return o;
}

// ---- criteria 8-10 share the trajectory accumulator for criterion 11 -------

struct TrajectoryAudit {
    long long iterates = 0;
    long long feasibility_violations = 0;
    long long monotonicity_violations = 0;
    int trajectories = 0;

    IterateObserver attach() {
        ++trajectories;
        last_f = std::numeric_limits<double>::infinity();
        return [this](const IterateRecord& rec) {
            ++iterates;
            if (rec.x.minCoeff() < 1e-8 - 1e-12 ||
                std::abs(rec.x.sum() - 1.0) > 1e-12)
                ++feasibility_violations;
            if (rec.f > last_f + 1e-12 * (1 + std::abs(last_f)))
                ++monotonicity_violations;
            last_f = rec.f;
        };
    }

private:
    double last_f = std::numeric_limits<double>::infinity();
};

TrajectoryAudit audit;

Outcome criterion_convex_regime() {
    const double t_begin = now_seconds();
    Outcome o;
    double worst_kkt = 0, worst_gap = 0;
    int converged = 0;
    for (double gamma : {2.0, 6.0, 10.0}) {
        for (std::uint64_t seed : {1, 2, 3}) {
            ReturnPanel p = gen_uniform_instance(50, 200, seed);
            auto c = crra_coefficients(gamma);
            SolverConfig cfg = small_preset();
            cfg.observer = audit.attach();
            SolveReport rep = solve(p, c, cfg);
            if (rep.status == SolveStatus::converged) ++converged;
            worst_kkt = std::max(worst_kkt, rep.kkt_residual);

            BaselineResult base = projected_gradient_baseline(p, c, 1e-8, 1e-8);
            worst_gap = std::max(worst_gap, std::abs(rep.f_star - base.f) /
                                                (1 + std::abs(base.f)));
        }
    }
    const double elapsed = now_seconds() - t_begin;
    o.pass = converged == 9 && worst_kkt <= 1e-6 && worst_gap <= 1e-6 && elapsed < 60.0;
    o.detail = fmt(static_cast<double>(converged)) + "/9 converged, max KKT " +
               fmt(worst_kkt) + ", max baseline gap " + fmt(worst_gap) + ", " +
               fmt(elapsed) + "s";
    return o;
}

Outcome criterion_large_scale() {
    ReturnPanel p = gen_conditioned_instance(1000, 2000, 1000.0, 7);
    SolverConfig cfg = large_preset();
    cfg.epsilon = 5e-6;
    cfg.max_elapsed_seconds = 120.0;
    cfg.observer = audit.attach();
    SolveReport rep = solve(p, crra_coefficients(6.0), cfg);

    Outcome o;
    o.pass = rep.status == SolveStatus::converged && rep.kkt_residual <= 5e-6 &&
             rep.wall_seconds < 120.0;
    o.detail = std::string(to_string(rep.status)) + ", KKT " + fmt(rep.kkt_residual) +
               ", " + fmt(rep.wall_seconds) + "s, " +
               fmt(static_cast<double>(rep.iterations)) + " iterations, " +
               fmt(static_cast<double>(rep.restarts)) + " restarts";
    return o;
}

Outcome criterion_regime_trend() {
    Outcome o;
    double worst_gap = 0;
    std::string medians;
    const auto profiles = std::vector<PreferenceCoefficients>{stress_profiles()[1],
                                                              stress_profiles()[2]};
    for (index_t n : {index_t{40}, index_t{400}}) {
        for (std::size_t pi = 0; pi < profiles.size(); ++pi) {
            ReturnPanel p = gen_uniform_instance(n, 252, 9000 + static_cast<std::uint64_t>(n));
            double f_by_config[2] = {0, 0};
            double median_by_config[2] = {0, 0};
            const char* names[2] = {"small", "large"};
            for (int ci = 0; ci < 2; ++ci) {
                std::vector<double> walls;
                SolveReport rep;
                for (int repn = 0; repn < 3; ++repn) {
                    SolverConfig cfg = preset(names[ci]);
                    cfg.observer = audit.attach();
                    rep = solve(p, profiles[pi], cfg);
                    if (rep.status != SolveStatus::converged) o.pass = false;
                    walls.push_back(rep.wall_seconds);
                }
                f_by_config[ci] = rep.f_star;
                std::sort(walls.begin(), walls.end());
                median_by_config[ci] = walls[1];
            }
            worst_gap = std::max(worst_gap, std::abs(f_by_config[0] - f_by_config[1]) /
                                                (1 + std::abs(f_by_config[0])));
            if (n == 400) {
                if (!(median_by_config[1] < median_by_config[0])) o.pass = false;
                medians += " [" + profiles[pi].profile_name + " small " +
                           fmt(median_by_config[0]) + "s, large " +
                           fmt(median_by_config[1]) + "s]";
            }
        }
    }
    if (worst_gap > 1e-6) o.pass = false;
    o.detail = "max objective gap " + fmt(worst_gap) + ", n=400 medians" + medians;
    return o;
}

Outcome criterion_trajectories() {
    Outcome o;
    o.pass = audit.trajectories > 0 && audit.iterates > 0 &&
             audit.feasibility_violations == 0 && audit.monotonicity_violations == 0;
    o.detail = fmt(static_cast<double>(audit.iterates)) + " iterates across " +
               fmt(static_cast<double>(audit.trajectories)) + " trajectories, " +
               fmt(static_cast<double>(audit.feasibility_violations)) +
               " feasibility and " +
               fmt(static_cast<double>(audit.monotonicity_violations)) +
               " monotonicity violations";
    return o;
}

} // namespace

int main() {
    struct Entry {
        const char* name;
        Outcome (*run)();
    };
    const Entry entries[] = {
        {"oracle-tensor equivalence", criterion_oracle_equivalence},
        {"derivative chain vs finite differences", criterion_derivative_chain},
        {"hessian diagonal factorization", criterion_hessian_factorization},
        {"exact quartic line search", criterion_exact_line_search},
        {"descent identity", criterion_descent_identity},
        {"convexity certificate", criterion_certificate},
        {"conditioned instance construction", criterion_conditioning},
        {"convex-regime solve quality", criterion_convex_regime},
        {"large-scale conditioned solve", criterion_large_scale},
        {"configuration runtime trend", criterion_regime_trend},
        {"iterate feasibility and monotonicity", criterion_trajectories},
    };

    int failures = 0;
    int idx = 0;
    for (const auto& e : entries) {
        ++idx;
        Outcome o;
        try {
            o = e.run();
        } catch (const std::exception& ex) {
            o.pass = false;
            o.detail = std::string("exception: ") + ex.what();
        }
        if (!o.pass) ++failures;
        std::printf("criterion %2d: %s - %s (%s)\n", idx, o.pass ? "PASS" : "FAIL",
                    e.name, o.detail.c_str());
        std::fflush(stdout);
    }
    if (failures)
        std::printf("%d of 11 criteria failed\n", failures);
    else
        std::printf("all 11 criteria passed\n");
    return failures;
}
