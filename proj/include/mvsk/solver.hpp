#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "affine_normal.hpp"
#include "linesearch.hpp"
#include "oracle.hpp"
#include "simplex.hpp"

namespace mvsk {

enum class SolveStatus { converged, stalled, max_iter, max_elapsed, degenerate_face };

inline const char* to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::stalled: return "stalled";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::max_elapsed: return "max_elapsed";
    default: return "degenerate_face";
    }
}

/// One accepted iterate, published to the optional observer: full-dimensional
/// point and its exact objective value. Feasibility and monotonicity of the
/// published sequence are solver invariants.
struct IterateRecord {
    int iteration = 0;
    double f = 0;
    Vec x;
};

using IterateObserver = std::function<void(const IterateRecord&)>;

struct SolverConfig {
    double epsilon = 1e-6;
    double tau = 1e-8;
    int max_iter = 300;
    std::optional<double> max_elapsed_seconds;
    // nominal projected trial step, in step-fraction units of the direction
    double projected_trial_step = 0.05;
    std::vector<double> restart_trial_steps = {0.045, 0.02};
    int restart_max_iter = 120;
    TangentSolveConfig tangent;
    enum class LineSearch { exact_quartic, armijo };
    LineSearch line_search = LineSearch::exact_quartic;
    // large-preset flow: walk the restart schedule on stall/budget exhaustion
    bool stall_restarts = false;
    // large-preset flow: first-order identification preamble before the driver
    bool identification_pass = false;
    std::string label = "custom";
    IterateObserver observer;
};

inline SolverConfig small_preset() {
    SolverConfig c;
    c.label = "small";
    c.max_iter = 300;
    c.tangent.mode = TangentSolveConfig::Mode::direct;
    c.tangent.lambda = 0.0;
    return c;
}

inline SolverConfig large_preset() {
    SolverConfig c;
    c.label = "large";
    c.max_iter = 40;
    c.max_elapsed_seconds = 60.0;
    c.tangent.mode = TangentSolveConfig::Mode::pcg;
    c.tangent.lambda = 1e-4;
    c.tangent.krylov_tol = 1e-3;
    c.tangent.krylov_maxit = 15;
    c.stall_restarts = true;
    c.identification_pass = true;
    return c;
}

inline SolverConfig preset(const std::string& mode) {
    if (mode == "small") return small_preset();
    if (mode == "large") return large_preset();
    throw domain_error("preset: unknown mode " + mode);
}

struct SolveReport {
    Vec x_star;
    double f_star = 0;
    double kkt_residual = 0;      // boundary-aware gradient-mapping residual
    double interior_residual = 0; // ||(I - 11^T/n) grad||, interior formula
    int iterations = 0;
    int face_events = 0;
    int restarts = 0;
    int identification_steps = 0;
    long long krylov_iters_total = 0;
    std::uint64_t oracle_passes = 0;
    double wall_seconds = 0;
    SolveStatus status = SolveStatus::max_iter;
    std::string config_label;
};

namespace detail {

/// Monotone spectral projected-gradient identification pass: Barzilai-Borwein
/// initial lengths, Armijo acceptance, doubling backtracking. Stops when the
/// active set has been stable for `patience` accepted steps (counted only once
/// it is nonempty), when the residual drops under eps_stop, or when no step is
/// possible. Identification, not full convergence, is the mandate.
inline Vec spg_identify(const Oracle& oracle, Vec x, double tau, int max_steps,
                        int patience, double eps_stop, int& steps_out,
                        const IterateObserver& observer) {
    OracleCache cache = oracle.make_cache(std::move(x));
    double f = oracle.value(cache);
    Vec g = oracle.gradient(cache);
    Vec xcur = cache.x;

    double L = 10.0;
    bool have_bb = false;
    Vec bb_s, bb_y;
    auto active = [&](const Vec& v) {
        std::vector<char> a(static_cast<std::size_t>(v.size()));
        for (index_t i = 0; i < v.size(); ++i)
            a[static_cast<std::size_t>(i)] = v[i] <= tau + 1e-12 ? 1 : 0;
        return a;
    };
    std::vector<char> act = active(xcur);
    int last_change = 0, steps = 0;

    for (int k = 0; k < max_steps; ++k) {
        double L0 = L;
        if (have_bb) {
            const double sy = bb_s.dot(bb_y), ss = bb_s.squaredNorm();
            L0 = (ss > 0 && sy > 0) ? sy / ss : L;
            L0 = std::min(std::max(L0, 1e-2), 1e12);
        }
        double Lk = L0;
        bool stepped = false;
        for (int bt = 0; bt < 40; ++bt) {
            Vec xp = project_slice(xcur - g / Lk, tau, 1.0);
            Vec dp = xp - xcur;
            const double gdp = g.dot(dp);
            if (gdp < 0) {
                OracleCache cp = oracle.make_cache(std::move(xp));
                const double fp = oracle.value(cp);
                if (fp <= f + 1e-4 * gdp) {
                    Vec gp = oracle.gradient(cp);
                    bb_s = std::move(dp);
                    bb_y = gp - g;
                    have_bb = true;
                    xcur = cp.x;
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
        ++steps;
        if (observer) observer({-steps, f, xcur});
        std::vector<char> actp = active(xcur);
        if (actp != act) {
            act = std::move(actp);
            last_change = steps;
        } else if (std::find(act.begin(), act.end(), 1) != act.end() &&
                   steps - last_change >= patience) {
            break;
        }
        if (eps_stop > 0 && steps % 10 == 0 &&
            gradient_mapping_residual(xcur, g, tau) <= eps_stop)
            break;
    }
    steps_out = steps;
    return xcur;
}

} // namespace detail

/// Outer driver: oracle block, affine-normal direction, exact quartic step,
/// boundary block with projected correction and monotone face continuation,
/// release tests against the full gradient, stall detection, and (large flow)
/// identification preamble plus restart schedule. Every accepted iterate stays
/// in the tau-slice and the published objective sequence is non-increasing
/// within 1e-12 relative slack.
inline SolveReport solve(const ReturnPanel& panel, const PreferenceCoefficients& coeffs,
                         const SolverConfig& config, Vec x0 = Vec()) {
    const index_t n0 = panel.assets();
    const index_t T = panel.periods();
    const double tau = config.tau;
    const double eps = config.epsilon;
    if (!(eps > 0))
        throw domain_error("solve: epsilon must be positive");
    if (!(tau >= 0) || (n0 > 1 && !(tau < 1.0 / static_cast<double>(n0))))
        throw domain_error("solve: tau out of range");

    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    };

    auto counter = std::make_shared<PassCounter>();
    Oracle oracle(panel, coeffs, counter);

    SolveReport rep;
    rep.config_label = config.label;

    if (x0.size() == 0)
        x0 = Vec::Constant(n0, 1.0 / static_cast<double>(n0));
    if (x0.size() != n0 || x0.minCoeff() < tau - 1e-12 ||
        std::abs(x0.sum() - 1.0) > 1e-10)
        throw domain_error("solve: x0 is not in the tau-slice");

    auto finish = [&](Vec x, SolveStatus status, double kkt) {
        OracleCache cache = oracle.make_cache(std::move(x));
        rep.f_star = oracle.value(cache);
        rep.interior_residual = projected_kkt_residual(oracle.gradient(cache));
        rep.kkt_residual = kkt;
        rep.x_star = cache.x;
        rep.status = status;
        rep.oracle_passes = counter->total();
        rep.wall_seconds = elapsed();
        return rep;
    };

    if (n0 == 1) {
        // forced portfolio, zero-dimensional tangent space
        rep.status = SolveStatus::converged;
        return finish(Vec::Constant(1, 1.0), SolveStatus::converged, 0.0);
    }

    if (config.identification_pass) {
        x0 = detail::spg_identify(oracle, std::move(x0), tau, 600, 30,
                                  std::max(1e3 * eps, 1e-4),
                                  rep.identification_steps, config.observer);
    }

    struct Best {
        double f;
        Vec x;
    };
    OracleCache c0 = oracle.make_cache(std::move(x0));
    Best best{oracle.value(c0), c0.x};
    if (config.observer) config.observer({0, best.f, best.x});

    std::vector<std::pair<double, int>> attempts{{config.projected_trial_step,
                                                  config.max_iter}};
    if (config.stall_restarts)
        for (double s : config.restart_trial_steps)
            attempts.emplace_back(s, config.restart_max_iter);

    // merge(face iterate, old free mask, new pinned mask): pinned coordinates
    // sit exactly at tau and the free block is renormalized to the remaining
    // mass, so total mass is conserved through every pin and release
    auto merge = [&](const Vec& xf, const std::vector<char>& free_mask,
                     const std::vector<char>& pinned_mask) {
        Vec xn = Vec::Constant(n0, tau);
        index_t j = 0;
        for (index_t i = 0; i < n0; ++i)
            if (free_mask[static_cast<std::size_t>(i)]) xn[i] = xf[j++];
        index_t npin = 0;
        for (index_t i = 0; i < n0; ++i)
            if (pinned_mask[static_cast<std::size_t>(i)]) {
                xn[i] = tau;
                ++npin;
            }
        double s = 0.0;
        for (index_t i = 0; i < n0; ++i)
            if (!pinned_mask[static_cast<std::size_t>(i)]) s += xn[i];
        if (s > 0) {
            const double scale = (1.0 - static_cast<double>(npin) * tau) / s;
            for (index_t i = 0; i < n0; ++i)
                if (!pinned_mask[static_cast<std::size_t>(i)]) xn[i] *= scale;
        }
        return xn;
    };

    auto full_residual = [&](const Vec& x, Vec& g_out) {
        OracleCache cache = oracle.make_cache(x);
        g_out = oracle.gradient(cache);
        return gradient_mapping_residual(x, g_out, tau);
    };
    auto full_value = [&](const Vec& x) { return oracle.value(oracle.make_cache(x)); };

    int it_total = 0;
    bool timed_out = false;

    for (std::size_t ai = 0; ai < attempts.size(); ++ai) {
        const double tr = attempts[ai].first;
        const int budget = attempts[ai].second;

        Vec x = best.x;
        std::vector<char> pinned(static_cast<std::size_t>(n0), 0);
        index_t npinned = 0;
        for (index_t i = 0; i < n0; ++i)
            if (x[i] <= tau + 1e-12) {
                pinned[static_cast<std::size_t>(i)] = 1;
                ++npinned;
            }
        if (npinned >= n0) {
            std::fill(pinned.begin(), pinned.end(), 0);
            npinned = 0;
        }

        int stall_small = 0, stall_zero = 0;
        double eps_face = eps;
        double face_ref = std::numeric_limits<double>::infinity();
        // trial length for the projected correction; halved on micro-progress
        // moves so a boundary-hugging coordinate cannot pin the step scale to
        // the clip-and-redistribute regime forever
        double t_cur = tr;
        bool rebuild = true, stalled = false;
        int it = 0, since_check = 0;

        // face-restricted problem state, rebuilt on every pin/release
        std::vector<char> free_mask(static_cast<std::size_t>(n0), 1);
        index_t nf = n0;
        Mat Af;
        Vec muf, zoff;
        double mass = 1.0, mu_pin = 0.0;
        std::optional<Oracle> face;
        std::optional<TangentBasis> U;

        while (it < budget) {
            if (config.max_elapsed_seconds &&
                elapsed() > *config.max_elapsed_seconds) {
                timed_out = true;
                break;
            }
            ++it;
            ++it_total;
            ++since_check;
            if (rebuild) {
                nf = n0 - npinned;
                free_mask.assign(static_cast<std::size_t>(n0), 0);
                Af.resize(T, nf);
                muf.resize(nf);
                zoff = Vec::Zero(T);
                mu_pin = 0.0;
                index_t j = 0;
                for (index_t i = 0; i < n0; ++i) {
                    if (!pinned[static_cast<std::size_t>(i)]) {
                        free_mask[static_cast<std::size_t>(i)] = 1;
                        Af.col(j) = panel.A.col(i);
                        muf[j] = panel.mu[i];
                        ++j;
                    } else {
                        zoff += tau * panel.A.col(i);
                        mu_pin += tau * panel.mu[i];
                    }
                }
                mass = 1.0 - static_cast<double>(npinned) * tau;
                face.emplace(Af, muf, coeffs, counter, zoff, -coeffs.c1 * mu_pin);
                if (nf > 1)
                    U.emplace(nf);
                else
                    U.reset();
                t_cur = tr;
                rebuild = false;
            }

            Vec xf(nf);
            {
                index_t j = 0;
                for (index_t i = 0; i < n0; ++i)
                    if (free_mask[static_cast<std::size_t>(i)]) xf[j++] = x[i];
            }
            OracleCache fc = face->make_cache(xf);
            const Vec& gf = face->gradient(fc);
            const double gf_mean = gf.mean();
            const double face_res =
                nf > 1 ? (gf.array() - gf_mean).matrix().norm() : 0.0;

            if (face_res <= eps_face || since_check >= 15) {
                since_check = 0;
                Vec g_full;
                const double r = full_residual(x, g_full);
                if (r <= eps) {
                    const double fv = full_value(x);
                    if (fv < best.f) best = {fv, x};
                    rep.iterations = it_total;
                    rep.restarts = static_cast<int>(ai);
                    return finish(x, SolveStatus::converged, r);
                }
                std::vector<char> rel(static_cast<std::size_t>(n0), 0);
                bool any_rel = false;
                const double rel_gate = std::max(1e-10, face_res);
                for (index_t i = 0; i < n0; ++i)
                    if (pinned[static_cast<std::size_t>(i)] &&
                        g_full[i] - gf_mean < -rel_gate) {
                        rel[static_cast<std::size_t>(i)] = 1;
                        any_rel = true;
                    }
                if (any_rel) {
                    for (index_t i = 0; i < n0; ++i)
                        if (rel[static_cast<std::size_t>(i)]) {
                            pinned[static_cast<std::size_t>(i)] = 0;
                            --npinned;
                        }
                    ++rep.face_events;
                    rebuild = true;
                    eps_face = eps;
                    x = merge(xf, free_mask, pinned);
                    stall_small = stall_zero = 0;
                    face_ref = std::numeric_limits<double>::infinity();
                    continue;
                }
                if (face_res <= eps_face) {
                    if (face_res <= 1e-3 * eps || nf <= 1) {
                        stalled = true;
                        break;
                    }
                    eps_face = 0.25 * face_res;
                    stall_small = stall_zero = 0;
                    face_ref = std::numeric_limits<double>::infinity();
                }
            }

            const double fcur = face->value(fc); // equals the full objective
            DirectionDiagnostics dd;
            Vec d = yand_direction(*face, *U, fc, config.tangent,
                                   static_cast<std::uint64_t>(it_total), &dd);
            rep.krylov_iters_total += dd.krylov_iters;
            const double amax = alpha_max(xf, d, tau);
            bool moved = false;

            auto exact_step = [&](const Vec& dir, double cap) {
                LineModel lm = line_model(*face, fc, dir, cap);
                if (config.line_search == SolverConfig::LineSearch::armijo) {
                    // Armijo on the exact restriction polynomial
                    auto res = armijo_search([&](double al) { return lm.eval(al); },
                                             lm.a1, std::min(1.0, cap));
                    return std::pair<double, double>{res.alpha, lm.eval(res.alpha)};
                }
                return minimize_line(lm);
            };

            if (amax >= t_cur) {
                auto [al, fv] = exact_step(d, amax);
                if (al > 0) {
                    xf += al * d;
                    moved = true;
                }
            } else {
                // boundary block: projected trial, damping ladder, handoff
                std::vector<char> floor0(static_cast<std::size_t>(nf));
                for (index_t i = 0; i < nf; ++i)
                    floor0[static_cast<std::size_t>(i)] = xf[i] <= tau + 1e-12;
                std::vector<std::vector<char>> zsets;
                std::vector<index_t> zset_sizes;
                double t_len = t_cur;
                for (int rung = 0; rung < 6; ++rung) {
                    Vec xb = project_slice(xf + t_len * d, tau, mass);
                    std::vector<char> zb(static_cast<std::size_t>(nf));
                    index_t zb_count = 0, newz = 0;
                    for (index_t i = 0; i < nf; ++i) {
                        zb[static_cast<std::size_t>(i)] = xb[i] <= tau + 1e-15;
                        if (zb[static_cast<std::size_t>(i)]) ++zb_count;
                        if (xb[i] <= tau + 1e-12 && !floor0[static_cast<std::size_t>(i)])
                            ++newz;
                    }
                    if (zb_count > 0 &&
                        (zsets.empty() || zb_count != zset_sizes.back())) {
                        zsets.push_back(zb);
                        zset_sizes.push_back(zb_count);
                    }
                    Vec db = xb - xf;
                    db.array() -= db.mean(); // exact re-tangentization
                    const double dbn = db.norm();
                    if (dbn <= 1e-12 * std::max(1.0, xf.norm()) ||
                        gf.dot(db) >= -1e-10 * (1.0 + std::abs(fcur))) {
                        if (newz == 0) break;
                        t_len *= 0.5;
                        continue;
                    }
                    const double cap = std::min(1.0, alpha_max(xf, db, tau));
                    auto [al, fv] = exact_step(db, cap);
                    if (al > 0 &&
                        (rung == 0 || fcur - fv >= 1e-12 * (1.0 + std::abs(fcur)))) {
                        xf += al * db;
                        moved = true;
                        break;
                    }
                    if (newz == 0) break;
                    t_len *= 0.5;
                }
                if (!moved) {
                    // handoff: the projected machinery yields no descent step;
                    // pin the largest trial zero set whose merged point stays
                    // monotone, else the current floor set, else fall back to
                    // a capped raw segment
                    bool done = false;
                    double pin_f = fcur;
                    for (const auto& zb : zsets) {
                        index_t cnt = 0;
                        for (char b : zb) cnt += b;
                        if (cnt >= nf) continue;
                        std::vector<char> pin_try = pinned;
                        index_t j = 0;
                        for (index_t i = 0; i < n0; ++i)
                            if (free_mask[static_cast<std::size_t>(i)]) {
                                if (zb[static_cast<std::size_t>(j)])
                                    pin_try[static_cast<std::size_t>(i)] = 1;
                                ++j;
                            }
                        Vec x_try = merge(xf, free_mask, pin_try);
                        const double f_try = full_value(x_try);
                        if (f_try <= fcur + 1e-12 * (1.0 + std::abs(fcur))) {
                            pinned = std::move(pin_try);
                            npinned += cnt;
                            x = std::move(x_try);
                            pin_f = f_try;
                            done = true;
                            break;
                        }
                    }
                    if (!done) {
                        index_t cnt = 0;
                        for (index_t i = 0; i < nf; ++i)
                            if (xf[i] <= tau + 1e-12) ++cnt;
                        if (cnt > 0 && cnt < nf) {
                            index_t j = 0;
                            for (index_t i = 0; i < n0; ++i)
                                if (free_mask[static_cast<std::size_t>(i)]) {
                                    if (xf[j] <= tau + 1e-12) {
                                        pinned[static_cast<std::size_t>(i)] = 1;
                                        ++npinned;
                                    }
                                    ++j;
                                }
                            x = merge(xf, free_mask, pinned);
                            if (config.observer) pin_f = full_value(x);
                            done = true;
                        }
                    }
                    if (done) {
                        ++rep.face_events;
                        rebuild = true;
                        eps_face = eps;
                        stall_small = stall_zero = 0;
                        face_ref = std::numeric_limits<double>::infinity();
                        if (config.observer) config.observer({it_total, pin_f, x});
                        continue;
                    } else if (amax > 0) {
                        auto [al, fv] = exact_step(d, amax);
                        if (al > 0) {
                            xf += al * d;
                            moved = true;
                        }
                    }
                }
            }

            if (moved) {
                x = merge(xf, free_mask, pinned);
                const double fv_new = full_value(x);
                const double dec = (fcur - fv_new) / (1.0 + std::abs(fcur));
                if (dec < 1e-12)
                    t_cur = std::max(std::min(0.5 * t_cur, 0.99 * amax), 1e-10);
                if (dec >= 1e-12 || face_res <= 0.9 * face_ref) {
                    stall_small = 0;
                    face_ref = face_res;
                } else {
                    ++stall_small;
                }
                stall_zero = 0;
                if (fv_new < best.f) best = {fv_new, x};
                if (config.observer) config.observer({it_total, fv_new, x});
            } else {
                ++stall_zero;
            }

            if (stall_small >= 5 || stall_zero >= 2) {
                // creep: force identification by pinning the lightest free
                // coordinate whose merged point stays monotone
                const double fcur2 = full_value(x);
                std::vector<std::pair<double, index_t>> order;
                for (index_t i = 0; i < n0; ++i)
                    if (!pinned[static_cast<std::size_t>(i)])
                        order.emplace_back(x[i], i);
                std::sort(order.begin(), order.end());
                bool rescued = false;
                std::vector<char> cur_free(static_cast<std::size_t>(n0));
                for (index_t i = 0; i < n0; ++i)
                    cur_free[static_cast<std::size_t>(i)] =
                        !pinned[static_cast<std::size_t>(i)];
                Vec x_free(static_cast<index_t>(order.size()));
                {
                    index_t j = 0;
                    for (index_t i = 0; i < n0; ++i)
                        if (cur_free[static_cast<std::size_t>(i)]) x_free[j++] = x[i];
                }
                double rescue_f = fcur2;
                for (const auto& [mass_i, idx] : order) {
                    if (mass_i > 1e-3 * (1.0 - static_cast<double>(npinned) * tau))
                        break;
                    if (npinned + 1 >= n0) break;
                    std::vector<char> pin_try = pinned;
                    pin_try[static_cast<std::size_t>(idx)] = 1;
                    Vec x_try = merge(x_free, cur_free, pin_try);
                    const double f_try = full_value(x_try);
                    if (f_try <= fcur2 + 1e-12 * (1.0 + std::abs(fcur2))) {
                        pinned = std::move(pin_try);
                        ++npinned;
                        x = std::move(x_try);
                        rescue_f = f_try;
                        rescued = true;
                        break;
                    }
                }
                if (rescued) {
                    rebuild = true;
                    stall_small = stall_zero = 0;
                    face_ref = std::numeric_limits<double>::infinity();
                    ++rep.face_events;
                    if (config.observer) config.observer({it_total, rescue_f, x});
                    continue;
                }
                stalled = true;
                break;
            }
        }

        // attempt exit: budget exhausted, boundary-locked, stall, or timeout
        Vec g_exit;
        const double r = full_residual(x, g_exit);
        const double fv = full_value(x);
        if (fv < best.f) best = {fv, x};
        rep.iterations = it_total;
        rep.restarts = static_cast<int>(ai);
        if (r <= eps)
            return finish(x, SolveStatus::converged, r);
        if (timed_out) break;
        if (!config.stall_restarts)
            return finish(x, stalled ? SolveStatus::stalled : SolveStatus::max_iter, r);
    }

    Vec g_best;
    const double rb = full_residual(best.x, g_best);
    rep.iterations = it_total;
    const SolveStatus status = rb <= eps    ? SolveStatus::converged
                               : timed_out ? SolveStatus::max_elapsed
                                           : SolveStatus::stalled;
    return finish(best.x, status, rb);
}

} // namespace mvsk
