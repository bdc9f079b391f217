#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/QR>

#include "json.hpp"

#include "rng.hpp"
#include "solver.hpp"
#include "verification.hpp"

namespace mvsk {

/// iid U[-0.1, 0.4] return panel, filled row-major (period outer, asset
/// inner) from one SplitMix64 stream so a seed pins the panel bit-for-bit.
inline ReturnPanel gen_uniform_instance(index_t n, index_t T, std::uint64_t seed) {
    if (n < 1 || T < 2) throw domain_error("gen_uniform_instance: need n >= 1, T >= 2");
    SplitMix64 rng(seed);
    Mat R(T, n);
    for (index_t t = 0; t < T; ++t)
        for (index_t i = 0; i < n; ++i) R(t, i) = rng.next_uniform(-0.1, 0.4);
    return center_panel(std::move(R));
}

/// Panel with a controlled reduced conditioning: the centered map satisfies
/// sv(A U) = geomspace(1, kappa, r) by construction, 1^T A = 0, and the
/// equal-weight point has z = 0 so the reduced Hessian there has condition
/// number kappa^2 exactly. Draw order is frozen: left factor normals
/// (row-major), right factor normals (row-major), then means.
inline ReturnPanel gen_conditioned_instance(index_t n, index_t T, double kappa,
                                            std::uint64_t seed) {
    if (n < 2 || T < 2) throw domain_error("gen_conditioned_instance: need n, T >= 2");
    if (!(kappa >= 1.0)) throw domain_error("gen_conditioned_instance: kappa must be >= 1");
    const index_t r = std::min(n - 1, T - 1);
    SplitMix64 rng(seed);

    Mat G(T, r);
    for (index_t t = 0; t < T; ++t)
        for (index_t j = 0; j < r; ++j) G(t, j) = rng.next_normal();
    const Eigen::RowVectorXd gm = G.colwise().mean();
    G.rowwise() -= gm; // columns orthogonal to 1, so the panel stays centered
    Eigen::HouseholderQR<Mat> qlq(G);
    Mat Q = qlq.householderQ() * Mat::Identity(T, r);

    Mat Gv(n - 1, r);
    for (index_t i = 0; i < n - 1; ++i)
        for (index_t j = 0; j < r; ++j) Gv(i, j) = rng.next_normal();
    Eigen::HouseholderQR<Mat> qrv(Gv);
    Mat V = qrv.householderQ() * Mat::Identity(n - 1, r);

    Vec s(r);
    if (r == 1) {
        s[0] = 1.0;
    } else {
        const double step = std::log(kappa) / static_cast<double>(r - 1);
        for (index_t j = 0; j < r; ++j) s[j] = std::exp(step * static_cast<double>(j));
    }

    TangentBasis basis(n);
    Mat UV(n, r);
    for (index_t j = 0; j < r; ++j) UV.col(j) = basis.apply(V.col(j));

    Mat R = (Q * s.asDiagonal()) * UV.transpose();
    Vec mu(n);
    for (index_t i = 0; i < n; ++i) mu[i] = rng.next_uniform(0.1, 0.2);
    R.rowwise() += mu.transpose();
    return center_panel(std::move(R));
}

/// The three stress calibrations used across the test batteries. Only the
/// middle two certify convex; the first is deliberately outside the cone.
inline std::vector<PreferenceCoefficients> stress_profiles() {
    auto tag = [](PreferenceCoefficients c, const char* name) {
        c.origin = PreferenceCoefficients::Origin::profile;
        c.profile_name = name;
        return c;
    };
    return {tag(make_coefficients(10, 1, 10, 1), "return-seeking"),
            tag(make_coefficients(1, 10, 1, 10), "risk-averse"),
            tag(make_coefficients(10, 10, 10, 10), "balanced")};
}

inline PreferenceCoefficients stress_profile(const std::string& name) {
    for (auto& c : stress_profiles())
        if (c.profile_name == name) return c;
    throw domain_error("stress_profile: unknown profile " + name);
}

struct BenchInstanceSpec {
    std::string name;
    std::string family; // "uniform" or "conditioned"
    index_t n = 0, T = 0;
    double kappa = 1.0;
    std::uint64_t seed = 0;
    std::optional<double> gamma;
    std::optional<std::string> profile;
};

struct BenchmarkSpec {
    std::vector<BenchInstanceSpec> instances;
    std::vector<std::string> configs = {"small", "large"};
    int replications = 3;
    int warmup = 1;
    double epsilon = 1e-6;
};

inline BenchmarkSpec parse_benchmark_spec(const nlohmann::json& j) {
    BenchmarkSpec spec;
    if (!j.contains("instances") || !j["instances"].is_array() || j["instances"].empty())
        throw data_error("benchmark spec: needs a non-empty 'instances' array");
    for (const auto& ji : j["instances"]) {
        BenchInstanceSpec inst;
        inst.family = ji.at("family").get<std::string>();
        if (inst.family != "uniform" && inst.family != "conditioned")
            throw data_error("benchmark spec: unknown family " + inst.family);
        inst.n = ji.at("n").get<index_t>();
        inst.T = ji.at("T").get<index_t>();
        inst.seed = ji.value("seed", std::uint64_t{0});
        if (ji.contains("kappa")) inst.kappa = ji["kappa"].get<double>();
        if (ji.contains("gamma")) inst.gamma = ji["gamma"].get<double>();
        if (ji.contains("profile")) inst.profile = ji["profile"].get<std::string>();
        if (!inst.gamma && !inst.profile)
            throw data_error("benchmark spec: instance needs 'gamma' or 'profile'");
        if (inst.gamma && inst.profile)
            throw data_error("benchmark spec: 'gamma' and 'profile' are exclusive");
        inst.name = ji.value("name", inst.family + "_n" + std::to_string(inst.n) +
                                         "_s" + std::to_string(inst.seed));
        spec.instances.push_back(std::move(inst));
    }
    if (j.contains("configs")) {
        spec.configs.clear();
        for (const auto& c : j["configs"]) spec.configs.push_back(c.get<std::string>());
    }
    spec.replications = j.value("replications", 3);
    spec.warmup = j.value("warmup", 1);
    spec.epsilon = j.value("epsilon", 1e-6);
    if (spec.replications < 1) throw data_error("benchmark spec: replications must be >= 1");
    return spec;
}

inline BenchmarkSpec load_benchmark_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("benchmark spec: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("benchmark spec: invalid JSON in " + path + ": " + e.what());
    }
    return parse_benchmark_spec(j);
}

struct BenchRecord {
    std::string instance, config;
    int rep = 0;
    index_t n = 0, T = 0;
    std::optional<double> kappa;
    std::string profile;
    double wall_seconds = 0, kkt = 0, f_star = 0;
    int iters = 0;
    std::string status;
};

struct BenchSummary {
    std::string instance, config;
    double median_wall = 0, median_kkt = 0, f_star = 0;
};

struct BenchResults {
    std::vector<BenchRecord> records;
    std::vector<BenchSummary> summaries;
    // (instance, median wall of first config / median wall of second)
    std::vector<std::pair<std::string, double>> ratios;
};

namespace detail {

// lower median: the ((k-1)/2)-th order statistic
inline double order_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

} // namespace detail

inline PreferenceCoefficients bench_coefficients(const BenchInstanceSpec& inst) {
    if (inst.gamma) return crra_coefficients(*inst.gamma);
    return stress_profile(*inst.profile);
}

inline ReturnPanel bench_panel(const BenchInstanceSpec& inst) {
    if (inst.family == "uniform") return gen_uniform_instance(inst.n, inst.T, inst.seed);
    return gen_conditioned_instance(inst.n, inst.T, inst.kappa, inst.seed);
}

/// Warmup plus fixed replications per (instance, config); numeric outputs are
/// identical across replications by construction, only timings move. Medians
/// are order statistics, never interpolated. A throwing solve is captured as
/// an "error" record instead of aborting the sweep.
inline BenchResults run_benchmark(const BenchmarkSpec& spec) {
    BenchResults out;
    for (const auto& inst : spec.instances) {
        const ReturnPanel panel = bench_panel(inst);
        const PreferenceCoefficients coeffs = bench_coefficients(inst);
        for (const auto& cfg_name : spec.configs) {
            SolverConfig cfg = preset(cfg_name);
            cfg.epsilon = spec.epsilon;
            std::vector<double> walls, kkts;
            double f_star = std::numeric_limits<double>::quiet_NaN();
            for (int rep = -spec.warmup; rep < spec.replications; ++rep) {
                BenchRecord rec;
                rec.instance = inst.name;
                rec.config = cfg_name;
                rec.rep = rep;
                rec.n = inst.n;
                rec.T = inst.T;
                if (inst.family == "conditioned") rec.kappa = inst.kappa;
                rec.profile = coeffs.origin_label();
                try {
                    SolveReport r = solve(panel, coeffs, cfg);
                    rec.wall_seconds = r.wall_seconds;
                    rec.kkt = r.kkt_residual;
                    rec.f_star = r.f_star;
                    rec.iters = r.iterations;
                    rec.status = to_string(r.status);
                } catch (const std::exception& e) {
                    rec.status = std::string("error: ") + e.what();
                    rec.wall_seconds = rec.kkt = rec.f_star =
                        std::numeric_limits<double>::quiet_NaN();
                }
                if (rep < 0) continue; // warmup runs are discarded
                walls.push_back(rec.wall_seconds);
                kkts.push_back(rec.kkt);
                f_star = rec.f_star;
                out.records.push_back(std::move(rec));
            }
            if (!walls.empty() && std::all_of(walls.begin(), walls.end(), [](double w) {
                    return std::isfinite(w);
                })) {
                out.summaries.push_back({inst.name, cfg_name,
                                         detail::order_median(walls),
                                         detail::order_median(kkts), f_star});
            }
        }
        if (spec.configs.size() == 2) {
            const BenchSummary *s0 = nullptr, *s1 = nullptr;
            for (const auto& s : out.summaries) {
                if (s.instance != inst.name) continue;
                if (s.config == spec.configs[0]) s0 = &s;
                if (s.config == spec.configs[1]) s1 = &s;
            }
            if (s0 && s1 && s1->median_wall > 0)
                out.ratios.emplace_back(inst.name, s0->median_wall / s1->median_wall);
        }
    }
    return out;
}

inline void write_bench_csv(const std::vector<BenchRecord>& records, std::ostream& os) {
    auto cell = [](std::string s) {
        for (char& ch : s)
            if (ch == ',' || ch == '\n') ch = ';';
        return s;
    };
    os << "instance,config,rep,n,T,kappa,profile,wall_seconds,kkt,f_star,iters,status\n";
    for (const auto& r : records) {
        os << cell(r.instance) << ',' << cell(r.config) << ',' << r.rep << ',' << r.n
           << ',' << r.T << ',';
        if (r.kappa) os << std::setprecision(17) << *r.kappa;
        os << ',' << cell(r.profile) << ',' << std::fixed << std::setprecision(6)
           << r.wall_seconds << std::defaultfloat << ',' << std::setprecision(17)
           << r.kkt << ',' << r.f_star << ',' << r.iters << ',' << cell(r.status)
           << '\n';
    }
}

inline void write_bench_csv(const std::vector<BenchRecord>& records,
                            const std::string& path) {
    std::ofstream os(path);
    if (!os) throw data_error("write_bench_csv: cannot open " + path);
    write_bench_csv(records, os);
}

} // namespace mvsk
