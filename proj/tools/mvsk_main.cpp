// mvsk: command-line front end for the portfolio solver library.
//   solve  minimize the moment objective over the simplex slice
//   gen    write a synthetic return panel (uniform or conditioned family)
//   bench  run a benchmark sweep from a JSON spec, write a CSV
//   check  certificates and curvature diagnostics for a panel + coefficients

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include <mvsk/mvsk.hpp>

namespace {

using namespace mvsk;

PreferenceCoefficients parse_coeffs_arg(const std::string& coeffs_arg,
                                        std::optional<double> crra_arg) {
    if (!coeffs_arg.empty() && crra_arg)
        throw domain_error("--coeffs and --crra are mutually exclusive");
    if (crra_arg) return crra_coefficients(*crra_arg);
    if (coeffs_arg.empty())
        throw domain_error("one of --coeffs or --crra is required");
    double c[4];
    char trailing;
    if (std::sscanf(coeffs_arg.c_str(), "%lf,%lf,%lf,%lf%c", &c[0], &c[1], &c[2],
                    &c[3], &trailing) != 4)
        throw domain_error("--coeffs expects exactly \"c1,c2,c3,c4\"");
    return make_coefficients(c[0], c[1], c[2], c[3]);
}

void emit_json(const nlohmann::json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream os(out_path);
    if (!os) throw data_error("cannot open output file: " + out_path);
    os << j.dump(2) << "\n";
}

int run_solve(const std::string& panel_path, const std::string& coeffs_arg,
              std::optional<double> crra_arg, const std::string& config_name,
              double tol, const std::string& out_path, bool exact_trace) {
    ReturnPanel panel = load_returns_auto(panel_path);
    PreferenceCoefficients coeffs = parse_coeffs_arg(coeffs_arg, crra_arg);

    SolverConfig cfg = preset(config_name);
    cfg.epsilon = tol;
    if (exact_trace) cfg.tangent.exact_trace = true;

    CertificateReport cert = convexity_certificate(coeffs);
    if (!cert.certified)
        std::cerr << "note: coefficients are outside the convexity certificate "
                     "(gap "
                  << cert.gap << "); the solve returns a stationary point\n";

    SolveReport rep = solve(panel, coeffs, cfg);
    nlohmann::json j = report_to_json(rep);
    j["certificate"] = report_to_json(cert);
    emit_json(j, out_path);
    if (!out_path.empty())
        std::cout << to_string(rep.status) << ": f = " << rep.f_star
                  << ", kkt = " << rep.kkt_residual << ", " << rep.iterations
                  << " iterations, report written to " << out_path << "\n";
    return rep.status == SolveStatus::converged ? 0 : 3;
}

int run_gen(const std::string& family, index_t n, index_t T, double kappa,
            std::uint64_t seed, const std::string& out_path) {
    ReturnPanel panel;
    if (family == "uniform")
        panel = gen_uniform_instance(n, T, seed);
    else if (family == "conditioned")
        panel = gen_conditioned_instance(n, T, kappa, seed);
    else
        throw domain_error("--family must be uniform or conditioned");

    const bool csv = out_path.size() > 4 &&
                     out_path.compare(out_path.size() - 4, 4, ".csv") == 0;
    if (csv)
        save_returns_csv(out_path, panel);
    else
        save_returns_binary(out_path, panel);
    std::cout << "wrote " << family << " panel (" << T << " periods x " << n
              << " assets) to " << out_path << (csv ? " [csv]" : " [binary-f64]")
              << "\n";
    return 0;
}

int run_bench(const std::string& spec_path, const std::string& out_path) {
    BenchmarkSpec spec = load_benchmark_spec(spec_path);
    BenchResults results = run_benchmark(spec);
    write_bench_csv(results.records, out_path);
    std::cout << results.records.size() << " records written to " << out_path << "\n";
    for (const auto& s : results.summaries)
        std::cout << "  " << s.instance << " / " << s.config << ": median wall "
                  << s.median_wall << "s, median kkt " << s.median_kkt
                  << ", f = " << s.f_star << "\n";
    for (const auto& [name, ratio] : results.ratios)
        std::cout << "  " << name << ": wall ratio " << spec.configs[0] << "/"
                  << spec.configs[1] << " = " << ratio << "\n";
    return 0;
}

int run_check(const std::string& panel_path, const std::string& coeffs_arg,
              std::optional<double> crra_arg, bool spectrum, bool constants,
              double tau, const std::string& out_path) {
    ReturnPanel panel = load_returns_auto(panel_path);
    PreferenceCoefficients coeffs = parse_coeffs_arg(coeffs_arg, crra_arg);

    nlohmann::json j;
    j["assets"] = panel.assets();
    j["periods"] = panel.periods();
    j["coefficients"] = {coeffs.c1, coeffs.c2, coeffs.c3, coeffs.c4};
    j["certificate"] = report_to_json(convexity_certificate(coeffs));
    if (constants)
        j["constants"] = report_to_json(regularity_constants(panel, coeffs, tau));
    if (spectrum) {
        Vec x0 = Vec::Constant(panel.assets(),
                               1.0 / static_cast<double>(panel.assets()));
        j["spectrum"] = report_to_json(reduced_hessian_spectrum(panel, coeffs, x0));
    }
    emit_json(j, out_path);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"long-only moment-portfolio solver"};
    app.require_subcommand(1);

    // solve
    std::string solve_panel, solve_coeffs, solve_config = "small", solve_out;
    std::optional<double> solve_crra;
    double solve_tol = 1e-6;
    bool solve_exact_trace = false;
    auto* solve_cmd = app.add_subcommand("solve", "minimize over the simplex slice");
    solve_cmd->add_option("--panel", solve_panel, "returns file (csv or binary-f64)")
        ->required();
    solve_cmd->add_option("--coeffs", solve_coeffs, "objective coefficients \"c1,c2,c3,c4\"");
    solve_cmd->add_option("--crra", solve_crra,
                          "utility curvature; sets (1, g/2, g(g+1)/6, g(g+1)(g+2)/24)");
    solve_cmd->add_option("--config", solve_config, "preset: small or large")
        ->check(CLI::IsMember({"small", "large"}));
    solve_cmd->add_option("--tol", solve_tol, "stationarity tolerance (default 1e-6)");
    solve_cmd->add_option("--out", solve_out, "write the JSON report here");
    solve_cmd->add_flag("--exact-trace", solve_exact_trace,
                        "force the exact trace in the matrix-free mode");

    // gen
    std::string gen_family, gen_out;
    index_t gen_n = 0, gen_t = 0;
    double gen_kappa = 1.0, gen_gamma = 0.0;
    std::uint64_t gen_seed = 0;
    auto* gen_cmd = app.add_subcommand("gen", "write a synthetic return panel");
    gen_cmd->add_option("--family", gen_family, "uniform or conditioned")->required();
    gen_cmd->add_option("--n", gen_n, "number of assets")->required();
    gen_cmd->add_option("--t", gen_t, "number of periods")->required();
    gen_cmd->add_option("--kappa", gen_kappa,
                        "reduced condition target (conditioned family)");
    gen_cmd->add_option("--gamma", gen_gamma,
                        "accepted for benchmark-spec symmetry; panels carry no "
                        "coefficient data");
    gen_cmd->add_option("--seed", gen_seed, "generator seed")->required();
    gen_cmd->add_option("--out", gen_out, "output path (.csv writes text, else binary)")
        ->required();

    // bench
    std::string bench_spec, bench_out;
    auto* bench_cmd = app.add_subcommand("bench", "run a benchmark sweep");
    bench_cmd->add_option("--spec", bench_spec, "JSON benchmark spec")->required();
    bench_cmd->add_option("--out", bench_out, "CSV output path")->required();

    // check
    std::string check_panel, check_coeffs, check_out;
    std::optional<double> check_crra;
    bool check_spectrum = false, check_constants = false;
    double check_tau = 1e-8;
    auto* check_cmd =
        app.add_subcommand("check", "certificates and curvature diagnostics");
    check_cmd->add_option("--panel", check_panel, "returns file (csv or binary-f64)")
        ->required();
    check_cmd->add_option("--coeffs", check_coeffs, "objective coefficients \"c1,c2,c3,c4\"");
    check_cmd->add_option("--crra", check_crra, "utility curvature");
    check_cmd->add_flag("--spectrum", check_spectrum,
                        "eigenvalues of the reduced curvature at equal weights");
    check_cmd->add_flag("--constants", check_constants,
                        "smoothness and conditioning constants over the slice");
    check_cmd->add_option("--tau", check_tau, "slice floor for --constants");
    check_cmd->add_option("--out", check_out, "write the JSON report here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve_cmd->parsed())
            return run_solve(solve_panel, solve_coeffs, solve_crra, solve_config,
                             solve_tol, solve_out, solve_exact_trace);
        if (gen_cmd->parsed()) {
            if (gen_cmd->count("--gamma") && !(gen_gamma > 0))
                throw domain_error("--gamma must be positive");
            return run_gen(gen_family, gen_n, gen_t, gen_kappa, gen_seed, gen_out);
        }
        if (bench_cmd->parsed()) return run_bench(bench_spec, bench_out);
        if (check_cmd->parsed())
            return run_check(check_panel, check_coeffs, check_crra, check_spectrum,
                             check_constants, check_tau, check_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
