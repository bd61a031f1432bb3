// Command-line front end: constants inspection, full simulation runs with
// exported diagnostics, initial-data verification, shooting sweeps, and
// standalone log-exponent fits.
//
// Exit codes: 0 all requested verdicts pass, 2 a verdict failed, 1 execution
// error (bad config, unreadable file, solver failure).
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "blowup/harness.hpp"

using namespace blowup;

namespace {

RunConfig load_run_config(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
    Config cfg =
        config_path.empty() ? RunConfig{}.to_config() : Config::load_file(config_path);
    for (const std::string& kv : overrides) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        std::string key = kv.substr(0, eq);
        std::string value = kv.substr(eq + 1);
        const auto trim = [](std::string& s) {
            const size_t a = s.find_first_not_of(" \t");
            const size_t b = s.find_last_not_of(" \t");
            s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
        };
        trim(key);
        trim(value);
        cfg.set(key, value);
    }
    return RunConfig::from_config(cfg);
}

void print_constants(const ModelParameters& params) {
    const DerivedConstants c = derive_constants(params);
    std::printf("p         = %g\n", params.p);
    std::printf("r         = %g\n", params.r);
    std::printf("gamma     = %g\n", params.gamma);
    std::printf("N         = %d\n", params.N);
    std::printf("R         = %g\n", params.domain_radius);
    std::printf("critical  = %s (critical r = %g)\n", params.critical ? "yes" : "no",
                critical_r(params.p, params.N));
    std::printf("kappa     = %.12g\n", c.kappa);
    std::printf("beta      = %.12g\n", c.beta);
    std::printf("b         = %.12g\n", c.b_coef);
    std::printf("nu        = %.12g\n", c.nu);
    std::printf("a         = %.12g\n", c.a_coef);
    std::printf("B         = %.12g\n", c.B_const);
    std::printf("theta_inf = %.12g\n", c.theta_inf);
    for (const std::string& w : admissibility_warnings(params))
        std::printf("warning: %s\n", w.c_str());
}

int run_and_report(const RunConfig& rc, bool diagnose) {
    const ExperimentRecord rec = run_experiment(rc);
    std::printf("%s", record_summary(rec).c_str());
    if (diagnose && !rec.modes.empty()) {
        std::printf("\nmode trajectory (trusted snapshots):\n");
        std::printf("        s          q0          q1          q2  member fail\n");
        for (const ModeSample& m : rec.modes)
            std::printf("%9.4f  %+.3e  %+.3e  %+.3e  %-6s %s\n", m.s, m.q0, m.q1, m.q2,
                        m.member ? "yes" : "no", m.first_fail.c_str());
    }
    std::printf("\noutputs: %s\n", path_join(output_root(), rc.output_dir).c_str());
    return rec.verdicts_pass ? 0 : 2;
}

std::vector<std::vector<double>> read_csv_columns(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw std::runtime_error("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (...) {
                numeric = false;
                break;
            }
        }
        if (numeric && !row.empty()) rows.push_back(row);
    }
    return rows;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-time blowup simulator and verification harness"};
    app.require_subcommand(1);

    // constants
    ModelParameters cparams;
    bool cli_critical = false;
    double cli_r = -1.0;
    auto* c_cmd = app.add_subcommand("constants", "print the derived constants for a model");
    c_cmd->add_option("-p", cparams.p, "nonlinearity exponent");
    c_cmd->add_option("-N", cparams.N, "space dimension");
    c_cmd->add_option("--gamma", cparams.gamma, "nonlocal coupling strength");
    c_cmd->add_option("-r", cli_r, "nonlocal norm power (default: the critical value)");
    c_cmd->add_option("-R,--radius", cparams.domain_radius, "ball radius");
    c_cmd->add_flag("--critical", cli_critical, "mark the configuration critical");

    // shared run options
    std::string config_path;
    std::vector<std::string> overrides;
    const auto add_run_opts = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "flat key = value config file");
        cmd->add_option("--set", overrides, "override a config key, key=value")
            ->take_all();
    };

    auto* sim_cmd =
        app.add_subcommand("simulate", "run an experiment and export its diagnostics");
    add_run_opts(sim_cmd);
    auto* diag_cmd = app.add_subcommand(
        "diagnose", "run an experiment and print the full mode trajectory");
    add_run_opts(diag_cmd);
    auto* verify_cmd = app.add_subcommand(
        "verify-initial-data", "check that prepared data enters the initial constraint set");
    add_run_opts(verify_cmd);

    // sweep
    std::string sweep_mode = "model";
    int per_side = 5;
    double sweep_s0 = 10.0, sweep_horizon = 0.0, sweep_lambda = 0.0;
    auto* sweep_cmd =
        app.add_subcommand("sweep", "shooting sweep over the prepared-data box");
    add_run_opts(sweep_cmd);
    sweep_cmd->add_option("--mode", sweep_mode, "model (mode ODEs) or pde (full pipeline)")
        ->check(CLI::IsMember({"model", "pde"}));
    sweep_cmd->add_option("--per-side", per_side, "grid points per direction");
    sweep_cmd->add_option("--s0", sweep_s0, "model sweep start scale");
    sweep_cmd->add_option("--horizon", sweep_horizon,
                          "model sweep end scale (default s0 + 6)");
    sweep_cmd->add_option("--lambda", sweep_lambda,
                          "model sweep source amplitude, lambda = C A^3/s^{3/2}");

    // fit
    std::string fit_csv;
    int t_col = 0, v_col = 2;
    double fit_T_est = 0.0;
    auto* fit_cmd =
        app.add_subcommand("fit", "least-squares log-exponent of a CSV series");
    fit_cmd->add_option("--csv", fit_csv, "CSV file with numeric columns")->required();
    fit_cmd->add_option("--t-col", t_col, "time column index");
    fit_cmd->add_option("--v-col", v_col, "value column index");
    fit_cmd->add_option("--T-est", fit_T_est, "blowup time estimate")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_cmd->parsed()) {
            cparams.r = cli_r < 0.0 ? critical_r(cparams.p, cparams.N) : cli_r;
            cparams.critical = cli_critical;
            validate(cparams);
            print_constants(cparams);
            return 0;
        }
        if (sim_cmd->parsed()) return run_and_report(load_run_config(config_path, overrides), false);
        if (diag_cmd->parsed()) return run_and_report(load_run_config(config_path, overrides), true);
        if (verify_cmd->parsed()) {
            RunConfig rc = load_run_config(config_path, overrides);
            if (rc.initial_kind != "prepared")
                throw std::invalid_argument(
                    "verify-initial-data requires initial.kind = prepared");
            const S0Report rep =
                verify_in_S0(rc.prepared, rc.params, rc.constants, rc.ss);
            std::printf("%s", rep.text().c_str());
            return rep.bulk_pass ? 0 : 2;
        }
        if (sweep_cmd->parsed()) {
            RunConfig rc = load_run_config(config_path, overrides);
            SweepResult sweep;
            if (sweep_mode == "model") {
                const double horizon =
                    sweep_horizon > 0.0 ? sweep_horizon : sweep_s0 + 6.0;
                const double C = sweep_lambda;
                const double A3 = rc.ss.A * rc.ss.A * rc.ss.A;
                sweep = shooting_sweep_model(
                    rc.params, rc.constants, rc.ss, sweep_s0, per_side, horizon,
                    [C, A3](double s) { return C * A3 / std::pow(s, 1.5); });
            } else {
                sweep = shooting_sweep_pde(rc, per_side);
            }
            std::printf("%s", sweep.text().c_str());
            return 0;
        }
        if (fit_cmd->parsed()) {
            const auto rows = read_csv_columns(fit_csv);
            std::vector<double> t, v;
            for (const auto& row : rows) {
                if (t_col >= static_cast<int>(row.size()) ||
                    v_col >= static_cast<int>(row.size()))
                    continue;
                t.push_back(row[t_col]);
                v.push_back(row[v_col]);
            }
            const FitResult fit = fit_log_exponent(t, v, fit_T_est);
            std::printf("exponent = %.9g +- %.3g (n=%d, %.3g decades of T_est - t)\n",
                        fit.exponent, fit.stderr_, fit.n, fit.decades);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
