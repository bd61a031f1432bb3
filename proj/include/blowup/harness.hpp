#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blowup/config.hpp"
#include "blowup/grid.hpp"
#include "blowup/initial_data.hpp"
#include "blowup/params.hpp"
#include "blowup/reduced_odes.hpp"
#include "blowup/similarity.hpp"
#include "blowup/solver.hpp"
#include "blowup/spectral.hpp"

namespace blowup {

struct RunConfig {
    ModelParameters params;
    DerivedConstants constants;

    int n_nodes = 2001;
    GridSpacing spacing = GridSpacing::origin_refined;
    double refined_fraction = 0.5;

    TimeScheme scheme = TimeScheme::imex;
    double safety = 0.05;
    double max_dt = 1e-3;
    double fixed_dt = 0.0;
    double stop_sup = 2000.0;
    double t_horizon = 25.0;
    long max_steps = 50000000;
    double snapshot_ds = 0.5;
    int max_snapshots = 512;

    ShrinkingSetConfig ss;

    std::string initial_kind = "bump";  // bump | constant | prepared
    double bump_amplitude = 10.0;
    double bump_width2 = 0.01;  // bump(rho) = amplitude exp(-rho^2/width2)
    double constant_value = 2.0;
    PreparedDataSpec prepared;

    std::string output_dir = "out";
    std::uint64_t seed = 0;

    static RunConfig from_config(const Config& cfg);  // throws on inconsistency
    Config to_config() const;                         // canonical echo, hashed and persisted
};

struct FitResult {
    double exponent = 0.0;
    double stderr_ = 0.0;
    int n = 0;
    double decades = 0.0;
};

// least squares of ln v against ln|ln(T_est - t)|; needs >= 20 samples whose
// T_est - t spans >= 2 decades
FitResult fit_log_exponent(const std::vector<double>& t, const std::vector<double>& v,
                           double T_est);

struct ProfileErrorSample {
    double s = 0.0;
    double sup_err = 0.0;        // sup_{|y|<=5} |W - phi|
    double rate_constant = 0.0;  // (T_est - t)^{1/(p-1)} sup_u, drifting toward kappa
};

struct ModeSample {
    double s = 0.0;
    double q0 = 0.0, q1 = 0.0, q2 = 0.0;
    double q_minus_weighted = 0.0, grad_perp_weighted = 0.0, q_e_sup = 0.0;
    bool member = false;
    std::string first_fail;
};

struct ExperimentRecord {
    std::uint64_t config_hash = 0;
    RunConfig config;
    TrajectoryRecord trajectory;
    int trusted_samples = 0;  // trailing series rows with T_est - t above the grid trust floor
    std::vector<ProfileErrorSample> profile_error;
    std::vector<ModeSample> modes;
    std::optional<FitResult> theta_fit;
    std::vector<ClauseVerdict> verdicts;
    bool verdicts_pass = true;
    std::vector<std::string> notes;
};

ExperimentRecord run_experiment(const RunConfig& config);

struct ExitRecord {
    double d0 = 0.0;
    double d1 = 0.0;
    std::string first_clause;  // empty when censored
    double exit_s = 0.0;
    int steps = 0;
    bool censored = false;
    double q0_at_exit = 0.0;
};

struct SweepResult {
    std::vector<ExitRecord> entries;
    bool boundary_exits_q01_fast = false;  // boundary points leave via (q0,q1) within 3 steps
    bool q0_sign_change = false;           // exit direction changes sign across the grid
    std::string text() const;
};

// model-dynamics sweep: (d0,d1) scaled onto the boundary/interior of
// V_A(s0) = [-A^3/s0^{3/2}, A^3/s0^{3/2}] x [-A/s0^2, A/s0^2], evolved by q_mode_step
SweepResult shooting_sweep_model(const ModelParameters& params, const DerivedConstants& c,
                                 const ShrinkingSetConfig& cfg, double s0, int per_side,
                                 double horizon_s, const LambdaSource& lambda_tilde);

// full-pipeline sweep: prepared data per (d0,d1), PDE run, decomposition per
// snapshot, first-failing-clause map
SweepResult shooting_sweep_pde(const RunConfig& base, int per_side);

// filesystem helpers
void ensure_dir(const std::string& path);
std::string output_root();  // $BLOWUPSIM_OUTPUT_ROOT or "."
std::string path_join(const std::string& a, const std::string& b);
void write_text_file(const std::string& path, const std::string& content);

// CSVs (trajectory, profile error, modes, fit) plus a standalone plot script
void export_record(const ExperimentRecord& record, const std::string& dir);
std::string record_summary(const ExperimentRecord& record);

}  // namespace blowup
