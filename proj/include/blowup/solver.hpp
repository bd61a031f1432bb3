#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "blowup/grid.hpp"
#include "blowup/params.hpp"

namespace blowup {

enum class TimeScheme { explicit_euler, imex };

struct SolverState {
    double t = 0.0;
    RadialField u;
    double theta = 1.0;
    double dt = 0.0;
    long step_count = 0;
};

SolverState make_state(RadialField u0, const ModelParameters& params);

// Advances dt u = Lap u - u + theta u^p one step. imex treats the linear part
// by backward Euler (tridiagonal solve) and the reaction explicitly; theta is
// frozen at step start and recomputed after the update. Negative values above
// -1e-13 are clamped to zero, anything lower aborts.
class Stepper {
public:
    Stepper(ModelParameters params, TimeScheme scheme);
    void advance(SolverState& state, double dt);
    const ModelParameters& params() const { return params_; }
    TimeScheme scheme() const { return scheme_; }

private:
    void refactor(const RadialGrid& grid, double dt);

    ModelParameters params_;
    TimeScheme scheme_;
    std::vector<double> lower_, diag_, upper_, rhs_, scratch_;
    // LU factors of the implicit matrix, reused while (grid, dt) are unchanged;
    // holding the grid pointer keeps the keyed geometry alive
    std::vector<double> cprime_, inv_diag_;
    GridPtr cached_grid_;
    double cached_dt_ = -1.0;
};

// safety * min(explicit diffusion cap h^2/(2N), reaction cap 1/((p-1) theta sup^{p-1})),
// never above max_dt; the diffusion cap applies to the explicit scheme only.
double adaptive_dt(const SolverState& state, const ModelParameters& params, double safety,
                   TimeScheme scheme, double max_dt);

struct Snapshot {
    double t = 0.0;
    double theta = 1.0;
    RadialField u;
};

struct BlowupFit {
    double T_est = 0.0;
    double uncertainty = 0.0;
    int samples_used = 0;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> sup_u;
    std::vector<double> theta_series;
    std::vector<double> dt_series;
    std::vector<Snapshot> snapshots;
    std::optional<BlowupFit> blowup;
    bool no_blowup_detected = false;
    std::string note;
};

struct RunToBlowupConfig {
    ModelParameters params;
    TimeScheme scheme = TimeScheme::imex;
    double safety = 0.05;
    double max_dt = 1e-3;
    double fixed_dt = 0.0;  // > 0 forces a constant step and disables the adaptive law
    double stop_sup = 1e8;
    long max_steps = 200000000;
    double t_horizon = 25.0;
    // snapshots fire when ln(sup) has advanced by snapshot_ds/(p-1), which tracks
    // uniform spacing in s = -ln(T-t) once the Type I rate holds
    double snapshot_ds = 0.5;
    int max_snapshots = 512;
    // series rows are recorded on ln(sup) increments, with a stride fallback while flat
    double series_dlog = 0.01;
    long flat_record_stride = 2000;
};

TrajectoryRecord run_to_blowup(const RadialField& u0, const RunToBlowupConfig& config);

// Least-squares of sup^{-(p-1)} against t over the trailing window (last two
// decades of the transformed series); T_est is the root of the fitted line.
BlowupFit estimate_blowup_time(const std::vector<double>& times,
                               const std::vector<double>& sups, double p);

std::string checkpoint_to_text(const SolverState& state, const ModelParameters& params);
std::pair<SolverState, ModelParameters> checkpoint_from_text(const std::string& text);

}  // namespace blowup
