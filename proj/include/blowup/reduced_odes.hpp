#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "blowup/params.hpp"

namespace blowup {

struct FormalModeState {
    double s = 1.0;
    double W0 = 0.0;
    double W2 = 0.0;
};

// Model system for the two live inner-expansion modes:
//   W0' = W0 + (p/2k)(W0^2 + 8 N W2^2) - beta (k + W0)/((p-1) s)
//   W2' = (4p/k) W2^2 + (p/k) W0 W2 - beta W2/((p-1) s)
// with k = kappa; the cubic remainders are dropped.
FormalModeState formal_rhs(const FormalModeState& state, const ModelParameters& params,
                           const DerivedConstants& c);

// (W0, W2) = (beta kappa/((p-1) s), -kappa (1+beta)/(4 p s))
std::pair<double, double> formal_asymptotic_branch(double s, const ModelParameters& params,
                                                   const DerivedConstants& c);

// full: literal RK4 integration. The W0 direction carries an e^s instability,
// so branch-started full runs escape in finite precision; escapes are flagged,
// not errors. slaved: W0 is solved quasi-statically from its own equation with
// W0' dropped while W2 is integrated; this is what tracking the asymptotic
// branch means, and it is the mode the harness reports for branch runs.
enum class FormalMode { full, slaved };

struct FormalTrajectory {
    std::vector<FormalModeState> samples;
    bool escaped = false;
    double escape_s = 0.0;
};

FormalTrajectory integrate_formal(double s0, double s1, FormalModeState init,
                                  const ModelParameters& params, const DerivedConstants& c,
                                  FormalMode mode = FormalMode::full,
                                  int steps_per_efold = 256);

// root of the W0 equation with W0' dropped, near beta kappa/((p-1)s)
double slaved_W0(double s, double W2, const ModelParameters& params,
                 const DerivedConstants& c);

using LambdaSource = std::function<double(double)>;

struct QModeState {
    double s = 1.0;
    double q0 = 0.0;
    std::vector<double> q1;  // size N
    std::vector<double> q2;  // N x N row-major
};

QModeState make_q_mode_state(double s, double q0, const std::vector<double>& q1, int N);

// One RK4 step of the mode model:
//   q0' = q0 + kappa lt(s);  q1' = q1/2;
//   q2' = -((2+beta)/s) q2 + lt(s) q2 - lt(s) kappa b/((p-1) s) on the diagonal.
QModeState q_mode_step(const QModeState& state, double ds, const ModelParameters& params,
                       const DerivedConstants& c, const LambdaSource& lambda_tilde);

struct ThetaNormResult {
    std::vector<double> s;         // |ln(T-t)| samples
    std::vector<double> m;         // integrated mass
    std::vector<double> m_closed;  // closed-form branch
    double max_rel_dev = 0.0;
    double theta_log_exponent = 0.0;  // -gamma E/(1+gamma); equals -beta
};

// integrates dm/ds = B m^{-gamma} s^{E-1} with E = 1 + N/2 + beta(p-1+r)/(p-1)
// from s0 = |ln(T-t0)| to s_end, against the closed form
// m = ((1+gamma) B/E)^{1/(1+gamma)} s^{E/(1+gamma)}
ThetaNormResult theta_norm_ode(const ModelParameters& params, const DerivedConstants& c,
                               double T, double t0, double m0, double s_end,
                               int steps_per_efold = 512);

}  // namespace blowup
