#pragma once

#include <string>
#include <vector>

#include "blowup/grid.hpp"
#include "blowup/params.hpp"
#include "blowup/spectral.hpp"

namespace blowup {

struct PreparedDataSpec {
    double d0 = 0.0;
    std::vector<double> d1;  // size N; radial runs use the axis component
    double T = 0.0;          // blowup-scale parameter, s0 = |ln T|
    double A = 2.0;
    double K0 = 4.0;
    double s0_floor = 50.0;  // configurable; relax deliberately for desk-scale sweeps

    double s0() const;
    double d1_axis() const { return d1.empty() ? 0.0 : d1[0]; }
};

void validate_prepared(const PreparedDataSpec& spec, const ModelParameters& params);

// Signed-axis evaluation of the prepared data at x (the d1 term is odd in x):
//   T^{-1/(p-1)} (theta_inf s0^{-beta})^{-1/(p-1)}
//     [phi(x/sqrt(T), s0) + (d0 A^3/s0^{3/2} + (A/s0^2) d1 x/sqrt(T)) chi0(32|z0|/K0)] chi1(x,0)
//   + H*(x) (1 - chi1(x,0)),  z0 = x/sqrt(T s0),  chi1(x,0) = chi0(|x|/(K0 sqrt(T) s0))
double prepared_value(const PreparedDataSpec& spec, const ModelParameters& params,
                      const DerivedConstants& c, double x);

RadialField construct_initial_data(const PreparedDataSpec& spec, const ModelParameters& params,
                                   const DerivedConstants& c, GridPtr grid);

struct S0Report {
    double theta0 = 0.0;
    double theta0_predicted = 0.0;  // theta_inf s0^{-beta}
    double eps_correction = 0.0;    // (theta0/theta0_predicted)^{1/(p-1)} - 1
    double q0 = 0.0, q1_axis = 0.0, q2_axis = 0.0;
    double q_minus_weighted = 0.0;
    double grad_perp_weighted = 0.0;
    double q_e_sup = 0.0;
    ShrinkingSetReport bulk;  // strict entry bounds
    bool bulk_pass = false;
    double min_margin = 0.0;  // smallest bound/value ratio across bulk clauses
    // intermediate-region clauses, reported, not gated
    double p2_gap = 0.0;
    double p2_grad = 0.0;
    std::string text() const;
};

// Analytic verification that the prepared data enters the initial constraint
// set: theta(0) by log-stretched radial quadrature of the closed-form data,
// mode decomposition of q(y, s0) on the signed axis (a grid cannot resolve
// sqrt(T) for the T this check targets, so evaluation is by formula).
S0Report verify_in_S0(const PreparedDataSpec& spec, const ModelParameters& params,
                      const DerivedConstants& c, const ShrinkingSetConfig& cfg);

}  // namespace blowup
