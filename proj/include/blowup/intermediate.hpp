#pragma once

#include <functional>

#include "blowup/params.hpp"
#include "blowup/solver.hpp"

namespace blowup {

// forward map (K0/4) sqrt(rho |ln rho|), monotone for rho below 1/e
double region_boundary_x(double rho, double K0);

// Solves |x| = (K0/4) sqrt(rho |ln rho|) for rho = T - t(x) and returns t(x).
// t(x) may be negative (rho > T is admissible); the error condition is only
// the monotonicity window of the forward map.
double solve_t_of_x(double x_abs, double K0, double T);

// theta(t) for t >= 0; arguments t <= 0 are evaluated as theta(0) internally
using ThetaOfT = std::function<double(double)>;

// Flat reference profile on the intermediate region:
//   hatU(tau) = ((p-1)(1 - int_0^tau min(theta~(t')/theta(t(x)), 1) dt') + b K0^2/16)^{-1/(p-1)}
// with theta~(t') = theta(t' rho + t(x)) and the t <= 0 convention above.
double hat_U(double x_abs, double tau, const ThetaOfT& theta, const ModelParameters& params,
             const DerivedConstants& c, double K0, double T, int quad_panels = 256);

// locally rescaled solution U = rho^{1/(p-1)} theta(t(x))^{1/(p-1)} u(x + xi sqrt(rho), t(x) + tau rho)
// read from trajectory snapshots by bilinear interpolation in (rho, t)
double rescaled_U(double x_abs, double xi, double tau, const TrajectoryRecord& traj,
                  const ModelParameters& params, double K0, double T);

// Modified reference profile: power-log core for small |x|, 1 beyond R/2,
// C1 log-space blend between; requires R < 2 so the core logarithm is positive.
double H_star(double x_abs, const ModelParameters& params, const DerivedConstants& c);

// final blowup profile theta_inf^{-1/(p-1)} [b x^2/(2|ln x|)]^{-1/(p-1)} [2|ln x|]^nu
double u_star(double x_abs, const ModelParameters& params, const DerivedConstants& c);

}  // namespace blowup
