#pragma once

#include <string>
#include <utility>
#include <vector>

namespace blowup {

// Model parameters of the nonlocal reaction-diffusion problem
//   u_t = Laplace(u) - u + u^p / (avg_Omega u^r)^gamma
// posed on the N-ball of radius R with homogeneous Neumann data.
struct ModelParameters {
    double p = 3.0;       // nonlinearity exponent, > 1
    double r = 1.0;       // norm exponent inside the average, > 0
    double gamma = 0.0;   // nonlocal exponent, >= 0 and gamma*N/2 < 1
    int N = 1;            // space dimension, >= 1
    double domain_radius = 1.0;
    // When set, the critical balance r = N(p-1)/2 and p >= 3 are enforced.
    bool critical = false;

    double domain_measure() const;  // omega_N * R^N
};

// Volume of the unit N-ball (N=1 gives 2, the interval convention).
double unit_ball_volume(int N);

// Critical norm exponent N(p-1)/2 for the given (p, N).
double critical_r(double p, int N);

// Throws std::invalid_argument when a type invariant is violated.
void validate(const ModelParameters& params);

// Non-fatal admissibility notes. The theory needs gamma small without
// quantifying it; gamma_warn is the configured reporting threshold.
std::vector<std::string> admissibility_warnings(const ModelParameters& params,
                                                double gamma_warn = 0.05);

// Constants of the constructed blowup solution. All formulas assume the
// critical balance r = N(p-1)/2 whenever gamma > 0.
struct DerivedConstants {
    double kappa;      // (p-1)^{-1/(p-1)}, the constant-in-space blowup amplitude
    double beta;       // (N/2+1) gamma / (1 - gamma N/2), log-decay exponent of theta
    double b_coef;     // (p-1)^2 (1+beta) / (4p), profile curvature
    double nu;         // beta/(p-1), log-correction exponent of the blowup speed
    double a_coef;     // 2 b N kappa/(p-1)^2 + kappa beta/(p-1), profile shift
    double theta_inf;  // limit factor in theta(t) ~ theta_inf |ln(T-t)|^{-beta}
    double B_const;    // theta_inf^{-(N/2+1)} r |Omega|^gamma I_{b,p,N,1}
};

// Populates every constant; theta_inf is computed in closed form and
// cross-checked against the bubble-integral formulation to 1e-10 relative.
// Throws std::invalid_argument on invalid parameters.
DerivedConstants derive_constants(const ModelParameters& params);

// Closed-form bubble integral I_{b,p,N,k} = int_0^inf (p-1+b xi^2)^{-k-N/2} xi^{N-1} dxi
// through the recursion I_1 = 1/((p-1) N b^{N/2}), I_{k+1} = k I_k /((p-1)(k+N/2)).
double bubble_integral(double b, double p, int N, int k);

// Independent adaptive-quadrature evaluation of the same integral with
// relative truncation error bounded by tol (tail handled analytically).
// Throws std::runtime_error if the refinement budget is exhausted.
double bubble_integral_quadrature(double b, double p, int N, int k, double tol);

// Relative residuals of the (beta, theta_inf) fixed-point system. Both are
// zero (by convention) at gamma = 0 where the exponent degenerates.
std::pair<double, double> fixed_point_residual(const DerivedConstants& constants,
                                               const ModelParameters& params);

// Flat key = value block, one constant per line, stable order.
std::string format_constants(const ModelParameters& params,
                             const DerivedConstants& constants);

}  // namespace blowup
