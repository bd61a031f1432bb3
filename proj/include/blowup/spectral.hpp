#pragma once

#include <functional>
#include <string>
#include <vector>

#include "blowup/params.hpp"

namespace blowup {

// Gauss-Hermite rule for the weight e^{-t^2} on the real line.
struct GaussHermiteRule {
    int order = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussHermiteRule gauss_hermite(int order);

// h_0 = 1, h_1 = y, h_{m+1} = y h_m - 2 m h_{m-1}; h_2 = y^2 - 2, h_3 = y^3 - 6y.
double hermite_h(int m, double y);
// int h_m^2 rho dy = 2^m m! under rho = e^{-y^2/4}/sqrt(4 pi)
double hermite_norm_sq(int m);

// int f rho dy via the e^{-t^2} rule under the substitution y = 2t
double gauss_rho_integral(const std::function<double(double)>& f, int quad_order = 64);
// P_m(f) = int f h_m rho dy / ||h_m||^2
double project_fn(const std::function<double(double)>& f, int m, int quad_order = 64);

struct AxisSamples {
    std::vector<double> y;  // strictly increasing, signed axis
    std::vector<double> v;
};

AxisSamples even_extension(const std::vector<double>& y_radial, const std::vector<double>& v);
// clamped piecewise-linear evaluation
double axis_interp(const AxisSamples& f, double y);
double project(const AxisSamples& f, int m, int quad_order = 64);

// One-dimensional axis reduction of the N-dimensional decomposition: radial
// inputs are even extensions, q1/q2 expose the axis value in slot 0 / (0,0).
struct ModeDecomposition {
    double s = 1.0;
    double K0 = 4.0;
    int N = 1;
    double q0 = 0.0;
    double q1_axis = 0.0;
    double q2_axis = 0.0;
    std::vector<double> q1;  // (q1_axis, 0, ...)
    std::vector<double> q2;  // N x N row-major, diag(q2_axis, 0, ..., 0)
    AxisSamples input;
    AxisSamples r_b;      // chi q with chi = chi0(|y|/(K0 sqrt(s)))
    AxisSamples q_minus;  // r_b minus its degree-<=2 Hermite part
    AxisSamples q_perp;   // r_b minus its degree-<=1 Hermite part
    AxisSamples q_e;      // (1 - chi) q
};

ModeDecomposition decompose(const AxisSamples& q, double s, double K0, int N,
                            int quad_order = 64);
// q0 h0 + q1 h1 + q2 h2 + q_minus + q_e on the input grid; identical to the
// input by construction of q_minus
std::vector<double> reconstruct(const ModeDecomposition& dec);

// sup over samples of |f|/(1+|y|^3)
double weighted_cubic_sup(const AxisSamples& f);
// centered-difference gradient of q, cut by chi, minus its degree-<=1 part,
// measured in the same (1+|y|^3)-weighted sup
double grad_perp_weighted_sup(const AxisSamples& q, double s, double K0, int quad_order = 64);

struct ShrinkingSetConfig {
    double A = 2.0;
    double K0 = 4.0;
    double epsilon0 = 0.05;
    double alpha0 = 0.5;
    double delta0 = 0.5;
    double C0 = 10.0;
    double eta0 = 0.1;
};
void validate(const ShrinkingSetConfig& cfg);

// evolution: the shrinking-set bounds; initial: the stricter entry bounds
// (|q2| <= 1/s^2, |q_-| <= (1+|y|^3)/s^2, grad bound likewise, ||q_e|| <= 1/sqrt(s)).
enum class BoundFlavor { evolution, initial };

struct ClauseVerdict {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct ShrinkingSetReport {
    std::vector<ClauseVerdict> clauses;
    bool member = false;
    double lemma_sup_bound = 0.0;    // C0 A^7 / sqrt(s), reported
    double lemma_cubic_coef = 0.0;   // C0 A^7 / s^{3/2}, against (1+|y|^3), reported
    std::string text() const;
};

ShrinkingSetReport shrinking_set_check(const ModeDecomposition& dec, double grad_perp_bound,
                                       const ShrinkingSetConfig& cfg,
                                       BoundFlavor flavor = BoundFlavor::evolution);

}  // namespace blowup
