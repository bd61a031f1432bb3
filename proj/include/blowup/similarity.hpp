#pragma once

#include <string>
#include <vector>

#include "blowup/grid.hpp"
#include "blowup/params.hpp"

namespace blowup {

// Smooth plateau cutoff: 1 on [0,1], 0 on [2,inf), C-infinity monotone bridge
// built from g(t) = exp(-1/t) in between.
double chi0(double r);
double chi0_prime(double r);

struct ProfileSpec {
    double p;
    DerivedConstants c;
    ProfileSpec(const ModelParameters& params, const DerivedConstants& constants)
        : p(params.p), c(constants) {}
};

// phi0(z) = (p-1+b z^2)^{-1/(p-1)}; phi(y,s) = phi0(y/sqrt(s)) + a/s
double profile_phi0(const ProfileSpec& spec, double z);
double profile_phi0_prime(const ProfileSpec& spec, double z);
double profile_phi0_second(const ProfileSpec& spec, double z);
double profile_phi(const ProfileSpec& spec, double y, double s);

struct SimilarityFrame {
    double s = 0.0;      // -ln(T_est - t)
    double t = 0.0;
    double T_est = 0.0;
    double p = 3.0;      // copied from the model for inversion
    double K0 = 4.0;
    double theta_bar = 1.0;
    double theta_bar_slope = 0.0;  // d ln(theta)/ds, supplied by the caller (0 when unknown)
    std::vector<double> y_nodes;   // radial image of the x-grid, increasing from 0
    std::vector<double> W;         // (T-t)^{1/(p-1)} theta^{1/(p-1)} chi1 u
    std::vector<double> w_uncut;   // same renormalization without the chi1 factor
};

// chi1 in similarity variables is chi0(|y|/(K0 s)): plateau |y| <= K0 s.
double chi1_of_y(double y, double s, double K0);

SimilarityFrame to_similarity(const RadialField& u, double t, double T_est, double theta,
                              double K0, const ModelParameters& params,
                              double theta_slope = 0.0);

struct PhysicalReconstruction {
    double t = 0.0;
    RadialField u;    // on the x-grid implied by the frame's y-nodes
    int n_reliable;   // leading node count inside the chi1 plateau
};

PhysicalReconstruction from_similarity(const SimilarityFrame& frame, int N);

std::vector<double> compute_q(const SimilarityFrame& frame, const ProfileSpec& spec);

struct LinearizationTerms {
    std::vector<double> V, B, R, G;
};

// V = p(phi^{p-1} - 1/(p-1)); B = (q+phi)^p - phi^p - p phi^{p-1} q;
// R = -ds phi + Lap phi - y.grad phi/2 - phi/(p-1) + phi^p with phi derivatives
// in closed form; G = (theta_slope/(p-1) - e^{-s})(q+phi) + F~ where the cutoff
// commutator F~ uses finite differences of chi1 and of the uncut w.
LinearizationTerms eval_linearization_terms(const std::vector<double>& q,
                                            const SimilarityFrame& frame,
                                            const ProfileSpec& spec, int N);

// CSV (y, W, phi, q) with an s-stamped header
std::string frame_to_csv(const SimilarityFrame& frame, const ProfileSpec& spec);

}  // namespace blowup
