#include "blowup/similarity.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace blowup {

namespace {

double bump_g(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
double bump_g_prime(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

// x^p for field values; negative bases only make sense for integer p
double real_pow(double x, double p) {
    if (x >= 0.0) return std::pow(x, p);
    const double pr = std::round(p);
    if (p != pr) throw std::domain_error("real_pow: negative base with non-integer exponent");
    const double m = std::pow(-x, p);
    return std::fmod(pr, 2.0) == 0.0 ? m : -m;
}

// nonuniform centered first derivative on (y0,f0), (y1,f1), (y2,f2) at y1
double centered_d1(double hm, double hp, double f0, double f1, double f2) {
    return (f2 * hm * hm - f0 * hp * hp + f1 * (hp * hp - hm * hm)) /
           (hm * hp * (hm + hp));
}

double centered_d2(double hm, double hp, double f0, double f1, double f2) {
    return 2.0 * (f0 * hp + f2 * hm - f1 * (hm + hp)) / (hm * hp * (hm + hp));
}

}  // namespace

double chi0(double r) {
    if (r <= 1.0) return 1.0;
    if (r >= 2.0) return 0.0;
    const double g2 = bump_g(2.0 - r);
    const double g1 = bump_g(r - 1.0);
    return g2 / (g2 + g1);
}

double chi0_prime(double r) {
    if (r <= 1.0 || r >= 2.0) return 0.0;
    const double g2 = bump_g(2.0 - r);
    const double g1 = bump_g(r - 1.0);
    const double num = -bump_g_prime(2.0 - r) * g1 - g2 * bump_g_prime(r - 1.0);
    const double den = g2 + g1;
    return num / (den * den);
}

double profile_phi0(const ProfileSpec& spec, double z) {
    return std::pow(spec.p - 1.0 + spec.c.b_coef * z * z, -1.0 / (spec.p - 1.0));
}

double profile_phi0_prime(const ProfileSpec& spec, double z) {
    const double phi0 = profile_phi0(spec, z);
    return -2.0 * spec.c.b_coef * z * std::pow(phi0, spec.p) / (spec.p - 1.0);
}

double profile_phi0_second(const ProfileSpec& spec, double z) {
    const double phi0 = profile_phi0(spec, z);
    const double pm1 = spec.p - 1.0;
    const double b = spec.c.b_coef;
    return -2.0 * b * std::pow(phi0, spec.p) / pm1 +
           4.0 * spec.p * b * b * z * z * std::pow(phi0, 2.0 * spec.p - 1.0) / (pm1 * pm1);
}

double profile_phi(const ProfileSpec& spec, double y, double s) {
    if (s <= 0.0) throw std::invalid_argument("profile_phi: s must be > 0");
    return profile_phi0(spec, y / std::sqrt(s)) + spec.c.a_coef / s;
}

double chi1_of_y(double y, double s, double K0) {
    return chi0(std::abs(y) / (K0 * s));
}

SimilarityFrame to_similarity(const RadialField& u, double t, double T_est, double theta,
                              double K0, const ModelParameters& params, double theta_slope) {
    if (t >= T_est) throw std::invalid_argument("to_similarity: need t < T_est");
    if (theta <= 0.0) throw std::invalid_argument("to_similarity: need theta > 0");
    const double dtT = T_est - t;
    SimilarityFrame fr;
    fr.s = -std::log(dtT);
    fr.t = t;
    fr.T_est = T_est;
    fr.p = params.p;
    fr.K0 = K0;
    fr.theta_bar = theta;
    fr.theta_bar_slope = theta_slope;
    const double sqrt_dt = std::sqrt(dtT);
    const double scale =
        std::pow(dtT, 1.0 / (params.p - 1.0)) * std::pow(theta, 1.0 / (params.p - 1.0));
    const size_t n = u.grid->size();
    fr.y_nodes.resize(n);
    fr.W.resize(n);
    fr.w_uncut.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const double y = u.grid->nodes[i] / sqrt_dt;
        fr.y_nodes[i] = y;
        fr.w_uncut[i] = scale * u.values[i];
        fr.W[i] = chi1_of_y(y, fr.s, K0) * fr.w_uncut[i];
    }
    return fr;
}

PhysicalReconstruction from_similarity(const SimilarityFrame& frame, int N) {
    const double dtT = std::exp(-frame.s);
    const double sqrt_dt = std::sqrt(dtT);
    const double scale =
        std::pow(dtT, 1.0 / (frame.p - 1.0)) * std::pow(frame.theta_bar, 1.0 / (frame.p - 1.0));
    std::vector<double> x(frame.y_nodes.size());
    for (size_t i = 0; i < x.size(); ++i) x[i] = frame.y_nodes[i] * sqrt_dt;
    const auto grid = grid_from_nodes(x, N);
    RadialField u(grid);
    int n_reliable = 0;
    bool on_plateau = true;
    for (size_t i = 0; i < x.size(); ++i) {
        const double chi = chi1_of_y(frame.y_nodes[i], frame.s, frame.K0);
        u.values[i] = chi > 1e-300 ? frame.W[i] / (scale * chi) : 0.0;
        on_plateau = on_plateau && chi == 1.0;
        if (on_plateau) ++n_reliable;
    }
    return PhysicalReconstruction{frame.t, std::move(u), n_reliable};
}

std::vector<double> compute_q(const SimilarityFrame& frame, const ProfileSpec& spec) {
    std::vector<double> q(frame.y_nodes.size());
    for (size_t i = 0; i < q.size(); ++i)
        q[i] = frame.W[i] - profile_phi(spec, frame.y_nodes[i], frame.s);
    return q;
}

LinearizationTerms eval_linearization_terms(const std::vector<double>& q,
                                            const SimilarityFrame& frame,
                                            const ProfileSpec& spec, int N) {
    const size_t n = frame.y_nodes.size();
    if (q.size() != n)
        throw std::invalid_argument("eval_linearization_terms: q size mismatch");
    if (n < 3)
        throw std::invalid_argument("eval_linearization_terms: need at least 3 nodes");
    const double s = frame.s;
    const double p = spec.p;
    const double pm1 = p - 1.0;
    const double b = spec.c.b_coef;
    const double a = spec.c.a_coef;
    const double sqrt_s = std::sqrt(s);
    LinearizationTerms out;
    out.V.resize(n);
    out.B.resize(n);
    out.R.resize(n);
    out.G.resize(n);

    // chi1 and the uncut w differentiated on the y grid for the commutator F~
    std::vector<double> chi(n), dchi(n), d2chi(n), dw(n);
    for (size_t i = 0; i < n; ++i) chi[i] = chi1_of_y(frame.y_nodes[i], s, frame.K0);
    const auto& y = frame.y_nodes;
    const auto& w = frame.w_uncut;
    for (size_t i = 1; i + 1 < n; ++i) {
        const double hm = y[i] - y[i - 1];
        const double hp = y[i + 1] - y[i];
        dchi[i] = centered_d1(hm, hp, chi[i - 1], chi[i], chi[i + 1]);
        d2chi[i] = centered_d2(hm, hp, chi[i - 1], chi[i], chi[i + 1]);
        dw[i] = centered_d1(hm, hp, w[i - 1], w[i], w[i + 1]);
    }
    // radial symmetry at the origin, flat continuation at the outer edge
    const double h0 = y[1] - y[0];
    dchi[0] = 0.0;
    dw[0] = 0.0;
    d2chi[0] = 2.0 * (chi[1] - chi[0]) / (h0 * h0);
    const double hl = y[n - 1] - y[n - 2];
    dchi[n - 1] = (chi[n - 1] - chi[n - 2]) / hl;
    dw[n - 1] = (w[n - 1] - w[n - 2]) / hl;
    d2chi[n - 1] = 2.0 * (chi[n - 2] - chi[n - 1]) / (hl * hl);

    for (size_t i = 0; i < n; ++i) {
        const double z = y[i] / sqrt_s;
        const double phi0 = profile_phi0(spec, z);
        const double phi0p = profile_phi0_prime(spec, z);
        const double phi0pp = profile_phi0_second(spec, z);
        const double phi = phi0 + a / s;
        const double phi_pm1 = real_pow(phi, pm1);
        out.V[i] = p * (phi_pm1 - 1.0 / pm1);
        out.B[i] = real_pow(q[i] + phi, p) - phi_pm1 * phi - p * phi_pm1 * q[i];
        // phi0'(z)/z = -2 b phi0^p/(p-1) for every z, including the origin limit
        const double phi0p_over_z = -2.0 * b * real_pow(phi0, p) / pm1;
        const double lap_phi = (phi0pp + (N - 1) * phi0p_over_z) / s;
        const double ds_phi = -z * phi0p / (2.0 * s) - a / (s * s);
        out.R[i] = -ds_phi + lap_phi - z * phi0p / 2.0 - phi / pm1 + real_pow(phi, p);
        // Delta chi1 = chi1'' + (N-1)/y chi1'; at the origin both contributions vanish
        const double lap_chi =
            d2chi[i] + (y[i] > 0.0 ? (N - 1) * dchi[i] / y[i] : (N - 1) * d2chi[i]);
        const double f_tilde = -w[i] * lap_chi - 2.0 * dchi[i] * dw[i] +
                               real_pow(w[i], p) * (chi[i] - real_pow(chi[i], p));
        out.G[i] = (frame.theta_bar_slope / pm1 - std::exp(-s)) * (q[i] + phi) + f_tilde;
    }
    return out;
}

std::string frame_to_csv(const SimilarityFrame& frame, const ProfileSpec& spec) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "# similarity frame: s=%.17g t=%.17g T_est=%.17g theta_bar=%.17g\n",
                  frame.s, frame.t, frame.T_est, frame.theta_bar);
    out += buf;
    out += "y,W,phi,q\n";
    for (size_t i = 0; i < frame.y_nodes.size(); ++i) {
        const double phi = profile_phi(spec, frame.y_nodes[i], frame.s);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", frame.y_nodes[i],
                      frame.W[i], phi, frame.W[i] - phi);
        out += buf;
    }
    return out;
}

}  // namespace blowup
