#include "blowup/intermediate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace blowup {

namespace {

// theta(t) extended to t <= 0 by its initial value
double theta_clamped(const ThetaOfT& theta, double t) { return theta(std::max(t, 0.0)); }

double theta_series_at(const TrajectoryRecord& traj, double t) {
    const auto& ts = traj.times;
    if (ts.empty()) throw std::invalid_argument("rescaled_U: trajectory has no samples");
    if (t <= ts.front()) return traj.theta_series.front();
    if (t >= ts.back()) return traj.theta_series.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const size_t i = static_cast<size_t>(it - ts.begin());
    const double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    return (1.0 - w) * traj.theta_series[i - 1] + w * traj.theta_series[i];
}

}  // namespace

double region_boundary_x(double rho, double K0) {
    if (rho <= 0.0) throw std::invalid_argument("region_boundary_x: rho must be > 0");
    return 0.25 * K0 * std::sqrt(rho * std::abs(std::log(rho)));
}

double solve_t_of_x(double x_abs, double K0, double T) {
    if (x_abs <= 0.0) throw std::invalid_argument("solve_t_of_x: need |x| > 0");
    if (K0 <= 0.0) throw std::invalid_argument("solve_t_of_x: need K0 > 0");
    // rho |ln rho| is increasing only below 1/e, peaking at 1/e there
    const double m = std::pow(4.0 * x_abs / K0, 2);
    const double rho_top = std::exp(-1.0);
    if (m >= rho_top) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "solve_t_of_x: |x|=%.6g exceeds the monotonicity window (max %.6g)",
                      x_abs, 0.25 * K0 * std::sqrt(rho_top));
        throw std::invalid_argument(buf);
    }
    const auto g = [](double rho) { return -rho * std::log(rho); };
    // root lies below m since g(rho) > rho there
    double lo = m / (1.0 - std::log(m));
    while (g(lo) > m) lo *= 0.5;
    double hi = std::min(m, rho_top);
    double rho = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = g(rho) - m;
        if (std::abs(f) <= 1e-13 * m) break;
        if (f > 0.0)
            hi = rho;
        else
            lo = rho;
        const double der = -std::log(rho) - 1.0;
        double next = der > 0.0 ? rho - f / der : 0.5 * (lo + hi);
        if (next <= lo || next >= hi) next = 0.5 * (lo + hi);
        rho = next;
    }
    return T - rho;
}

double hat_U(double x_abs, double tau, const ThetaOfT& theta, const ModelParameters& params,
             const DerivedConstants& c, double K0, double T, int quad_panels) {
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("hat_U: need tau in [0, 1]");
    if (quad_panels < 1) throw std::invalid_argument("hat_U: need quad_panels >= 1");
    const double t_x = solve_t_of_x(x_abs, K0, T);
    const double rho = T - t_x;
    const double theta_x = theta_clamped(theta, t_x);
    if (theta_x <= 0.0) throw std::invalid_argument("hat_U: theta(t(x)) must be > 0");

    // Simpson integral of min(theta~(tau')/theta(t(x)), 1) over [0, tau]
    double integral = 0.0;
    if (tau > 0.0) {
        const auto integrand = [&](double taup) {
            const double ratio = theta_clamped(theta, taup * rho + t_x) / theta_x;
            return std::min(ratio, 1.0);
        };
        const double h = tau / quad_panels;
        double acc = integrand(0.0) + integrand(tau);
        for (int k = 1; k < quad_panels; ++k) acc += 2.0 * integrand(k * h);
        for (int k = 0; k < quad_panels; ++k) acc += 4.0 * integrand((k + 0.5) * h);
        integral = acc * h / 6.0;
    }
    const double bracket =
        (params.p - 1.0) * (1.0 - integral) + c.b_coef * K0 * K0 / 16.0;
    if (bracket <= 0.0) throw std::logic_error("hat_U: bracket argument not positive");
    return std::pow(bracket, -1.0 / (params.p - 1.0));
}

double rescaled_U(double x_abs, double xi, double tau, const TrajectoryRecord& traj,
                  const ModelParameters& params, double K0, double T) {
    if (traj.snapshots.empty())
        throw std::invalid_argument("rescaled_U: trajectory has no snapshots");
    const double t_x = solve_t_of_x(x_abs, K0, T);
    const double rho = T - t_x;
    const double theta_x = theta_series_at(traj, std::max(t_x, 0.0));

    const double X = std::abs(x_abs + xi * std::sqrt(rho));
    double t_q = t_x + tau * rho;
    const double t_lo = traj.snapshots.front().t;
    const double t_hi = traj.snapshots.back().t;
    const double tol = 1e-9 * std::max(1.0, std::abs(t_q));
    if (t_q < t_lo - tol || t_q > t_hi + tol) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "rescaled_U: query time %.9g outside stored snapshot range [%.9g, %.9g]",
                      t_q, t_lo, t_hi);
        throw std::runtime_error(buf);
    }
    t_q = std::clamp(t_q, t_lo, t_hi);

    double value;
    if (traj.snapshots.size() == 1) {
        value = evaluate(traj.snapshots.front().u, X);
    } else {
        size_t i = 1;
        while (i + 1 < traj.snapshots.size() && traj.snapshots[i].t < t_q) ++i;
        const auto& a = traj.snapshots[i - 1];
        const auto& b = traj.snapshots[i];
        const double w = (t_q - a.t) / (b.t - a.t);
        value = (1.0 - w) * evaluate(a.u, X) + w * evaluate(b.u, X);
    }
    const double inv = 1.0 / (params.p - 1.0);
    return std::pow(rho, inv) * std::pow(theta_x, inv) * value;
}

double H_star(double x_abs, const ModelParameters& params, const DerivedConstants& c) {
    if (x_abs <= 0.0) throw std::invalid_argument("H_star: need |x| > 0");
    const double R = params.domain_radius;
    // the core formula needs |ln|x|| > 0 throughout the blend, hence R/2 < 1
    if (R >= 2.0)
        throw std::invalid_argument("H_star: domain radius must be < 2 for the log core");
    const double x_core = R / 4.0;
    const double x_flat = R / 2.0;
    if (x_abs >= x_flat) return 1.0;

    const double inv = 1.0 / (params.p - 1.0);
    const double L = std::abs(std::log(x_abs));
    const double core = std::pow(c.theta_inf, -inv) *
                        std::pow(x_abs * x_abs / L, -inv) *
                        std::pow(2.0 * L, c.beta * inv);
    if (x_abs <= x_core) return core;
    // C1 blend of the log of the profile down to ln(1) = 0 across the annulus
    const double lam = (std::log(x_abs) - std::log(x_core)) /
                       (std::log(x_flat) - std::log(x_core));
    const double sigma = lam * lam * (3.0 - 2.0 * lam);
    return std::pow(core, 1.0 - sigma);
}

double u_star(double x_abs, const ModelParameters& params, const DerivedConstants& c) {
    if (x_abs <= 0.0) throw std::invalid_argument("u_star: need |x| > 0");
    const double inv = 1.0 / (params.p - 1.0);
    const double L = std::abs(std::log(x_abs));
    return std::pow(c.theta_inf, -inv) *
           std::pow(c.b_coef * x_abs * x_abs / (2.0 * L), -inv) *
           std::pow(2.0 * L, c.nu);
}

}  // namespace blowup
