#include "blowup/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "blowup/intermediate.hpp"
#include "blowup/similarity.hpp"

namespace blowup {

double PreparedDataSpec::s0() const { return std::abs(std::log(T)); }

void validate_prepared(const PreparedDataSpec& spec, const ModelParameters& params) {
    validate(params);
    if (!(spec.T > 0.0 && spec.T < 1.0))
        throw std::invalid_argument("prepared data requires T in (0, 1)");
    if (!(std::abs(spec.d0) <= 2.0))
        throw std::invalid_argument("prepared data requires |d0| <= 2");
    if (!spec.d1.empty() && spec.d1.size() != static_cast<size_t>(params.N))
        throw std::invalid_argument("d1 must be empty or carry one component per dimension");
    for (double v : spec.d1)
        if (!(std::abs(v) <= 2.0))
            throw std::invalid_argument("prepared data requires |d1| components <= 2");
    if (!(spec.A >= 1.0)) throw std::invalid_argument("amplitude parameter A must be >= 1");
    if (!(spec.K0 > 0.0)) throw std::invalid_argument("K0 must be positive");
    if (spec.s0() < spec.s0_floor) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "s0 = |ln T| = %.6g is below the configured floor %.6g; "
                      "lower s0_floor deliberately for desk-scale runs",
                      spec.s0(), spec.s0_floor);
        throw std::invalid_argument(buf);
    }
}

double prepared_value(const PreparedDataSpec& spec, const ModelParameters& params,
                      const DerivedConstants& c, double x) {
    const double inv = 1.0 / (params.p - 1.0);
    const double s0 = spec.s0();
    const double root_T = std::sqrt(spec.T);
    const double chi1 = chi0(std::abs(x) / (spec.K0 * root_T * s0));
    // outside the chi1 support only the stitched outer backbone survives
    if (chi1 == 0.0) return H_star(std::abs(x), params, c);
    const double amp =
        std::pow(spec.T, -inv) * std::pow(c.theta_inf * std::pow(s0, -c.beta), -inv);
    const double y = x / root_T;
    ProfileSpec prof(params, c);
    const double z0 = x / std::sqrt(spec.T * s0);
    const double modes = spec.d0 * std::pow(spec.A, 3) / std::pow(s0, 1.5) +
                         spec.A / (s0 * s0) * spec.d1_axis() * y;
    const double bump = modes * chi0(32.0 * std::abs(z0) / spec.K0);
    double value = amp * (profile_phi(prof, y, s0) + bump) * chi1;
    if (chi1 < 1.0) value += H_star(std::abs(x), params, c) * (1.0 - chi1);
    return value;
}

RadialField construct_initial_data(const PreparedDataSpec& spec, const ModelParameters& params,
                                   const DerivedConstants& c, GridPtr grid) {
    validate_prepared(spec, params);
    if (!grid || grid->nodes.size() < 2)
        throw std::invalid_argument("construct_initial_data requires a grid");
    const double core = std::sqrt(spec.T * spec.s0());
    const double h1 = grid->nodes[1] - grid->nodes[0];
    if (h1 > 0.25 * core) {
        char buf[192];
        std::snprintf(buf, sizeof buf,
                      "grid spacing %.3g at the origin cannot resolve the core scale "
                      "sqrt(T |ln T|) = %.3g; need spacing <= %.3g",
                      h1, core, 0.25 * core);
        throw std::invalid_argument(buf);
    }
    return make_field(grid, [&](double rho) { return prepared_value(spec, params, c, rho); });
}

namespace {

// ball integral of a radial integrand, done as composite Simpson in ln(rho)
// between structural breakpoints: int f N omega_N rho^{N-1} drho
double radial_log_integral(const std::function<double(double)>& f, int N, double lo, double hi,
                           std::vector<double> breaks, int panels_per_decade) {
    std::sort(breaks.begin(), breaks.end());
    std::vector<double> cuts{lo};
    for (double b : breaks)
        if (b > cuts.back() * (1.0 + 1e-12) && b < hi * (1.0 - 1e-12)) cuts.push_back(b);
    cuts.push_back(hi);
    const double wN = unit_ball_volume(N);
    auto g = [&](double t) { return f(std::exp(t)) * std::exp(N * t); };
    double total = 0.0;
    for (size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double ta = std::log(cuts[k]);
        const double tb = std::log(cuts[k + 1]);
        const int panels = std::max(
            4, static_cast<int>(std::ceil((tb - ta) / std::log(10.0) * panels_per_decade)));
        const double h = (tb - ta) / panels;
        double acc = g(ta) + g(tb);
        for (int i = 1; i < panels; ++i) acc += 2.0 * g(ta + i * h);
        for (int i = 0; i < panels; ++i) acc += 4.0 * g(ta + (i + 0.5) * h);
        total += N * wN * acc * h / 6.0;
    }
    return total;
}

// signed-axis sample ladder: fine over the mode bump and the Hermite window,
// medium across the chi cut, fine again across the chi1 bridge
std::vector<double> axis_ladder(double s0, double data_K0, double cut_K0) {
    const double w_bump = data_K0 * std::sqrt(s0) / 32.0;
    const double y_cut = cut_K0 * std::sqrt(s0);
    const double y_chi1 = data_K0 * s0;
    const double Ly = 2.6 * y_chi1;
    std::vector<double> ypos{0.0};
    double y = 0.0;
    while (y < Ly) {
        double h = Ly / 500.0;
        if (y < 3.0 * w_bump + 2.0) h = std::min(h, w_bump / 30.0);
        if (y < 35.0) h = std::min(h, 0.08);
        if (y > 0.8 * y_cut && y < 2.3 * y_cut) h = std::min(h, y_cut / 60.0);
        if (y > 0.85 * y_chi1 && y < 2.2 * y_chi1) h = std::min(h, y_chi1 / 400.0);
        y += h;
        ypos.push_back(std::min(y, Ly));
    }
    return ypos;
}

}  // namespace

S0Report verify_in_S0(const PreparedDataSpec& spec, const ModelParameters& params,
                      const DerivedConstants& c, const ShrinkingSetConfig& cfg) {
    validate_prepared(spec, params);
    validate(cfg);
    const double inv = 1.0 / (params.p - 1.0);
    const double s0 = spec.s0();
    const double root_T = std::sqrt(spec.T);
    const double R = params.domain_radius;

    S0Report rep;
    rep.theta0_predicted = c.theta_inf * std::pow(s0, -c.beta);

    auto u0 = [&](double x) { return prepared_value(spec, params, c, x); };

    // theta(0) by the module's own quadrature of the closed-form data; below
    // rho_min the data is constant to the quadrature tolerance
    const double core = std::sqrt(spec.T * s0);
    const double rho_min = 1e-3 * core;
    auto integrand = [&](double rho) { return std::pow(u0(rho), params.r); };
    const std::vector<double> breaks = {root_T,
                                        core,
                                        core * spec.K0 / 32.0,
                                        core * spec.K0 / 16.0,
                                        spec.K0 * root_T * s0,
                                        2.0 * spec.K0 * root_T * s0,
                                        0.25 * R,
                                        0.5 * R};
    double mass = radial_log_integral(integrand, params.N, rho_min, R, breaks, 80);
    mass += unit_ball_volume(params.N) * std::pow(rho_min, params.N) * integrand(0.0);
    rep.theta0 = std::pow(mass / params.domain_measure(), -params.gamma);
    rep.eps_correction = std::pow(rep.theta0 / rep.theta0_predicted, inv) - 1.0;

    // q(y, s0) on the signed axis; the d1 term is odd so no even extension
    const std::vector<double> ypos = axis_ladder(s0, spec.K0, cfg.K0);
    AxisSamples q;
    q.y.reserve(2 * ypos.size() - 1);
    q.v.reserve(2 * ypos.size() - 1);
    const double scale_W = std::pow(spec.T * rep.theta0, inv);
    ProfileSpec prof(params, c);
    auto q_at = [&](double y) {
        const double chi1 = chi1_of_y(y, s0, spec.K0);
        const double W = chi1 == 0.0 ? 0.0 : scale_W * chi1 * u0(y * root_T);
        return W - profile_phi(prof, y, s0);
    };
    for (size_t i = ypos.size(); i-- > 1;) {
        q.y.push_back(-ypos[i]);
        q.v.push_back(q_at(-ypos[i]));
    }
    for (double yp : ypos) {
        q.y.push_back(yp);
        q.v.push_back(q_at(yp));
    }

    const ModeDecomposition dec = decompose(q, s0, cfg.K0, params.N, 64);
    const double grad = grad_perp_weighted_sup(q, s0, cfg.K0, 64);
    rep.bulk = shrinking_set_check(dec, grad, cfg, BoundFlavor::initial);
    rep.q0 = dec.q0;
    rep.q1_axis = dec.q1_axis;
    rep.q2_axis = dec.q2_axis;
    rep.q_minus_weighted = weighted_cubic_sup(dec.q_minus);
    rep.grad_perp_weighted = grad;
    for (double v : dec.q_e.v) rep.q_e_sup = std::max(rep.q_e_sup, std::abs(v));
    rep.bulk_pass = rep.bulk.member;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (const ClauseVerdict& cl : rep.bulk.clauses) {
        const double margin = std::abs(cl.value) > 0.0
                                  ? cl.bound / std::abs(cl.value)
                                  : std::numeric_limits<double>::infinity();
        rep.min_margin = std::min(rep.min_margin, margin);
    }

    // intermediate-region clauses at physical time 0: tau0(x) = -t(x)/rho(x),
    // theta frozen at theta(0) for t <= 0; reported, not gated
    const double x_lo = region_boundary_x(spec.T, spec.K0);
    const double x_hi =
        std::min({cfg.epsilon0, 0.9 * 0.25 * spec.K0 * std::exp(-0.5), 0.999 * R});
    if (x_hi > x_lo) {
        const ThetaOfT theta_fn = [&](double) { return rep.theta0; };
        const int n_scan = 25;
        for (int i = 0; i < n_scan; ++i) {
            const double x = x_lo * std::pow(x_hi / x_lo, static_cast<double>(i) / (n_scan - 1));
            const double t_x = solve_t_of_x(x, spec.K0, spec.T);
            const double rho = spec.T - t_x;
            const double tau0 = std::max(0.0, -t_x / rho);
            const double u_hat = hat_U(x, tau0, theta_fn, params, c, spec.K0, spec.T);
            const double pref = std::pow(rho, inv) * std::pow(rep.theta0, inv);
            rep.p2_gap = std::max(rep.p2_gap, std::abs(pref * u0(x) - u_hat));
            const double dx = 1e-4 * x;
            const double grad_xi =
                pref * std::sqrt(rho) * (u0(x + dx) - u0(x - dx)) / (2.0 * dx);
            rep.p2_grad = std::max(
                rep.p2_grad, std::abs(grad_xi) * std::sqrt(std::abs(std::log(rho))));
        }
    }
    return rep;
}

std::string S0Report::text() const {
    char line[256];
    std::string out;
    std::snprintf(line, sizeof line, "theta(0) = %.9g  predicted = %.9g  eps = %+.3e\n",
                  theta0, theta0_predicted, eps_correction);
    out += line;
    out += bulk.text();
    std::snprintf(line, sizeof line, "initial entry: %s  (min margin %.3g)\n",
                  bulk_pass ? "PASS" : "FAIL", min_margin);
    out += line;
    std::snprintf(line, sizeof line,
                  "intermediate region, reported: max|U - Uhat| = %.4g  "
                  "sup sqrt(|ln rho|)|grad_xi U| = %.4g\n",
                  p2_gap, p2_grad);
    out += line;
    return out;
}

}  // namespace blowup
