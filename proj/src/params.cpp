#include "blowup/params.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace blowup {

namespace {

constexpr double kPi = 3.14159265358979323846;

double int_pow(double x, int n) {
    double acc = 1.0;
    for (int i = 0; i < n; ++i) acc *= x;
    return acc;
}

}  // namespace

double unit_ball_volume(int N) {
    if (N < 1) throw std::invalid_argument("unit_ball_volume: N must be >= 1");
    // omega_N = pi^{N/2} / Gamma(N/2 + 1)
    return std::pow(kPi, 0.5 * N) / std::tgamma(0.5 * N + 1.0);
}

double critical_r(double p, int N) { return 0.5 * N * (p - 1.0); }

double ModelParameters::domain_measure() const {
    return unit_ball_volume(N) * int_pow(domain_radius, N);
}

void validate(const ModelParameters& params) {
    if (!(params.p > 1.0)) throw std::invalid_argument("params: p must be > 1");
    if (!(params.r > 0.0)) throw std::invalid_argument("params: r must be > 0");
    if (!(params.gamma >= 0.0)) throw std::invalid_argument("params: gamma must be >= 0");
    if (params.N < 1) throw std::invalid_argument("params: N must be >= 1");
    if (!(params.domain_radius > 0.0))
        throw std::invalid_argument("params: domain_radius must be > 0");
    if (params.gamma > 0.0 && !(params.gamma * params.N / 2.0 < 1.0))
        throw std::invalid_argument("params: gamma*N/2 must be < 1");
    if (params.critical) {
        const double rc = critical_r(params.p, params.N);
        if (std::abs(params.r - rc) > 1e-12 * std::max(1.0, rc))
            throw std::invalid_argument("params: critical flag requires r = N(p-1)/2");
        if (!(params.p >= 3.0))
            throw std::invalid_argument("params: critical flag requires p >= 3");
    }
}

std::vector<std::string> admissibility_warnings(const ModelParameters& params,
                                                double gamma_warn) {
    std::vector<std::string> notes;
    if (params.gamma > gamma_warn) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "gamma = %g exceeds the smallness threshold %g; the constructed "
                      "regime is only established for small gamma",
                      params.gamma, gamma_warn);
        notes.emplace_back(buf);
    }
    if (params.gamma > 0.0 && !params.critical) {
        const double rc = critical_r(params.p, params.N);
        if (std::abs(params.r - rc) > 1e-12 * std::max(1.0, rc))
            notes.emplace_back(
                "gamma > 0 with non-critical r: derived constants assume the critical "
                "balance r = N(p-1)/2");
    }
    return notes;
}

double bubble_integral(double b, double p, int N, int k) {
    if (!(b > 0.0) || !(p > 1.0) || N < 1 || k < 1)
        throw std::invalid_argument("bubble_integral: arguments out of range");
    double I = 1.0 / ((p - 1.0) * N * std::pow(b, 0.5 * N));
    for (int j = 1; j < k; ++j)
        I *= (1.0 / (p - 1.0)) * (static_cast<double>(j) / (j + 0.5 * N));
    return I;
}

namespace {

struct BubbleIntegrand {
    double b, p;
    int N, k;
    double operator()(double xi) const {
        return std::pow(p - 1.0 + b * xi * xi, -(k + 0.5 * N)) * int_pow(xi, N - 1);
    }
};

double simpson(const BubbleIntegrand& f, double a, double c) {
    return (c - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + c)) + f(c));
}

double adaptive_simpson(const BubbleIntegrand& f, double a, double c, double whole,
                        double eps, int depth, long& budget) {
    if (--budget < 0)
        throw std::runtime_error("bubble_integral_quadrature: refinement budget exhausted");
    const double m = 0.5 * (a + c);
    const double left = simpson(f, a, m);
    const double right = simpson(f, m, c);
    const double delta = left + right - whole;
    // the split correction cannot resolve below rounding of the panel values
    const double floor = 8e-15 * (std::abs(left) + std::abs(right));
    if (std::abs(delta) <= 15.0 * eps || std::abs(delta) <= floor || m <= a || c <= m)
        return left + right + delta / 15.0;
    if (depth <= 0)
        throw std::runtime_error("bubble_integral_quadrature: max depth reached");
    return adaptive_simpson(f, a, m, left, 0.5 * eps, depth - 1, budget) +
           adaptive_simpson(f, m, c, right, 0.5 * eps, depth - 1, budget);
}

}  // namespace

double bubble_integral_quadrature(double b, double p, int N, int k, double tol) {
    if (!(tol > 0.0) || !(tol <= 1e-4))
        throw std::invalid_argument("bubble_integral_quadrature: tol must be in (0, 1e-4]");
    if (!(b > 0.0) || !(p > 1.0) || N < 1 || k < 1)
        throw std::invalid_argument("bubble_integral_quadrature: arguments out of range");

    const BubbleIntegrand f{b, p, N, k};
    const double closed_scale = bubble_integral(b, p, N, k);  // sets the relative scale only

    // Truncation point: the integrand is an explicit power law past the bubble
    // core, with two-term tail expansion
    //   int_X^inf ~ b^{-k-N/2} [ X^{-2k}/(2k) - (k+N/2)(p-1)/b * X^{-2k-2}/(2k+2) ].
    double X = std::max(1.0, 8.0 * std::sqrt((p - 1.0) / b));
    const double pref = std::pow(b, -(k + 0.5 * N));
    double tail = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double t1 = pref * std::pow(X, -2.0 * k) / (2.0 * k);
        const double t2 =
            -pref * (k + 0.5 * N) * (p - 1.0) / b * std::pow(X, -2.0 * k - 2.0) / (2.0 * k + 2.0);
        const double c2 = (k + 0.5 * N) * (k + 0.5 * N + 1.0) / 2.0;
        const double t3 = pref * c2 * int_pow((p - 1.0) / b, 2) * std::pow(X, -2.0 * k - 4.0) /
                          (2.0 * k + 4.0);
        if (f(X) < tol * 1e-2 * closed_scale && t3 < 0.25 * tol * closed_scale) {
            tail = t1 + t2;
            break;
        }
        X *= 2.0;
        if (it == 199)
            throw std::runtime_error("bubble_integral_quadrature: truncation point not found");
    }

    long budget = 4'000'000;
    const double eps_abs = 0.5 * tol * closed_scale;
    const double body = adaptive_simpson(f, 0.0, X, simpson(f, 0.0, X), eps_abs, 60, budget);
    return body + tail;
}

DerivedConstants derive_constants(const ModelParameters& params) {
    validate(params);
    const double p = params.p;
    const double g = params.gamma;
    const int N = params.N;

    DerivedConstants c{};
    c.kappa = std::pow(p - 1.0, -1.0 / (p - 1.0));
    c.beta = (0.5 * N + 1.0) * g / (1.0 - 0.5 * g * N);
    c.b_coef = (p - 1.0) * (p - 1.0) * (1.0 + c.beta) / (4.0 * p);
    c.nu = c.beta / (p - 1.0);
    c.a_coef = 2.0 * c.b_coef * N * c.kappa / ((p - 1.0) * (p - 1.0)) +
               c.kappa * c.beta / (p - 1.0);

    const double measure = params.domain_measure();
    const double I1 = bubble_integral(c.b_coef, p, N, 1);
    if (g == 0.0) {
        c.theta_inf = 1.0;
    } else {
        // Closed reformulation of theta_inf in the critical regime.
        const double expo = g / (1.0 - 0.5 * g * N);
        c.theta_inf =
            std::pow(measure * (1.0 + 0.5 * N) / (1.0 - 0.5 * g * N) * 2.0 *
                         std::pow(c.b_coef, 0.5 * N),
                     expo);
        // Cross-check against the bubble-integral form
        //   theta_inf = (|Omega| beta / (gamma r I_1))^{gamma/(1 - gamma N/2)}.
        const double rc = critical_r(p, N);
        const double integral_form = std::pow(measure * c.beta / (g * rc * I1), expo);
        if (std::abs(integral_form - c.theta_inf) > 1e-10 * c.theta_inf)
            throw std::runtime_error(
                "derive_constants: closed and integral theta_inf forms disagree");
    }
    c.B_const = std::pow(c.theta_inf, -(0.5 * N + 1.0)) * params.r *
                std::pow(measure, g) * I1;
    return c;
}

std::pair<double, double> fixed_point_residual(const DerivedConstants& constants,
                                               const ModelParameters& params) {
    const double g = params.gamma;
    if (g == 0.0) return {0.0, 0.0};
    const double beta = constants.beta;
    const double E = 1.0 + 0.5 * params.N + beta * (params.p - 1.0 + params.r) / (params.p - 1.0);
    const double res1 = std::abs(beta - g * E / (1.0 + g)) / std::abs(beta);
    const double theta_fp = std::pow(params.domain_measure(), g) *
                            std::pow((1.0 + g) * constants.B_const / E, -g / (1.0 + g));
    const double res2 = std::abs(constants.theta_inf - theta_fp) / constants.theta_inf;
    return {res1, res2};
}

std::string format_constants(const ModelParameters& params,
                             const DerivedConstants& constants) {
    char buf[256];
    std::string out;
    auto put = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%s = %.17g\n", key, v);
        out += buf;
    };
    put("p", params.p);
    put("r", params.r);
    put("gamma", params.gamma);
    std::snprintf(buf, sizeof buf, "N = %d\n", params.N);
    out += buf;
    put("domain_radius", params.domain_radius);
    put("domain_measure", params.domain_measure());
    put("kappa", constants.kappa);
    put("beta", constants.beta);
    put("b", constants.b_coef);
    put("nu", constants.nu);
    put("a", constants.a_coef);
    put("theta_inf", constants.theta_inf);
    put("B", constants.B_const);
    return out;
}

}  // namespace blowup
