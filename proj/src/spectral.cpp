#include "blowup/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "blowup/similarity.hpp"

namespace blowup {

namespace {

constexpr double pi = 3.14159265358979323846;

// orthonormal physicists' Hermite recurrence; returns (H~_n(z), H~_{n-1}(z))
std::pair<double, double> hermite_orthonormal(int n, double z) {
    double p1 = std::pow(pi, -0.25);
    double p2 = 0.0;
    for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
    }
    return {p1, p2};
}

}  // namespace

GaussHermiteRule gauss_hermite(int order) {
    if (order < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
    GaussHermiteRule rule;
    rule.order = order;
    rule.nodes.assign(order, 0.0);
    rule.weights.assign(order, 0.0);
    const int half = (order + 1) / 2;
    std::vector<double> roots(half, 0.0);
    double z = 0.0;
    for (int i = 0; i < half; ++i) {
        // asymptotic initial guesses for the descending positive roots
        if (i == 0) {
            z = std::sqrt(2.0 * order + 1.0) -
                1.85575 * std::pow(2.0 * order + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(order), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * roots[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * roots[1];
        } else {
            z = 2.0 * z - roots[i - 2];
        }
        double pp = 0.0;
        for (int iter = 0; iter < 200; ++iter) {
            const auto [p1, p2] = hermite_orthonormal(order, z);
            pp = std::sqrt(2.0 * order) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) <= 1e-15 * (1.0 + std::abs(z))) break;
        }
        roots[i] = z;
        rule.nodes[i] = z;
        rule.nodes[order - 1 - i] = -z;
        const double w = 2.0 / (pp * pp);
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    // ascending node order
    std::reverse(rule.nodes.begin(), rule.nodes.end());
    std::reverse(rule.weights.begin(), rule.weights.end());
    return rule;
}

double hermite_h(int m, double y) {
    if (m < 0) throw std::invalid_argument("hermite_h: m must be >= 0");
    double hm1 = 0.0;  // h_{-1}, unused at m = 0
    double h = 1.0;    // h_0
    for (int k = 0; k < m; ++k) {
        const double next = y * h - 2.0 * k * hm1;
        hm1 = h;
        h = next;
    }
    return h;
}

double hermite_norm_sq(int m) {
    if (m < 0) throw std::invalid_argument("hermite_norm_sq: m must be >= 0");
    double v = 1.0;
    for (int k = 1; k <= m; ++k) v *= 2.0 * k;
    return v;
}

double gauss_rho_integral(const std::function<double(double)>& f, int quad_order) {
    const GaussHermiteRule rule = gauss_hermite(quad_order);
    // y = 2t maps the e^{-t^2} rule onto rho = e^{-y^2/4}/sqrt(4 pi)
    double acc = 0.0;
    for (int i = 0; i < rule.order; ++i) acc += rule.weights[i] * f(2.0 * rule.nodes[i]);
    return acc / std::sqrt(pi);
}

double project_fn(const std::function<double(double)>& f, int m, int quad_order) {
    if (m < 0) throw std::invalid_argument("project_fn: m must be >= 0");
    if (quad_order < 2 * (m + 1))
        throw std::invalid_argument("project_fn: quadrature order too low for mode m");
    const double num =
        gauss_rho_integral([&](double y) { return f(y) * hermite_h(m, y); }, quad_order);
    return num / hermite_norm_sq(m);
}

AxisSamples even_extension(const std::vector<double>& y_radial, const std::vector<double>& v) {
    if (y_radial.size() != v.size() || y_radial.size() < 2)
        throw std::invalid_argument("even_extension: need matching arrays of size >= 2");
    if (y_radial.front() < 0.0)
        throw std::invalid_argument("even_extension: radial nodes must be >= 0");
    for (size_t i = 1; i < y_radial.size(); ++i)
        if (y_radial[i] <= y_radial[i - 1])
            throw std::invalid_argument("even_extension: nodes must be strictly increasing");
    const size_t n = y_radial.size();
    const bool has_zero = y_radial.front() == 0.0;
    AxisSamples out;
    out.y.reserve(2 * n);
    out.v.reserve(2 * n);
    for (size_t i = n; i-- > (has_zero ? 1 : 0);) {
        out.y.push_back(-y_radial[i]);
        out.v.push_back(v[i]);
    }
    for (size_t i = 0; i < n; ++i) {
        out.y.push_back(y_radial[i]);
        out.v.push_back(v[i]);
    }
    return out;
}

double axis_interp(const AxisSamples& f, double y) {
    if (f.y.size() != f.v.size() || f.y.size() < 2)
        throw std::invalid_argument("axis_interp: need matching arrays of size >= 2");
    if (y <= f.y.front()) return f.v.front();
    if (y >= f.y.back()) return f.v.back();
    const auto it = std::upper_bound(f.y.begin(), f.y.end(), y);
    const size_t i = static_cast<size_t>(it - f.y.begin());
    const double t = (y - f.y[i - 1]) / (f.y[i] - f.y[i - 1]);
    return f.v[i - 1] + t * (f.v[i] - f.v[i - 1]);
}

double project(const AxisSamples& f, int m, int quad_order) {
    return project_fn([&](double y) { return axis_interp(f, y); }, m, quad_order);
}

ModeDecomposition decompose(const AxisSamples& q, double s, double K0, int N,
                            int quad_order) {
    if (s <= 0.0) throw std::invalid_argument("decompose: s must be > 0");
    if (K0 <= 0.0) throw std::invalid_argument("decompose: K0 must be > 0");
    if (N < 1) throw std::invalid_argument("decompose: N must be >= 1");
    ModeDecomposition dec;
    dec.s = s;
    dec.K0 = K0;
    dec.N = N;
    dec.input = q;
    const double cut_scale = K0 * std::sqrt(s);
    const size_t n = q.y.size();
    dec.r_b.y = q.y;
    dec.r_b.v.resize(n);
    dec.q_e.y = q.y;
    dec.q_e.v.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const double chi = chi0(std::abs(q.y[i]) / cut_scale);
        dec.r_b.v[i] = chi * q.v[i];
        dec.q_e.v[i] = (1.0 - chi) * q.v[i];
    }
    dec.q0 = project(dec.r_b, 0, quad_order);
    dec.q1_axis = project(dec.r_b, 1, quad_order);
    dec.q2_axis = project(dec.r_b, 2, quad_order);
    dec.q1.assign(static_cast<size_t>(N), 0.0);
    dec.q1[0] = dec.q1_axis;
    dec.q2.assign(static_cast<size_t>(N) * N, 0.0);
    dec.q2[0] = dec.q2_axis;
    dec.q_minus.y = q.y;
    dec.q_minus.v.resize(n);
    dec.q_perp.y = q.y;
    dec.q_perp.v.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const double y = q.y[i];
        const double deg1 = dec.q0 + dec.q1_axis * y;
        dec.q_perp.v[i] = dec.r_b.v[i] - deg1;
        dec.q_minus.v[i] = dec.r_b.v[i] - deg1 - dec.q2_axis * hermite_h(2, y);
    }
    return dec;
}

std::vector<double> reconstruct(const ModeDecomposition& dec) {
    const size_t n = dec.input.y.size();
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) {
        const double y = dec.input.y[i];
        out[i] = dec.q0 + dec.q1_axis * y + dec.q2_axis * hermite_h(2, y) +
                 dec.q_minus.v[i] + dec.q_e.v[i];
    }
    return out;
}

double weighted_cubic_sup(const AxisSamples& f) {
    double sup = 0.0;
    for (size_t i = 0; i < f.y.size(); ++i) {
        const double y3 = std::abs(f.y[i] * f.y[i] * f.y[i]);
        sup = std::max(sup, std::abs(f.v[i]) / (1.0 + y3));
    }
    return sup;
}

double grad_perp_weighted_sup(const AxisSamples& q, double s, double K0, int quad_order) {
    if (q.y.size() < 3)
        throw std::invalid_argument("grad_perp_weighted_sup: need at least 3 samples");
    const size_t n = q.y.size();
    AxisSamples g;
    g.y = q.y;
    g.v.resize(n);
    g.v[0] = (q.v[1] - q.v[0]) / (q.y[1] - q.y[0]);
    g.v[n - 1] = (q.v[n - 1] - q.v[n - 2]) / (q.y[n - 1] - q.y[n - 2]);
    for (size_t i = 1; i + 1 < n; ++i)
        g.v[i] = (q.v[i + 1] - q.v[i - 1]) / (q.y[i + 1] - q.y[i - 1]);
    const double cut_scale = K0 * std::sqrt(s);
    for (size_t i = 0; i < n; ++i) g.v[i] *= chi0(std::abs(g.y[i]) / cut_scale);
    const double a0 = project(g, 0, quad_order);
    const double a1 = project(g, 1, quad_order);
    for (size_t i = 0; i < n; ++i) g.v[i] -= a0 + a1 * g.y[i];
    return weighted_cubic_sup(g);
}

void validate(const ShrinkingSetConfig& cfg) {
    if (cfg.A < 1.0) throw std::invalid_argument("ShrinkingSetConfig: A must be >= 1");
    if (cfg.K0 <= 0.0) throw std::invalid_argument("ShrinkingSetConfig: K0 must be > 0");
    const auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_unit(cfg.epsilon0) || !in_unit(cfg.alpha0) || !in_unit(cfg.delta0) ||
        !in_unit(cfg.eta0))
        throw std::invalid_argument("ShrinkingSetConfig: thresholds must lie in (0,1)");
    if (cfg.C0 <= 0.0) throw std::invalid_argument("ShrinkingSetConfig: C0 must be > 0");
}

std::string ShrinkingSetReport::text() const {
    std::string out;
    char buf[160];
    for (const auto& cl : clauses) {
        std::snprintf(buf, sizeof buf, "%-10s value=%.6e bound=%.6e %s\n", cl.name.c_str(),
                      cl.value, cl.bound, cl.pass ? "PASS" : "FAIL");
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "member: %s\n", member ? "yes" : "no");
    out += buf;
    std::snprintf(buf, sizeof buf, "lemma sup bound: %.6e, weighted cubic coef: %.6e\n",
                  lemma_sup_bound, lemma_cubic_coef);
    out += buf;
    return out;
}

ShrinkingSetReport shrinking_set_check(const ModeDecomposition& dec, double grad_perp_bound,
                                       const ShrinkingSetConfig& cfg, BoundFlavor flavor) {
    validate(cfg);
    if (dec.s < 1.0) throw std::invalid_argument("shrinking_set_check: s must be >= 1");
    const double s = dec.s;
    const double A = cfg.A;
    const double s32 = std::pow(s, 1.5);
    const double s2 = s * s;
    const bool initial = flavor == BoundFlavor::initial;
    double q1_sup = 0.0;
    for (const double v : dec.q1) q1_sup = std::max(q1_sup, std::abs(v));
    double q2_sup = 0.0;
    for (const double v : dec.q2) q2_sup = std::max(q2_sup, std::abs(v));
    double qe_sup = 0.0;
    for (const double v : dec.q_e.v) qe_sup = std::max(qe_sup, std::abs(v));

    ShrinkingSetReport rep;
    const auto add = [&](const char* name, double value, double bound) {
        rep.clauses.push_back({name, value, bound, std::abs(value) <= bound});
    };
    add("q0", std::abs(dec.q0), A * A * A / s32);
    add("q1", q1_sup, A / s2);
    add("q2", q2_sup, initial ? 1.0 / s2 : A * A * A * A / s32);
    const double a6 = std::pow(A, 6.0);
    add("q_minus", weighted_cubic_sup(dec.q_minus), initial ? 1.0 / s2 : a6 / s2);
    add("grad_perp", grad_perp_bound, initial ? 1.0 / s2 : a6 / s2);
    add("q_e", qe_sup, initial ? 1.0 / std::sqrt(s) : std::pow(A, 7.0) / std::sqrt(s));
    rep.member = true;
    for (const auto& cl : rep.clauses) rep.member = rep.member && cl.pass;
    rep.lemma_sup_bound = cfg.C0 * std::pow(A, 7.0) / std::sqrt(s);
    rep.lemma_cubic_coef = cfg.C0 * std::pow(A, 7.0) / s32;
    return rep;
}

}  // namespace blowup
