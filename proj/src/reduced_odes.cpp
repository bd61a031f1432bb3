#include "blowup/reduced_odes.hpp"

#include <cmath>
#include <stdexcept>

namespace blowup {

namespace {

// escape threshold for the quadratic feedback region of the formal system
constexpr double formal_escape_level = 1.0;

}  // namespace

FormalModeState formal_rhs(const FormalModeState& state, const ModelParameters& params,
                           const DerivedConstants& c) {
    if (state.s <= 0.0) throw std::invalid_argument("formal_rhs: s must be > 0");
    const double p = params.p;
    const double k = c.kappa;
    const double beta = c.beta;
    const double s = state.s;
    FormalModeState d;
    d.s = s;
    d.W0 = state.W0 +
           (p / (2.0 * k)) * (state.W0 * state.W0 + 8.0 * params.N * state.W2 * state.W2) -
           beta * (k + state.W0) / ((p - 1.0) * s);
    d.W2 = (4.0 * p / k) * state.W2 * state.W2 + (p / k) * state.W0 * state.W2 -
           beta * state.W2 / ((p - 1.0) * s);
    return d;
}

std::pair<double, double> formal_asymptotic_branch(double s, const ModelParameters& params,
                                                   const DerivedConstants& c) {
    if (s <= 0.0) throw std::invalid_argument("formal_asymptotic_branch: s must be > 0");
    return {c.beta * c.kappa / ((params.p - 1.0) * s),
            -c.kappa * (1.0 + c.beta) / (4.0 * params.p * s)};
}

double slaved_W0(double s, double W2, const ModelParameters& params,
                 const DerivedConstants& c) {
    if (s <= 0.0) throw std::invalid_argument("slaved_W0: s must be > 0");
    const double p = params.p;
    const double k = c.kappa;
    const double beta = c.beta;
    // root of W0 + (p/2k)(W0^2 + 8N W2^2) - beta(k+W0)/((p-1)s) = 0 near the branch
    double W0 = beta * k / ((p - 1.0) * s);
    for (int it = 0; it < 64; ++it) {
        const double f = W0 + (p / (2.0 * k)) * (W0 * W0 + 8.0 * params.N * W2 * W2) -
                         beta * (k + W0) / ((p - 1.0) * s);
        const double fp = 1.0 + (p / k) * W0 - beta / ((p - 1.0) * s);
        const double step = f / fp;
        W0 -= step;
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(W0))) break;
    }
    return W0;
}

FormalTrajectory integrate_formal(double s0, double s1, FormalModeState init,
                                  const ModelParameters& params, const DerivedConstants& c,
                                  FormalMode mode, int steps_per_efold) {
    if (s0 <= 0.0 || s1 <= s0)
        throw std::invalid_argument("integrate_formal: need 0 < s0 < s1");
    if (steps_per_efold < 8)
        throw std::invalid_argument("integrate_formal: steps_per_efold too small");
    const int n_steps =
        std::max(1, static_cast<int>(std::ceil(steps_per_efold * std::log(s1 / s0))));
    const double ratio = std::pow(s1 / s0, 1.0 / n_steps);

    FormalTrajectory traj;
    FormalModeState st = init;
    st.s = s0;
    if (mode == FormalMode::slaved) st.W0 = slaved_W0(s0, st.W2, params, c);
    traj.samples.push_back(st);

    const auto escaped_at = [&](const FormalModeState& x) {
        return !std::isfinite(x.W0) || !std::isfinite(x.W2) ||
               std::abs(x.W0) > formal_escape_level || std::abs(x.W2) > formal_escape_level;
    };

    for (int i = 0; i < n_steps; ++i) {
        const double s_next = s0 * std::pow(ratio, i + 1);
        const double ds = s_next - st.s;
        if (mode == FormalMode::full) {
            const auto k1 = formal_rhs(st, params, c);
            FormalModeState m2{st.s + 0.5 * ds, st.W0 + 0.5 * ds * k1.W0,
                               st.W2 + 0.5 * ds * k1.W2};
            const auto k2 = formal_rhs(m2, params, c);
            FormalModeState m3{st.s + 0.5 * ds, st.W0 + 0.5 * ds * k2.W0,
                               st.W2 + 0.5 * ds * k2.W2};
            const auto k3 = formal_rhs(m3, params, c);
            FormalModeState m4{st.s + ds, st.W0 + ds * k3.W0, st.W2 + ds * k3.W2};
            const auto k4 = formal_rhs(m4, params, c);
            st.W0 += ds / 6.0 * (k1.W0 + 2.0 * k2.W0 + 2.0 * k3.W0 + k4.W0);
            st.W2 += ds / 6.0 * (k1.W2 + 2.0 * k2.W2 + 2.0 * k3.W2 + k4.W2);
        } else {
            // W2 integrated with W0 slaved to its quasi-static root at each stage
            const auto rhs_W2 = [&](double s, double W2) {
                const double W0 = slaved_W0(s, W2, params, c);
                return (4.0 * params.p / c.kappa) * W2 * W2 +
                       (params.p / c.kappa) * W0 * W2 -
                       c.beta * W2 / ((params.p - 1.0) * s);
            };
            const double k1 = rhs_W2(st.s, st.W2);
            const double k2 = rhs_W2(st.s + 0.5 * ds, st.W2 + 0.5 * ds * k1);
            const double k3 = rhs_W2(st.s + 0.5 * ds, st.W2 + 0.5 * ds * k2);
            const double k4 = rhs_W2(st.s + ds, st.W2 + ds * k3);
            st.W2 += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            st.W0 = slaved_W0(s_next, st.W2, params, c);
        }
        st.s = s_next;
        traj.samples.push_back(st);
        if (escaped_at(st)) {
            traj.escaped = true;
            traj.escape_s = st.s;
            break;
        }
    }
    return traj;
}

QModeState make_q_mode_state(double s, double q0, const std::vector<double>& q1, int N) {
    if (s <= 0.0) throw std::invalid_argument("make_q_mode_state: s must be > 0");
    if (N < 1 || q1.size() != static_cast<size_t>(N))
        throw std::invalid_argument("make_q_mode_state: q1 must have length N");
    QModeState st;
    st.s = s;
    st.q0 = q0;
    st.q1 = q1;
    st.q2.assign(static_cast<size_t>(N) * N, 0.0);
    return st;
}

QModeState q_mode_step(const QModeState& state, double ds, const ModelParameters& params,
                       const DerivedConstants& c, const LambdaSource& lambda_tilde) {
    if (state.s <= 0.0) throw std::invalid_argument("q_mode_step: s must be > 0");
    const size_t N = state.q1.size();
    if (state.q2.size() != N * N)
        throw std::invalid_argument("q_mode_step: q2 must be N x N");
    const double pm1 = params.p - 1.0;
    struct Deriv {
        double q0;
        std::vector<double> q1, q2;
    };
    const auto rhs = [&](double s, const QModeState& x) {
        Deriv d;
        const double lt = lambda_tilde(s);
        d.q0 = x.q0 + c.kappa * lt;
        d.q1.resize(N);
        for (size_t i = 0; i < N; ++i) d.q1[i] = 0.5 * x.q1[i];
        d.q2.resize(N * N);
        for (size_t i = 0; i < N; ++i) {
            for (size_t j = 0; j < N; ++j) {
                double v = (-(2.0 + c.beta) / s + lt) * x.q2[i * N + j];
                if (i == j) v -= lt * c.kappa * c.b_coef / (pm1 * s);
                d.q2[i * N + j] = v;
            }
        }
        return d;
    };
    const auto add = [&](const QModeState& x, const Deriv& d, double h) {
        QModeState y = x;
        y.q0 += h * d.q0;
        for (size_t i = 0; i < N; ++i) y.q1[i] += h * d.q1[i];
        for (size_t i = 0; i < N * N; ++i) y.q2[i] += h * d.q2[i];
        return y;
    };
    const auto k1 = rhs(state.s, state);
    auto x2 = add(state, k1, 0.5 * ds);
    const auto k2 = rhs(state.s + 0.5 * ds, x2);
    auto x3 = add(state, k2, 0.5 * ds);
    const auto k3 = rhs(state.s + 0.5 * ds, x3);
    auto x4 = add(state, k3, ds);
    const auto k4 = rhs(state.s + ds, x4);
    QModeState out = state;
    out.s = state.s + ds;
    out.q0 += ds / 6.0 * (k1.q0 + 2.0 * k2.q0 + 2.0 * k3.q0 + k4.q0);
    for (size_t i = 0; i < N; ++i)
        out.q1[i] += ds / 6.0 * (k1.q1[i] + 2.0 * k2.q1[i] + 2.0 * k3.q1[i] + k4.q1[i]);
    for (size_t i = 0; i < N * N; ++i)
        out.q2[i] += ds / 6.0 * (k1.q2[i] + 2.0 * k2.q2[i] + 2.0 * k3.q2[i] + k4.q2[i]);
    return out;
}

ThetaNormResult theta_norm_ode(const ModelParameters& params, const DerivedConstants& c,
                               double T, double t0, double m0, double s_end,
                               int steps_per_efold) {
    if (t0 >= T) throw std::invalid_argument("theta_norm_ode: need t0 < T");
    if (m0 <= 0.0) throw std::invalid_argument("theta_norm_ode: need m0 > 0");
    const double s0 = -std::log(T - t0);
    if (s0 <= 0.0)
        throw std::invalid_argument("theta_norm_ode: need T - t0 < 1 for a log clock");
    if (s_end <= s0) throw std::invalid_argument("theta_norm_ode: need s_end > |ln(T-t0)|");
    if (steps_per_efold < 8)
        throw std::invalid_argument("theta_norm_ode: steps_per_efold too small");

    const double g = params.gamma;
    const double E = 1.0 + 0.5 * params.N + c.beta * (params.p - 1.0 + params.r) / (params.p - 1.0);
    const double B = c.B_const;
    const auto closed = [&](double s) {
        return std::pow((1.0 + g) * B / E, 1.0 / (1.0 + g)) * std::pow(s, E / (1.0 + g));
    };
    const auto rhs = [&](double s, double m) {
        if (m <= 0.0) throw std::runtime_error("theta_norm_ode: mass became nonpositive");
        return B * std::pow(m, -g) * std::pow(s, E - 1.0);
    };

    const int n_steps =
        std::max(1, static_cast<int>(std::ceil(steps_per_efold * std::log(s_end / s0))));
    const double ratio = std::pow(s_end / s0, 1.0 / n_steps);

    ThetaNormResult res;
    res.theta_log_exponent = -g * E / (1.0 + g);
    double s = s0, m = m0;
    res.s.push_back(s);
    res.m.push_back(m);
    res.m_closed.push_back(closed(s));
    res.max_rel_dev = std::abs(m - closed(s)) / closed(s);
    for (int i = 0; i < n_steps; ++i) {
        const double s_next = s0 * std::pow(ratio, i + 1);
        const double ds = s_next - s;
        const double k1 = rhs(s, m);
        const double k2 = rhs(s + 0.5 * ds, m + 0.5 * ds * k1);
        const double k3 = rhs(s + 0.5 * ds, m + 0.5 * ds * k2);
        const double k4 = rhs(s + ds, m + ds * k3);
        m += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s = s_next;
        res.s.push_back(s);
        res.m.push_back(m);
        res.m_closed.push_back(closed(s));
        res.max_rel_dev = std::max(res.max_rel_dev, std::abs(m - closed(s)) / closed(s));
    }
    return res;
}

}  // namespace blowup
