#include "blowup/solver.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "blowup/config.hpp"

namespace blowup {

namespace {

// u^p along the hot loop; integer exponents avoid pow
double field_pow(double u, double p) {
    const double pr = std::round(p);
    if (p == pr && pr >= 0.0 && pr <= 64.0) {
        double acc = 1.0;
        for (int k = 0; k < static_cast<int>(pr); ++k) acc *= u;
        return acc;
    }
    return std::pow(u, p);
}

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (const double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

SolverState make_state(RadialField u0, const ModelParameters& params) {
    validate(params);
    for (const double v : u0.values)
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("make_state: initial data must be finite and >= 0");
    SolverState st;
    st.theta = compute_theta(u0, params);
    st.u = std::move(u0);
    st.t = 0.0;
    st.dt = 0.0;
    st.step_count = 0;
    return st;
}

Stepper::Stepper(ModelParameters params, TimeScheme scheme)
    : params_(std::move(params)), scheme_(scheme) {
    validate(params_);
}

// assembles the implicit matrix rows, mirroring laplacian_radial's stencil so
// both schemes share one discrete operator, then stores the Thomas factors
void Stepper::refactor(const RadialGrid& grid, double dt) {
    const size_t n = grid.nodes.size();
    if (n < 3) throw std::invalid_argument("Stepper: need at least 3 nodes");
    const int N = params_.N;
    lower_.assign(n, 0.0);
    diag_.assign(n, 0.0);
    upper_.assign(n, 0.0);
    {
        const double h1 = grid.nodes[1] - grid.nodes[0];
        const double c01 = 2.0 * N / (h1 * h1);
        diag_[0] = 1.0 + dt + dt * c01;
        upper_[0] = -dt * c01;
    }
    for (size_t i = 1; i + 1 < n; ++i) {
        const double hm = grid.nodes[i] - grid.nodes[i - 1];
        const double hp = grid.nodes[i + 1] - grid.nodes[i];
        const double x = grid.nodes[i];
        const double denom = hm * hp * (hm + hp);
        const double cm = (2.0 * hp - (N - 1) * hp * hp / x) / denom;
        const double cc = (-2.0 * (hm + hp) + (N - 1) * (hp * hp - hm * hm) / x) / denom;
        const double cp = (2.0 * hm + (N - 1) * hm * hm / x) / denom;
        lower_[i] = -dt * cm;
        diag_[i] = 1.0 + dt - dt * cc;
        upper_[i] = -dt * cp;
    }
    {
        const double hl = grid.nodes[n - 1] - grid.nodes[n - 2];
        const double c = 2.0 / (hl * hl);
        lower_[n - 1] = -dt * c;
        diag_[n - 1] = 1.0 + dt + dt * c;
    }
    cprime_.resize(n);
    inv_diag_.resize(n);
    double d = diag_[0];
    inv_diag_[0] = 1.0 / d;
    cprime_[0] = upper_[0] / d;
    for (size_t i = 1; i < n; ++i) {
        d = diag_[i] - lower_[i] * cprime_[i - 1];
        inv_diag_[i] = 1.0 / d;
        cprime_[i] = upper_[i] / d;
    }
    cached_dt_ = dt;
}

void Stepper::advance(SolverState& state, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("Stepper::advance: dt must be > 0");
    const auto& grid = *state.u.grid;
    const size_t n = grid.size();
    const double p = params_.p;
    const double theta = state.theta;
    auto& u = state.u.values;

    if (scheme_ == TimeScheme::explicit_euler) {
        const RadialField lap = laplacian_radial(state.u);
        scratch_.resize(n);
        for (size_t i = 0; i < n; ++i)
            scratch_[i] = u[i] + dt * (lap.values[i] - u[i] + theta * field_pow(u[i], p));
        u.swap(scratch_);
    } else {
        // (1 + dt) u_new - dt lap u_new = u + dt theta u^p
        if (cached_grid_ != state.u.grid || cached_dt_ != dt) {
            refactor(grid, dt);
            cached_grid_ = state.u.grid;
        }
        rhs_.resize(n);
        for (size_t i = 0; i < n; ++i) rhs_[i] = u[i] + dt * theta * field_pow(u[i], p);
        rhs_[0] *= inv_diag_[0];
        for (size_t i = 1; i < n; ++i)
            rhs_[i] = (rhs_[i] - lower_[i] * rhs_[i - 1]) * inv_diag_[i];
        for (size_t i = n - 1; i-- > 0;) rhs_[i] -= cprime_[i] * rhs_[i + 1];
        u.swap(rhs_);
    }

    // positivity: tolerate roundoff negatives, abort on real violations
    const double scale = std::max(1.0, sup_abs(u));
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(u[i])) {
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "Stepper::advance: non-finite value at node %zu, t=%.6g, dt=%.3g",
                          i, state.t, dt);
            throw std::runtime_error(buf);
        }
        if (u[i] < 0.0) {
            if (u[i] > -1e-13 * scale) {
                u[i] = 0.0;
            } else {
                char buf[160];
                std::snprintf(
                    buf, sizeof buf,
                    "Stepper::advance: negativity %.3e beyond clamp at node %zu, t=%.6g",
                    u[i], i, state.t);
                throw std::runtime_error(buf);
            }
        }
    }
    state.theta = compute_theta(state.u, params_);
    state.t += dt;
    state.dt = dt;
    ++state.step_count;
}

double adaptive_dt(const SolverState& state, const ModelParameters& params, double safety,
                   TimeScheme scheme, double max_dt) {
    if (safety <= 0.0 || safety >= 1.0)
        throw std::invalid_argument("adaptive_dt: safety must be in (0,1)");
    if (max_dt <= 0.0) throw std::invalid_argument("adaptive_dt: max_dt must be > 0");
    double cap = max_dt / safety;
    const double sup = sup_norm(state.u);
    const double react = (params.p - 1.0) * state.theta * field_pow(sup, params.p - 1.0);
    if (react > 0.0) cap = std::min(cap, 1.0 / react);
    if (scheme == TimeScheme::explicit_euler) {
        const auto& nodes = state.u.grid->nodes;
        double h_min = nodes[1] - nodes[0];
        for (size_t i = 1; i + 1 < nodes.size(); ++i)
            h_min = std::min(h_min, nodes[i + 1] - nodes[i]);
        cap = std::min(cap, h_min * h_min / (2.0 * params.N));
    }
    return std::min(safety * cap, max_dt);
}

BlowupFit estimate_blowup_time(const std::vector<double>& times,
                               const std::vector<double>& sups, double p) {
    if (times.size() != sups.size() || times.size() < 10)
        throw std::invalid_argument("estimate_blowup_time: need >= 10 samples");
    const size_t n_all = times.size();
    std::vector<double> z(n_all);
    for (size_t i = 0; i < n_all; ++i) {
        if (sups[i] <= 0.0)
            throw std::invalid_argument("estimate_blowup_time: sup values must be > 0");
        z[i] = std::pow(sups[i], -(p - 1.0));
    }
    // trailing window: z within two decades of the final (smallest) value
    const double z_cut = z[n_all - 1] * 100.0;
    size_t start = n_all;
    while (start > 0 && z[start - 1] <= z_cut) --start;
    if (n_all - start < 10) start = n_all >= 10 ? n_all - 10 : 0;
    for (size_t i = start + 1; i < n_all; ++i)
        if (sups[i] <= sups[i - 1])
            throw std::invalid_argument("estimate_blowup_time: non-monotone tail");

    const size_t n = n_all - start;
    double st = 0.0, sz = 0.0;
    for (size_t i = start; i < n_all; ++i) {
        st += times[i];
        sz += z[i];
    }
    const double tbar = st / n, zbar = sz / n;
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = start; i < n_all; ++i) {
        sxx += (times[i] - tbar) * (times[i] - tbar);
        sxy += (times[i] - tbar) * (z[i] - zbar);
    }
    if (sxx == 0.0) throw std::invalid_argument("estimate_blowup_time: degenerate times");
    const double slope = sxy / sxx;
    if (slope >= 0.0)
        throw std::invalid_argument("estimate_blowup_time: series is not approaching blowup");
    const double intercept = zbar - slope * tbar;
    BlowupFit fit;
    fit.T_est = -intercept / slope;
    fit.samples_used = static_cast<int>(n);
    double rss = 0.0;
    for (size_t i = start; i < n_all; ++i) {
        const double resid = z[i] - (intercept + slope * times[i]);
        rss += resid * resid;
    }
    const double sigma2 = n > 2 ? rss / (n - 2) : 0.0;
    const double var = (sigma2 / (slope * slope)) *
                       (1.0 / n + (fit.T_est - tbar) * (fit.T_est - tbar) / sxx);
    fit.uncertainty = std::sqrt(std::max(0.0, var));
    return fit;
}

TrajectoryRecord run_to_blowup(const RadialField& u0, const RunToBlowupConfig& config) {
    SolverState state = make_state(u0, config.params);
    Stepper stepper(config.params, config.scheme);
    TrajectoryRecord rec;

    const double pm1 = config.params.p - 1.0;
    double sup = sup_norm(state.u);
    if (sup <= 0.0) throw std::invalid_argument("run_to_blowup: initial data is zero");

    const auto record_row = [&]() {
        rec.times.push_back(state.t);
        rec.sup_u.push_back(sup);
        rec.theta_series.push_back(state.theta);
        rec.dt_series.push_back(state.dt);
    };
    const auto snapshot = [&]() {
        if (static_cast<int>(rec.snapshots.size()) < config.max_snapshots)
            rec.snapshots.push_back({state.t, state.theta, state.u});
    };

    record_row();
    snapshot();
    double last_ln_recorded = std::log(sup);
    double last_ln_snapshot = std::log(sup);
    long last_step_recorded = 0;
    bool hit_threshold = false;

    while (state.step_count < config.max_steps && state.t < config.t_horizon) {
        const double dt = config.fixed_dt > 0.0
                              ? config.fixed_dt
                              : adaptive_dt(state, config.params, config.safety,
                                            config.scheme, config.max_dt);
        stepper.advance(state, dt);
        sup = sup_norm(state.u);
        if (sup <= 0.0) {
            rec.note += "field decayed to zero; ";
            break;
        }
        const double ln_sup = std::log(sup);
        if (std::abs(ln_sup - last_ln_recorded) >= config.series_dlog ||
            state.step_count - last_step_recorded >= config.flat_record_stride) {
            record_row();
            last_ln_recorded = ln_sup;
            last_step_recorded = state.step_count;
        }
        if (ln_sup - last_ln_snapshot >= config.snapshot_ds / pm1) {
            snapshot();
            last_ln_snapshot = ln_sup;
        }
        if (sup >= config.stop_sup) {
            hit_threshold = true;
            break;
        }
    }
    if (rec.times.empty() || rec.times.back() != state.t) record_row();

    if (hit_threshold) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "stop threshold %.3g reached at t=%.12g; ",
                      config.stop_sup, state.t);
        rec.note += buf;
        try {
            BlowupFit fit = estimate_blowup_time(rec.times, rec.sup_u, config.params.p);
            if (fit.T_est > rec.times.back()) {
                rec.blowup = fit;
            } else {
                rec.note += "fit root fell inside the sampled window, discarded; ";
            }
        } catch (const std::exception& e) {
            rec.note += std::string("blowup fit failed: ") + e.what() + "; ";
        }
    } else {
        rec.no_blowup_detected = true;
        if (state.step_count >= config.max_steps)
            rec.note += "step budget exhausted before threshold; ";
        else if (state.t >= config.t_horizon)
            rec.note += "time horizon reached before threshold; ";
    }
    return rec;
}

std::string checkpoint_to_text(const SolverState& state, const ModelParameters& params) {
    std::string out = "# blowupsim checkpoint v1\n";
    Config head;
    head.set_double("model.p", params.p);
    head.set_double("model.r", params.r);
    head.set_double("model.gamma", params.gamma);
    head.set_long("model.N", params.N);
    head.set_double("model.domain_radius", params.domain_radius);
    head.set("model.critical", params.critical ? "true" : "false");
    head.set_double("state.t", state.t);
    head.set_double("state.theta", state.theta);
    head.set_double("state.dt", state.dt);
    head.set_long("state.step_count", state.step_count);
    head.set_long("grid.n", static_cast<long>(state.u.grid->size()));
    out += head.canonical();
    out += "rho,u\n";
    char buf[80];
    const size_t n = state.u.grid->nodes.size();
    for (size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", state.u.grid->nodes[i],
                      state.u.values[i]);
        out += buf;
    }
    return out;
}

std::pair<SolverState, ModelParameters> checkpoint_from_text(const std::string& text) {
    const auto marker = text.find("rho,u\n");
    if (marker == std::string::npos)
        throw std::runtime_error("checkpoint_from_text: missing field table");
    const Config head = Config::parse_text(text.substr(0, marker));
    ModelParameters params;
    params.p = head.get_double("model.p", 0.0);
    params.r = head.get_double("model.r", 0.0);
    params.gamma = head.get_double("model.gamma", 0.0);
    params.N = static_cast<int>(head.get_long("model.N", 0));
    params.domain_radius = head.get_double("model.domain_radius", 0.0);
    params.critical = head.get_bool("model.critical", false);
    validate(params);

    std::vector<double> nodes, values;
    std::istringstream body(text.substr(marker + 6));
    std::string line;
    while (std::getline(body, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("checkpoint_from_text: bad field row: " + line);
        nodes.push_back(std::stod(line.substr(0, comma)));
        values.push_back(std::stod(line.substr(comma + 1)));
    }
    const long n = head.get_long("grid.n", -1);
    if (n != static_cast<long>(nodes.size()))
        throw std::runtime_error("checkpoint_from_text: node count mismatch");

    SolverState st;
    st.u = RadialField(grid_from_nodes(nodes, params.N), std::move(values));
    st.t = head.get_double("state.t", 0.0);
    st.dt = head.get_double("state.dt", 0.0);
    st.step_count = head.get_long("state.step_count", 0);
    st.theta = compute_theta(st.u, params);
    const double stored = head.get_double("state.theta", st.theta);
    if (std::abs(stored - st.theta) > 1e-9 * std::max(1.0, std::abs(stored)))
        throw std::runtime_error("checkpoint_from_text: theta inconsistent with field");
    return {std::move(st), params};
}

}  // namespace blowup
