#include "blowup/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "blowup/intermediate.hpp"

namespace blowup {

namespace {

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// %.17g round-trips doubles exactly, which is what makes the CSV and the
// canonical config bit-stable across identical runs
std::string num17(double x) { return fmt("%.17g", x); }

template <class F>
auto stage(const char* tag, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(tag) + ": " + e.what());
    }
}

std::string join_list(const std::vector<double>& v) {
    std::string out;
    for (double x : v) {
        if (!out.empty()) out += ',';
        out += num17(x);
    }
    return out;
}

std::vector<double> split_list(const std::string& text) {
    std::vector<double> out;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        std::string tok = text.substr(pos, next - pos);
        const size_t a = tok.find_first_not_of(" \t");
        if (a != std::string::npos) {
            tok = tok.substr(a, tok.find_last_not_of(" \t") - a + 1);
            try {
                out.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw std::invalid_argument("config: cannot parse list entry '" + tok + "'");
            }
        }
        pos = next + 1;
    }
    return out;
}

std::string spacing_name(GridSpacing s) {
    return s == GridSpacing::uniform ? "uniform" : "origin_refined";
}

GridSpacing parse_spacing(const std::string& s) {
    if (s == "uniform") return GridSpacing::uniform;
    if (s == "origin_refined") return GridSpacing::origin_refined;
    throw std::invalid_argument("config: grid.spacing must be uniform or origin_refined, got '" +
                                s + "'");
}

std::string scheme_name(TimeScheme s) {
    return s == TimeScheme::imex ? "imex" : "explicit_euler";
}

TimeScheme parse_scheme(const std::string& s) {
    if (s == "imex") return TimeScheme::imex;
    if (s == "explicit_euler") return TimeScheme::explicit_euler;
    throw std::invalid_argument("config: solver.scheme must be imex or explicit_euler, got '" + s +
                                "'");
}

// Fills constants from params and rejects inconsistent settings before any
// stage runs. Central so hand-built configs and parsed ones meet one gate.
void validate_run_config(RunConfig& cfg) {
    validate(cfg.params);
    cfg.constants = derive_constants(cfg.params);
    if (cfg.n_nodes < 16) throw std::invalid_argument("run config: n_nodes must be >= 16");
    if (!(cfg.refined_fraction > 0.0 && cfg.refined_fraction < 1.0))
        throw std::invalid_argument("run config: refined_fraction must lie in (0,1)");
    if (!(cfg.safety > 0.0 && cfg.safety <= 1.0))
        throw std::invalid_argument("run config: safety must lie in (0,1]");
    if (!(cfg.max_dt > 0.0)) throw std::invalid_argument("run config: max_dt must be > 0");
    if (cfg.fixed_dt < 0.0) throw std::invalid_argument("run config: fixed_dt must be >= 0");
    if (!(cfg.stop_sup > 1.0)) throw std::invalid_argument("run config: stop_sup must be > 1");
    if (!(cfg.t_horizon > 0.0)) throw std::invalid_argument("run config: t_horizon must be > 0");
    if (cfg.max_steps < 1) throw std::invalid_argument("run config: max_steps must be >= 1");
    if (!(cfg.snapshot_ds > 0.0))
        throw std::invalid_argument("run config: snapshot_ds must be > 0");
    if (cfg.max_snapshots < 2)
        throw std::invalid_argument("run config: max_snapshots must be >= 2");
    validate(cfg.ss);
    if (cfg.initial_kind == "bump") {
        if (!(cfg.bump_amplitude > 0.0) || !(cfg.bump_width2 > 0.0))
            throw std::invalid_argument("run config: bump amplitude and width2 must be > 0");
    } else if (cfg.initial_kind == "constant") {
        if (!(cfg.constant_value > 0.0))
            throw std::invalid_argument("run config: constant_value must be > 0");
    } else if (cfg.initial_kind == "prepared") {
        validate_prepared(cfg.prepared, cfg.params);
    } else {
        throw std::invalid_argument(
            "run config: initial.kind must be bump, constant or prepared, got '" +
            cfg.initial_kind + "'");
    }
    if (cfg.output_dir.empty()) throw std::invalid_argument("run config: output_dir is empty");
}

RunToBlowupConfig solver_config(const RunConfig& cfg) {
    RunToBlowupConfig rc;
    rc.params = cfg.params;
    rc.scheme = cfg.scheme;
    rc.safety = cfg.safety;
    rc.max_dt = cfg.max_dt;
    rc.fixed_dt = cfg.fixed_dt;
    rc.stop_sup = cfg.stop_sup;
    rc.max_steps = cfg.max_steps;
    rc.t_horizon = cfg.t_horizon;
    rc.snapshot_ds = cfg.snapshot_ds;
    rc.max_snapshots = cfg.max_snapshots;
    return rc;
}

// The similarity core scale is sqrt(T-t); once it falls under eight cells of
// the finest spacing the interpolation error in the rescaled frame reaches
// the percent level and diagnostics stop.
double grid_trust_floor(const RadialGrid& grid) {
    const double h1 = grid.nodes[1] - grid.nodes[0];
    return 64.0 * h1 * h1;
}

std::string first_failing_clause(const ShrinkingSetReport& rep) {
    for (const auto& cl : rep.clauses)
        if (!cl.pass) return cl.name;
    return "";
}

void finalize_sweep(SweepResult& out, double boundary_level) {
    bool any_boundary = false;
    bool all_fast = true;
    bool pos = false, neg = false;
    for (const ExitRecord& e : out.entries) {
        if (std::max(std::abs(e.d0), std::abs(e.d1)) == boundary_level) {
            any_boundary = true;
            const bool q01 = e.first_clause == "q0" || e.first_clause == "q1";
            if (e.censored || !q01 || e.steps > 3) all_fast = false;
        }
        if (!e.censored && e.first_clause == "q0") {
            if (e.q0_at_exit > 0.0) pos = true;
            if (e.q0_at_exit < 0.0) neg = true;
        }
    }
    out.boundary_exits_q01_fast = any_boundary && all_fast;
    out.q0_sign_change = pos && neg;
}

const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Regenerates the run diagnostics from the CSVs in this directory.

Needs only the Python standard library. When matplotlib is importable the
diagnostics are rendered to plot_NN.png; either way plots.txt records the
range of every series so the script is useful on a bare interpreter.
"""
import csv
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    path = os.path.join(HERE, name)
    if not os.path.exists(path):
        return []
    with open(path) as f:
        rows = list(csv.reader(f))
    return rows[1:] if len(rows) > 1 else []


def col(rows, idx):
    out = []
    for r in rows:
        try:
            out.append(float(r[idx]))
        except (ValueError, IndexError):
            out.append(float("nan"))
    return out


series = []
rows = load("trajectory.csv")
if rows:
    t = col(rows, 0)
    series.append(("theta decay: theta vs t", t, col(rows, 2), "plot"))
    series.append(("sup growth: sup_u vs t", t, col(rows, 1), "semilogy"))
    pairs = [(l, v) for l, v in zip(col(rows, 4), col(rows, 2)) if l == l and l > 0 and v > 0]
    if pairs:
        series.append(("theta vs |ln(T-t)|", [p[0] for p in pairs], [p[1] for p in pairs],
                       "loglog"))
rows = load("profile_error.csv")
if rows:
    s = col(rows, 0)
    inv = [1.0 / math.sqrt(v) if v > 0 else float("nan") for v in s]
    series.append(("profile error vs 1/sqrt(s)", inv, col(rows, 1), "plot"))
    series.append(("rate constant vs s", s, col(rows, 2), "plot"))
rows = load("modes.csv")
if rows:
    s = col(rows, 0)
    for idx, name in ((1, "q0"), (2, "q1"), (3, "q2")):
        series.append(("mode %s vs s" % name, s, col(rows, idx), "plot"))
rows = load("p2.csv")
if rows:
    x = col(rows, 0)
    series.append(("intermediate flatness: U vs x", x, col(rows, 2), "semilogx"))
    series.append(("intermediate flatness: Uhat vs x", x, col(rows, 3), "semilogx"))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    HAVE_MPL = True
except Exception:
    HAVE_MPL = False

lines = []
n_png = 0
for i, (name, xs, ys, style) in enumerate(series):
    pts = [(a, b) for a, b in zip(xs, ys) if a == a and b == b]
    if not pts:
        continue
    lines.append("%-36s n=%4d  x:[%.6g, %.6g]  y:[%.6g, %.6g]" % (
        name, len(pts), min(p[0] for p in pts), max(p[0] for p in pts),
        min(p[1] for p in pts), max(p[1] for p in pts)))
    if HAVE_MPL:
        fig, ax = plt.subplots()
        getattr(ax, style)([p[0] for p in pts], [p[1] for p in pts], lw=1.0)
        ax.set_title(name)
        ax.grid(True, alpha=0.3)
        fig.savefig(os.path.join(HERE, "plot_%02d.png" % i), dpi=110)
        plt.close(fig)
        n_png += 1

with open(os.path.join(HERE, "plots.txt"), "w") as f:
    f.write("\n".join(lines) + ("\n" if lines else ""))
print("diagnostics: %d series, %d png files, matplotlib=%s" % (len(lines), n_png, HAVE_MPL))
)PY";

}  // namespace

RunConfig RunConfig::from_config(const Config& cfg) {
    static const char* known[] = {
        "model.p",         "model.r",           "model.gamma",
        "model.N",         "model.R",           "model.critical",
        "grid.n_nodes",    "grid.spacing",      "grid.refined_fraction",
        "solver.scheme",   "solver.safety",     "solver.max_dt",
        "solver.fixed_dt", "solver.stop_sup",   "solver.t_horizon",
        "solver.max_steps", "solver.snapshot_ds", "solver.max_snapshots",
        "shrink.A",        "shrink.K0",         "shrink.epsilon0",
        "shrink.alpha0",   "shrink.delta0",     "shrink.C0",
        "shrink.eta0",     "initial.kind",      "initial.bump_amplitude",
        "initial.bump_width2", "initial.constant_value", "initial.d0",
        "initial.d1",      "initial.T",         "initial.A",
        "initial.K0",      "initial.s0_floor",  "output.dir",
        "run.seed",
    };
    for (const auto& [key, value] : cfg.kv) {
        (void)value;
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw std::invalid_argument("config: unknown key '" + key + "'");
    }

    RunConfig out;
    out.params.p = cfg.get_double("model.p", out.params.p);
    out.params.r = cfg.get_double("model.r", out.params.r);
    out.params.gamma = cfg.get_double("model.gamma", out.params.gamma);
    out.params.N = static_cast<int>(cfg.get_long("model.N", out.params.N));
    out.params.domain_radius = cfg.get_double("model.R", out.params.domain_radius);
    out.params.critical = cfg.get_bool("model.critical", out.params.critical);

    out.n_nodes = static_cast<int>(cfg.get_long("grid.n_nodes", out.n_nodes));
    out.spacing = parse_spacing(cfg.get_string("grid.spacing", spacing_name(out.spacing)));
    out.refined_fraction = cfg.get_double("grid.refined_fraction", out.refined_fraction);

    out.scheme = parse_scheme(cfg.get_string("solver.scheme", scheme_name(out.scheme)));
    out.safety = cfg.get_double("solver.safety", out.safety);
    out.max_dt = cfg.get_double("solver.max_dt", out.max_dt);
    out.fixed_dt = cfg.get_double("solver.fixed_dt", out.fixed_dt);
    out.stop_sup = cfg.get_double("solver.stop_sup", out.stop_sup);
    out.t_horizon = cfg.get_double("solver.t_horizon", out.t_horizon);
    out.max_steps = cfg.get_long("solver.max_steps", out.max_steps);
    out.snapshot_ds = cfg.get_double("solver.snapshot_ds", out.snapshot_ds);
    out.max_snapshots = static_cast<int>(cfg.get_long("solver.max_snapshots", out.max_snapshots));

    out.ss.A = cfg.get_double("shrink.A", out.ss.A);
    out.ss.K0 = cfg.get_double("shrink.K0", out.ss.K0);
    out.ss.epsilon0 = cfg.get_double("shrink.epsilon0", out.ss.epsilon0);
    out.ss.alpha0 = cfg.get_double("shrink.alpha0", out.ss.alpha0);
    out.ss.delta0 = cfg.get_double("shrink.delta0", out.ss.delta0);
    out.ss.C0 = cfg.get_double("shrink.C0", out.ss.C0);
    out.ss.eta0 = cfg.get_double("shrink.eta0", out.ss.eta0);

    out.initial_kind = cfg.get_string("initial.kind", out.initial_kind);
    out.bump_amplitude = cfg.get_double("initial.bump_amplitude", out.bump_amplitude);
    out.bump_width2 = cfg.get_double("initial.bump_width2", out.bump_width2);
    out.constant_value = cfg.get_double("initial.constant_value", out.constant_value);
    out.prepared.d0 = cfg.get_double("initial.d0", out.prepared.d0);
    out.prepared.d1 = split_list(cfg.get_string("initial.d1", join_list(out.prepared.d1)));
    out.prepared.T = cfg.get_double("initial.T", out.prepared.T);
    out.prepared.A = cfg.get_double("initial.A", out.prepared.A);
    out.prepared.K0 = cfg.get_double("initial.K0", out.prepared.K0);
    out.prepared.s0_floor = cfg.get_double("initial.s0_floor", out.prepared.s0_floor);

    out.output_dir = cfg.get_string("output.dir", out.output_dir);
    out.seed = static_cast<std::uint64_t>(cfg.get_long("run.seed", 0));

    validate_run_config(out);
    return out;
}

Config RunConfig::to_config() const {
    Config cfg;
    cfg.set_double("model.p", params.p);
    cfg.set_double("model.r", params.r);
    cfg.set_double("model.gamma", params.gamma);
    cfg.set_long("model.N", params.N);
    cfg.set_double("model.R", params.domain_radius);
    cfg.set("model.critical", params.critical ? "true" : "false");

    cfg.set_long("grid.n_nodes", n_nodes);
    cfg.set("grid.spacing", spacing_name(spacing));
    cfg.set_double("grid.refined_fraction", refined_fraction);

    cfg.set("solver.scheme", scheme_name(scheme));
    cfg.set_double("solver.safety", safety);
    cfg.set_double("solver.max_dt", max_dt);
    cfg.set_double("solver.fixed_dt", fixed_dt);
    cfg.set_double("solver.stop_sup", stop_sup);
    cfg.set_double("solver.t_horizon", t_horizon);
    cfg.set_long("solver.max_steps", max_steps);
    cfg.set_double("solver.snapshot_ds", snapshot_ds);
    cfg.set_long("solver.max_snapshots", max_snapshots);

    cfg.set_double("shrink.A", ss.A);
    cfg.set_double("shrink.K0", ss.K0);
    cfg.set_double("shrink.epsilon0", ss.epsilon0);
    cfg.set_double("shrink.alpha0", ss.alpha0);
    cfg.set_double("shrink.delta0", ss.delta0);
    cfg.set_double("shrink.C0", ss.C0);
    cfg.set_double("shrink.eta0", ss.eta0);

    cfg.set("initial.kind", initial_kind);
    cfg.set_double("initial.bump_amplitude", bump_amplitude);
    cfg.set_double("initial.bump_width2", bump_width2);
    cfg.set_double("initial.constant_value", constant_value);
    cfg.set_double("initial.d0", prepared.d0);
    cfg.set("initial.d1", join_list(prepared.d1));
    cfg.set_double("initial.T", prepared.T);
    cfg.set_double("initial.A", prepared.A);
    cfg.set_double("initial.K0", prepared.K0);
    cfg.set_double("initial.s0_floor", prepared.s0_floor);

    cfg.set("output.dir", output_dir);
    cfg.set_long("run.seed", static_cast<long>(seed));
    return cfg;
}

FitResult fit_log_exponent(const std::vector<double>& t, const std::vector<double>& v,
                           double T_est) {
    if (t.size() != v.size())
        throw std::invalid_argument("fit_log_exponent: series lengths differ");
    std::vector<double> xs, ys, gaps;
    xs.reserve(t.size());
    for (size_t i = 0; i < t.size(); ++i) {
        const double gap = T_est - t[i];
        if (!(gap > 0.0) || !(v[i] > 0.0)) continue;
        const double L = std::abs(std::log(gap));
        if (L <= 0.0) continue;
        xs.push_back(std::log(L));
        ys.push_back(std::log(v[i]));
        gaps.push_back(gap);
    }
    const int n = static_cast<int>(xs.size());
    if (n < 20)
        throw std::invalid_argument(
            fmt("fit_log_exponent: need >= 20 usable samples, have %d", n));
    const auto [lo, hi] = std::minmax_element(gaps.begin(), gaps.end());
    const double decades = std::log10(*hi / *lo);
    if (decades < 2.0)
        throw std::invalid_argument(
            fmt("fit_log_exponent: T_est - t spans %.3f decades, need >= 2", decades));

    // a constant series has log-exponent exactly zero; skip the regression so
    // rounding in the sums cannot manufacture a spurious slope
    const bool constant = std::all_of(ys.begin(), ys.end(),
                                      [&](double y) { return y == ys.front(); });
    if (constant) {
        FitResult out;
        out.exponent = 0.0;
        out.stderr_ = 0.0;
        out.n = n;
        out.decades = decades;
        return out;
    }

    double xb = 0.0, yb = 0.0;
    for (int i = 0; i < n; ++i) {
        xb += xs[i];
        yb += ys[i];
    }
    xb /= n;
    yb /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (xs[i] - xb) * (xs[i] - xb);
        sxy += (xs[i] - xb) * (ys[i] - yb);
    }
    const double slope = sxy / sxx;
    const double icept = yb - slope * xb;
    double ssr = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = ys[i] - (icept + slope * xs[i]);
        ssr += r * r;
    }
    FitResult out;
    out.exponent = slope;
    out.stderr_ = std::sqrt(ssr / (n - 2) / sxx);
    out.n = n;
    out.decades = decades;
    return out;
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw std::runtime_error("ensure_dir: cannot create " + path + ": " + ec.message());
}

std::string output_root() {
    const char* env = std::getenv("BLOWUPSIM_OUTPUT_ROOT");
    return env != nullptr && *env != '\0' ? std::string(env) : std::string(".");
}

std::string path_join(const std::string& a, const std::string& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (std::filesystem::path(b).is_absolute()) return b;
    return (std::filesystem::path(a) / b).string();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("write_text_file: cannot open " + path);
    f << content;
    f.close();
    if (!f) throw std::runtime_error("write_text_file: write failed for " + path);
}

ExperimentRecord run_experiment(const RunConfig& config) {
    ExperimentRecord rec;
    rec.config = config;
    stage("config", [&] {
        validate_run_config(rec.config);
        return 0;
    });
    const RunConfig& cfg = rec.config;
    rec.config_hash = cfg.to_config().hash();

    GridPtr grid = stage("grid", [&] {
        return build_grid(cfg.params.domain_radius, cfg.n_nodes, cfg.params.N, cfg.spacing,
                          cfg.refined_fraction);
    });
    RadialField u0 = stage("initial-data", [&] {
        if (cfg.initial_kind == "bump") {
            const double amp = cfg.bump_amplitude, w2 = cfg.bump_width2;
            return make_field(grid, [&](double rho) { return amp * std::exp(-rho * rho / w2); });
        }
        if (cfg.initial_kind == "constant") {
            const double cv = cfg.constant_value;
            return make_field(grid, [&](double) { return cv; });
        }
        return construct_initial_data(cfg.prepared, cfg.params, cfg.constants, grid);
    });

    rec.trajectory = stage("solver", [&] { return run_to_blowup(u0, solver_config(cfg)); });
    if (!rec.trajectory.note.empty()) rec.notes.push_back("solver: " + rec.trajectory.note);

    if (!rec.trajectory.blowup) {
        rec.notes.push_back("solver: no blowup estimate, similarity diagnostics skipped");
    } else {
        const double T_est = rec.trajectory.blowup->T_est;
        const double floor = grid_trust_floor(*grid);
        const ProfileSpec spec(cfg.params, cfg.constants);
        const double inv = 1.0 / (cfg.params.p - 1.0);

        ShrinkingSetReport last_report;
        bool have_report = false;
        for (const Snapshot& snap : rec.trajectory.snapshots) {
            const double rho = T_est - snap.t;
            if (rho < floor) break;                 // core scale below grid resolution
            if (rho >= std::exp(-1.0)) continue;    // s < 1: not yet in the similarity regime
            SimilarityFrame frame = stage("similarity", [&] {
                return to_similarity(snap.u, snap.t, T_est, snap.theta, cfg.ss.K0, cfg.params);
            });
            ProfileErrorSample pe;
            pe.s = frame.s;
            for (size_t i = 0; i < frame.y_nodes.size(); ++i) {
                if (frame.y_nodes[i] > 5.0) break;
                pe.sup_err = std::max(
                    pe.sup_err, std::abs(frame.W[i] - profile_phi(spec, frame.y_nodes[i], frame.s)));
            }
            pe.rate_constant = std::pow(rho, inv) * sup_norm(snap.u);
            rec.profile_error.push_back(pe);

            stage("spectral", [&] {
                const std::vector<double> qv = compute_q(frame, spec);
                const AxisSamples qs{frame.y_nodes, qv};
                const ModeDecomposition dec = decompose(qs, frame.s, cfg.ss.K0, cfg.params.N, 64);
                const double grad = grad_perp_weighted_sup(qs, frame.s, cfg.ss.K0, 64);
                const ShrinkingSetReport rep =
                    shrinking_set_check(dec, grad, cfg.ss, BoundFlavor::evolution);
                ModeSample ms;
                ms.s = frame.s;
                ms.q0 = dec.q0;
                ms.q1 = dec.q1_axis;
                ms.q2 = dec.q2_axis;
                ms.q_minus_weighted = weighted_cubic_sup(dec.q_minus);
                ms.grad_perp_weighted = grad;
                for (double qe : dec.q_e.v) ms.q_e_sup = std::max(ms.q_e_sup, std::abs(qe));
                ms.member = rep.member;
                ms.first_fail = first_failing_clause(rep);
                rec.modes.push_back(ms);
                last_report = rep;
                have_report = true;
                return 0;
            });
        }
        rec.trusted_samples = static_cast<int>(rec.profile_error.size());

        if (cfg.params.gamma > 0.0) {
            // the fit window starts where blowup takes over, read off as the
            // running maximum of theta (theta rises under dissipation, falls
            // once the nonlocal norm grows)
            const auto& tt = rec.trajectory.times;
            const auto& th = rec.trajectory.theta_series;
            size_t start = 0;
            for (size_t i = 0; i < th.size(); ++i)
                if (th[i] > th[start]) start = i;
            std::vector<double> ft, fv;
            for (size_t i = start; i < tt.size(); ++i) {
                const double rho = T_est - tt[i];
                if (!(rho > 0.0) || rho < floor) continue;
                ft.push_back(tt[i]);
                fv.push_back(th[i]);
            }
            try {
                rec.theta_fit = fit_log_exponent(ft, fv, T_est);
                rec.notes.push_back(fmt(
                    "fit: theta log-exponent %.6g +- %.2g over %.3g decades (n=%d), "
                    "predicted -beta = %.6g, window bias %+.3g",
                    rec.theta_fit->exponent, rec.theta_fit->stderr_, rec.theta_fit->decades,
                    rec.theta_fit->n, -cfg.constants.beta,
                    rec.theta_fit->exponent + cfg.constants.beta));
            } catch (const std::invalid_argument& e) {
                rec.notes.push_back(std::string("fit: ") + e.what());
            }
        } else {
            rec.notes.push_back("fit: theta constant under gamma = 0, no exponent fit");
        }

        if (cfg.initial_kind == "prepared") {
            const S0Report s0 = stage("intermediate", [&] {
                return verify_in_S0(cfg.prepared, cfg.params, cfg.constants, cfg.ss);
            });
            rec.verdicts = s0.bulk.clauses;
            rec.verdicts_pass = s0.bulk_pass;
            rec.notes.push_back(fmt(
                "initial-set: theta(0) = %.9g predicted %.9g eps = %+.3e, entry %s "
                "(min margin %.3g), p2 gap %.4g grad %.4g",
                s0.theta0, s0.theta0_predicted, s0.eps_correction, s0.bulk_pass ? "PASS" : "FAIL",
                s0.min_margin, s0.p2_gap, s0.p2_grad));
        } else if (have_report) {
            rec.verdicts = last_report.clauses;
            rec.verdicts_pass = last_report.member;
            rec.notes.push_back(fmt("spectral: final trusted snapshot membership %s at s = %.4g",
                                    last_report.member ? "yes" : "no",
                                    rec.modes.back().s));
        }
    }

    stage("export", [&] {
        export_record(rec, path_join(output_root(), cfg.output_dir));
        return 0;
    });
    return rec;
}

std::string SweepResult::text() const {
    std::string out = "     d0      d1  exit        steps        s   q0_at_exit\n";
    for (const ExitRecord& e : entries) {
        out += fmt("%+7.3f %+7.3f  %-10s  %5d %8.4f   %+.3e\n", e.d0, e.d1,
                   e.censored ? "censored" : e.first_clause.c_str(), e.steps, e.exit_s,
                   e.q0_at_exit);
    }
    out += fmt("boundary exits via (q0,q1) within 3 steps: %s\n",
               boundary_exits_q01_fast ? "yes" : "no");
    out += fmt("q0 exit direction changes sign: %s\n", q0_sign_change ? "yes" : "no");
    return out;
}

SweepResult shooting_sweep_model(const ModelParameters& params, const DerivedConstants& c,
                                 const ShrinkingSetConfig& cfg, double s0, int per_side,
                                 double horizon_s, const LambdaSource& lambda_tilde) {
    validate(params);
    validate(cfg);
    if (per_side < 2) throw std::invalid_argument("shooting_sweep_model: per_side must be >= 2");
    if (s0 < 1.0) throw std::invalid_argument("shooting_sweep_model: s0 must be >= 1");
    if (horizon_s <= s0)
        throw std::invalid_argument("shooting_sweep_model: horizon_s must exceed s0");
    const double ds = 0.05;  // fixed step so "exit within k steps" is well defined
    const double A = cfg.A;
    const double box0 = A * A * A / std::pow(s0, 1.5);
    const double box1 = A / (s0 * s0);

    // continuation in s of the admissible box, in the evolution normalization
    const auto first_violation = [&](const QModeState& q) -> std::string {
        const double s32 = std::pow(q.s, 1.5);
        const double s2 = q.s * q.s;
        if (std::abs(q.q0) > A * A * A / s32) return "q0";
        double m1 = 0.0;
        for (double x : q.q1) m1 = std::max(m1, std::abs(x));
        if (m1 > A / s2) return "q1";
        double m2 = 0.0;
        for (double x : q.q2) m2 = std::max(m2, std::abs(x));
        if (m2 > A * A * A * A / s32) return "q2";
        return "";
    };

    SweepResult out;
    for (int i = 0; i < per_side; ++i) {
        for (int j = 0; j < per_side; ++j) {
            const double d0 = -1.0 + 2.0 * i / (per_side - 1);
            const double d1 = -1.0 + 2.0 * j / (per_side - 1);
            std::vector<double> q1(params.N, 0.0);
            q1[0] = d1 * box1;
            QModeState st = make_q_mode_state(s0, d0 * box0, q1, params.N);
            ExitRecord er;
            er.d0 = d0;
            er.d1 = d1;
            int steps = 0;
            std::string clause = first_violation(st);
            while (clause.empty() && st.s < horizon_s) {
                st = q_mode_step(st, ds, params, c, lambda_tilde);
                ++steps;
                clause = first_violation(st);
            }
            er.first_clause = clause;
            er.censored = clause.empty();
            er.exit_s = st.s;
            er.steps = steps;
            er.q0_at_exit = st.q0;
            out.entries.push_back(er);
        }
    }
    finalize_sweep(out, 1.0);
    return out;
}

SweepResult shooting_sweep_pde(const RunConfig& base, int per_side) {
    RunConfig cfg = base;
    validate_run_config(cfg);
    if (cfg.initial_kind != "prepared")
        throw std::invalid_argument("shooting_sweep_pde: base config must use prepared data");
    if (per_side < 2) throw std::invalid_argument("shooting_sweep_pde: per_side must be >= 2");

    GridPtr grid = build_grid(cfg.params.domain_radius, cfg.n_nodes, cfg.params.N, cfg.spacing,
                              cfg.refined_fraction);
    const double floor = grid_trust_floor(*grid);
    const ProfileSpec spec(cfg.params, cfg.constants);

    SweepResult out;
    for (int i = 0; i < per_side; ++i) {
        for (int j = 0; j < per_side; ++j) {
            const double d0 = -2.0 + 4.0 * i / (per_side - 1);
            const double d1 = -2.0 + 4.0 * j / (per_side - 1);
            PreparedDataSpec ps = cfg.prepared;
            ps.d0 = d0;
            ps.d1.assign(cfg.params.N, 0.0);
            ps.d1[0] = d1;
            validate_prepared(ps, cfg.params);

            ExitRecord er;
            er.d0 = d0;
            er.d1 = d1;
            er.censored = true;
            const RadialField u0 = construct_initial_data(ps, cfg.params, cfg.constants, grid);
            const TrajectoryRecord traj = run_to_blowup(u0, solver_config(cfg));
            if (traj.blowup) {
                const double T_est = traj.blowup->T_est;
                int checked = 0;
                for (const Snapshot& snap : traj.snapshots) {
                    const double rho = T_est - snap.t;
                    if (rho < floor) break;
                    if (rho >= std::exp(-1.0)) continue;
                    const SimilarityFrame frame =
                        to_similarity(snap.u, snap.t, T_est, snap.theta, cfg.ss.K0, cfg.params);
                    ++checked;
                    const std::vector<double> qv = compute_q(frame, spec);
                    const AxisSamples qs{frame.y_nodes, qv};
                    const ModeDecomposition dec =
                        decompose(qs, frame.s, cfg.ss.K0, cfg.params.N, 64);
                    const double grad = grad_perp_weighted_sup(qs, frame.s, cfg.ss.K0, 64);
                    const ShrinkingSetReport rep =
                        shrinking_set_check(dec, grad, cfg.ss, BoundFlavor::evolution);
                    er.exit_s = frame.s;
                    er.steps = checked;
                    er.q0_at_exit = dec.q0;
                    if (!rep.member) {
                        er.first_clause = first_failing_clause(rep);
                        er.censored = false;
                        break;
                    }
                }
            }
            out.entries.push_back(er);
        }
    }
    finalize_sweep(out, 2.0);
    return out;
}

void export_record(const ExperimentRecord& record, const std::string& dir) {
    ensure_dir(dir);
    write_text_file(path_join(dir, "config.cfg"), record.config.to_config().canonical());

    const bool have_T = record.trajectory.blowup.has_value();
    const double T_est = have_T ? record.trajectory.blowup->T_est : 0.0;
    std::string csv = "t,sup_u,theta,dt,L\n";
    for (size_t i = 0; i < record.trajectory.times.size(); ++i) {
        const double t = record.trajectory.times[i];
        const double L =
            have_T && T_est - t > 0.0 ? std::abs(std::log(T_est - t)) : std::nan("");
        csv += num17(t) + "," + num17(record.trajectory.sup_u[i]) + "," +
               num17(record.trajectory.theta_series[i]) + "," +
               num17(record.trajectory.dt_series[i]) + "," + num17(L) + "\n";
    }
    write_text_file(path_join(dir, "trajectory.csv"), csv);

    csv = "s,sup_err,rate_constant\n";
    for (const ProfileErrorSample& pe : record.profile_error)
        csv += num17(pe.s) + "," + num17(pe.sup_err) + "," + num17(pe.rate_constant) + "\n";
    write_text_file(path_join(dir, "profile_error.csv"), csv);

    csv = "s,q0,q1,q2,q_minus_weighted,grad_perp_weighted,q_e_sup,member,first_fail\n";
    for (const ModeSample& ms : record.modes) {
        csv += num17(ms.s) + "," + num17(ms.q0) + "," + num17(ms.q1) + "," + num17(ms.q2) + "," +
               num17(ms.q_minus_weighted) + "," + num17(ms.grad_perp_weighted) + "," +
               num17(ms.q_e_sup) + "," + (ms.member ? "1" : "0") + "," + ms.first_fail + "\n";
    }
    write_text_file(path_join(dir, "modes.csv"), csv);

    csv = "exponent,stderr,n,decades\n";
    if (record.theta_fit) {
        csv += num17(record.theta_fit->exponent) + "," + num17(record.theta_fit->stderr_) + "," +
               fmt("%d", record.theta_fit->n) + "," + num17(record.theta_fit->decades) + "\n";
    }
    write_text_file(path_join(dir, "fit.csv"), csv);

    // flatness of the locally rescaled solution across the intermediate
    // region; analytic (initial-time) scan, so it only exists for prepared data
    if (record.config.initial_kind == "prepared") {
        csv = "x,rho,U,hat_U,gap\n";
        try {
            const RunConfig& cfg = record.config;
            const PreparedDataSpec& ps = cfg.prepared;
            const S0Report rep = verify_in_S0(ps, cfg.params, cfg.constants, cfg.ss);
            const double inv = 1.0 / (cfg.params.p - 1.0);
            const double x_lo = region_boundary_x(ps.T, ps.K0);
            const double x_hi =
                std::min({cfg.ss.epsilon0, 0.9 * 0.25 * ps.K0 * std::exp(-0.5),
                          0.999 * cfg.params.domain_radius});
            if (x_hi > x_lo) {
                const auto theta_fn = [&](double) { return rep.theta0; };
                for (int k = 0; k < 25; ++k) {
                    const double x = x_lo * std::pow(x_hi / x_lo, k / 24.0);
                    const double t_x = solve_t_of_x(x, ps.K0, ps.T);
                    const double rho = ps.T - t_x;
                    const double tau0 = std::max(0.0, -t_x / rho);
                    const double U = std::pow(rho, inv) * std::pow(rep.theta0, inv) *
                                     prepared_value(ps, cfg.params, cfg.constants, x);
                    const double hU = hat_U(x, tau0, theta_fn, cfg.params, cfg.constants, ps.K0,
                                            ps.T);
                    csv += num17(x) + "," + num17(rho) + "," + num17(U) + "," + num17(hU) + "," +
                           num17(std::abs(U - hU)) + "\n";
                }
            }
        } catch (const std::exception&) {
            // scan is diagnostic only; an unverifiable spec leaves the header
        }
        write_text_file(path_join(dir, "p2.csv"), csv);
    }

    write_text_file(path_join(dir, "summary.txt"), record_summary(record));
    write_text_file(path_join(dir, "plot.py"), kPlotScript);
}

std::string record_summary(const ExperimentRecord& record) {
    const RunConfig& cfg = record.config;
    std::string out;
    out += fmt("config hash: %016llx\n",
               static_cast<unsigned long long>(record.config_hash));
    out += fmt("params: p=%g N=%d R=%g gamma=%g r=%g critical=%s\n", cfg.params.p, cfg.params.N,
               cfg.params.domain_radius, cfg.params.gamma, cfg.params.r,
               cfg.params.critical ? "yes" : "no");
    out += fmt("constants: kappa=%.9g beta=%.9g b=%.9g theta_inf=%.9g\n", cfg.constants.kappa,
               cfg.constants.beta, cfg.constants.b_coef, cfg.constants.theta_inf);
    out += fmt("grid: %d nodes, %s, refined fraction %g\n", cfg.n_nodes,
               spacing_name(cfg.spacing).c_str(), cfg.refined_fraction);
    out += fmt("initial data: %s\n", cfg.initial_kind.c_str());

    const auto& tr = record.trajectory;
    if (tr.times.empty()) {
        out += "trajectory: empty\n";
    } else {
        const auto [smin, smax] = std::minmax_element(tr.sup_u.begin(), tr.sup_u.end());
        out += fmt("trajectory: %zu rows, %zu snapshots, sup [%.6g, %.6g], t final %.9g\n",
                   tr.times.size(), tr.snapshots.size(), *smin, *smax, tr.times.back());
    }
    if (tr.blowup) {
        out += fmt("blowup: T_est = %.12g +- %.2g (%d samples)\n", tr.blowup->T_est,
                   tr.blowup->uncertainty, tr.blowup->samples_used);
    } else {
        out += "blowup: no estimate\n";
    }
    out += fmt("trusted snapshots: %d\n", record.trusted_samples);
    if (!record.profile_error.empty()) {
        out += fmt("profile error: %.6g -> %.6g over %zu samples\n",
                   record.profile_error.front().sup_err, record.profile_error.back().sup_err,
                   record.profile_error.size());
        out += fmt("rate constant at final trusted sample: %.6g (kappa = %.6g)\n",
                   record.profile_error.back().rate_constant, cfg.constants.kappa);
    }
    if (!record.modes.empty()) {
        const ModeSample& ms = record.modes.back();
        out += fmt("modes at s=%.4g: q0=%+.4e q1=%+.4e q2=%+.4e member=%s\n", ms.s, ms.q0, ms.q1,
                   ms.q2, ms.member ? "yes" : "no");
    }
    if (record.theta_fit) {
        out += fmt("theta fit: exponent %.9g +- %.3g (n=%d, %.3g decades)\n",
                   record.theta_fit->exponent, record.theta_fit->stderr_, record.theta_fit->n,
                   record.theta_fit->decades);
    }
    for (const ClauseVerdict& cl : record.verdicts)
        out += fmt("verdict %-10s value=%.6e bound=%.6e %s\n", cl.name.c_str(), cl.value,
                   cl.bound, cl.pass ? "PASS" : "FAIL");
    out += fmt("verdicts: %s\n", record.verdicts_pass ? "PASS" : "FAIL");
    for (const std::string& n : record.notes) out += "note: " + n + "\n";
    return out;
}

}  // namespace blowup
