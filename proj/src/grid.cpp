#include "blowup/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace blowup {

namespace {

// Exact moments of rho^{N-1} over [a, c]:
//   M0 = int a^c rho^{N-1} d rho = (c^N - a^N)/N
//   M1 = int a^c rho^N     d rho = (c^{N+1} - a^{N+1})/(N+1)
// Distributing the piecewise-linear hat functions gives per-interval weight
// contributions whose total telescopes to R^N/N, so the weight sum is
// omega_N R^N = |Omega| up to rounding only.
void accumulate_weights(int N, double surface_factor, const std::vector<double>& nodes,
                        std::vector<double>& w) {
    const int n = static_cast<int>(nodes.size());
    for (int i = 0; i + 1 < n; ++i) {
        const double a = nodes[i];
        const double c = nodes[i + 1];
        const double h = c - a;
        const double M0 = (std::pow(c, N) - std::pow(a, N)) / N;
        const double M1 = (std::pow(c, N + 1) - std::pow(a, N + 1)) / (N + 1);
        w[i] += surface_factor * (c * M0 - M1) / h;
        w[i + 1] += surface_factor * (M1 - a * M0) / h;
    }
}

}  // namespace

double RadialGrid::measure() const {
    double s = 0.0;
    for (double w : volume_weights) s += w;
    return s;
}

GridPtr build_grid(double R, int n_nodes, int N, GridSpacing spacing,
                   double refined_fraction) {
    if (n_nodes < 16) throw std::invalid_argument("build_grid: n_nodes must be >= 16");
    if (!(R > 0.0)) throw std::invalid_argument("build_grid: R must be > 0");
    if (N < 1) throw std::invalid_argument("build_grid: N must be >= 1");
    if (!(refined_fraction > 0.0 && refined_fraction < 1.0))
        throw std::invalid_argument("build_grid: refined_fraction must be in (0,1)");

    auto grid = std::make_shared<RadialGrid>();
    grid->N = N;
    grid->R = R;
    grid->spacing = spacing;
    grid->nodes.resize(n_nodes);

    if (spacing == GridSpacing::uniform) {
        for (int i = 0; i < n_nodes; ++i)
            grid->nodes[i] = R * static_cast<double>(i) / (n_nodes - 1);
    } else {
        // refined_fraction of nodes uniform on [0, R/10], the rest on [R/10, R].
        const double split = R / 10.0;
        const int n_inner = std::max(2, static_cast<int>(refined_fraction * n_nodes));
        const int n_outer = n_nodes - n_inner;
        if (n_outer < 2)
            throw std::invalid_argument("build_grid: refined_fraction leaves too few outer nodes");
        for (int i = 0; i < n_inner; ++i)
            grid->nodes[i] = split * static_cast<double>(i) / n_inner;
        for (int j = 0; j < n_outer; ++j)
            grid->nodes[n_inner + j] =
                split + (R - split) * static_cast<double>(j) / (n_outer - 1);
    }
    grid->nodes.front() = 0.0;
    grid->nodes.back() = R;

    const double surface_factor = N * unit_ball_volume(N);
    grid->volume_weights.assign(n_nodes, 0.0);
    accumulate_weights(N, surface_factor, grid->nodes, grid->volume_weights);
    return grid;
}

GridPtr grid_from_nodes(std::vector<double> nodes, int N) {
    if (nodes.size() < 2) throw std::invalid_argument("grid_from_nodes: need >= 2 nodes");
    if (nodes.front() != 0.0)
        throw std::invalid_argument("grid_from_nodes: first node must be 0");
    for (size_t i = 0; i + 1 < nodes.size(); ++i)
        if (!(nodes[i] < nodes[i + 1]))
            throw std::invalid_argument("grid_from_nodes: nodes must strictly increase");
    if (N < 1) throw std::invalid_argument("grid_from_nodes: N must be >= 1");

    auto grid = std::make_shared<RadialGrid>();
    grid->N = N;
    grid->R = nodes.back();
    grid->spacing = GridSpacing::uniform;
    grid->nodes = std::move(nodes);
    grid->volume_weights.assign(grid->nodes.size(), 0.0);
    accumulate_weights(N, N * unit_ball_volume(N), grid->nodes, grid->volume_weights);
    return grid;
}

RadialField::RadialField(GridPtr g, std::vector<double> v)
    : grid(std::move(g)), values(std::move(v)) {
    if (static_cast<int>(values.size()) != grid->size())
        throw std::invalid_argument("RadialField: value count does not match grid");
}

RadialField make_field(GridPtr grid, const std::function<double(double)>& f) {
    RadialField u(grid);
    for (int i = 0; i < u.size(); ++i) u.values[i] = f(grid->nodes[i]);
    return u;
}

double integrate(const RadialField& u) {
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s += u.grid->volume_weights[i] * u.values[i];
    return s;
}

double integrate_power(const RadialField& u, double q) {
    if (!(q > 0.0)) throw std::invalid_argument("integrate_power: q must be > 0");
    const bool fractional = std::floor(q) != q;
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) {
        const double v = u.values[i];
        if (fractional && v < 0.0)
            throw std::domain_error("integrate_power: negative sample with fractional exponent");
        s += u.grid->volume_weights[i] * std::pow(v, q);
    }
    return s;
}

double compute_theta(const RadialField& u, const ModelParameters& params) {
    if (params.gamma == 0.0) return 1.0;
    const double mean = integrate_power(u, params.r) / params.domain_measure();
    if (mean <= 0.0)
        throw std::domain_error("compute_theta: field has no mass, theta undefined");
    return std::pow(mean, -params.gamma);
}

double sup_norm(const RadialField& u) {
    double m = 0.0;
    for (double v : u.values) m = std::max(m, std::abs(v));
    return m;
}

double evaluate(const RadialField& u, double rho) {
    const auto& x = u.grid->nodes;
    if (rho <= x.front()) return u.values.front();
    if (rho >= x.back()) return u.values.back();
    const auto it = std::upper_bound(x.begin(), x.end(), rho);
    const int i = static_cast<int>(it - x.begin()) - 1;
    const double t = (rho - x[i]) / (x[i + 1] - x[i]);
    return (1.0 - t) * u.values[i] + t * u.values[i + 1];
}

RadialField laplacian_radial(const RadialField& u) {
    const int n = u.size();
    if (n < 3) throw std::invalid_argument("laplacian_radial: need at least 3 nodes");
    const int N = u.grid->N;
    const auto& x = u.grid->nodes;
    const auto& v = u.values;
    RadialField out(u.grid);

    // Origin: u'(0) = 0 by symmetry, so Delta u(0) = N u''(0) with the
    // parabola through (0, v0), (h, v1) having zero slope at 0.
    {
        const double h = x[1] - x[0];
        out.values[0] = 2.0 * N * (v[1] - v[0]) / (h * h);
    }
    for (int i = 1; i + 1 < n; ++i) {
        const double hm = x[i] - x[i - 1];
        const double hp = x[i + 1] - x[i];
        const double denom = hm * hp * (hm + hp);
        const double upp = 2.0 * (hm * v[i + 1] - (hm + hp) * v[i] + hp * v[i - 1]) / denom;
        const double up =
            (hm * hm * v[i + 1] + (hp * hp - hm * hm) * v[i] - hp * hp * v[i - 1]) / denom;
        out.values[i] = upp + (N - 1) * up / x[i];
    }
    // Outer boundary: Neumann u'(R) = 0, so the drift term vanishes and the
    // parabola with zero slope at R gives u''(R) = 2(v_{n-2} - v_{n-1})/h^2.
    {
        const double h = x[n - 1] - x[n - 2];
        out.values[n - 1] = 2.0 * (v[n - 2] - v[n - 1]) / (h * h);
    }
    return out;
}

std::string field_to_csv(const RadialField& u) {
    std::string out;
    char buf[96];
    std::snprintf(buf, sizeof buf, "# radial field: N=%d R=%.17g n=%d spacing=%s\n",
                  u.grid->N, u.grid->R, u.size(),
                  u.grid->spacing == GridSpacing::uniform ? "uniform" : "origin-refined");
    out += buf;
    out += "rho,value\n";
    for (int i = 0; i < u.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", u.grid->nodes[i], u.values[i]);
        out += buf;
    }
    return out;
}

}  // namespace blowup
