#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "blowup/params.hpp"

namespace blowup {

enum class GridSpacing { uniform, origin_refined };

// Radial grid on [0, R] carrying N-dimensional volume quadrature weights:
//   integrate(f) = sum_i w_i f(rho_i)  approximates  int_Omega f(|x|) dx.
// Weights are exact moments of the piecewise-linear interpolant against
// N omega_N rho^{N-1} d rho, so sum_i w_i equals |Omega| to rounding.
struct RadialGrid {
    int N = 1;
    double R = 1.0;
    GridSpacing spacing = GridSpacing::uniform;
    std::vector<double> nodes;           // strictly increasing, nodes.front()=0, nodes.back()=R
    std::vector<double> volume_weights;  // positive, sums to |Omega|

    int size() const { return static_cast<int>(nodes.size()); }
    double measure() const;  // sum of volume_weights
};

using GridPtr = std::shared_ptr<const RadialGrid>;

// origin-refined places refined_fraction of the nodes inside rho <= R/10.
GridPtr build_grid(double R, int n_nodes, int N,
                   GridSpacing spacing = GridSpacing::uniform,
                   double refined_fraction = 0.5);

// grid over externally supplied nodes (checkpoint restore, frame images);
// nodes must be strictly increasing and start at 0
GridPtr grid_from_nodes(std::vector<double> nodes, int N);

struct RadialField {
    GridPtr grid;
    std::vector<double> values;

    RadialField() = default;
    explicit RadialField(GridPtr g) : grid(std::move(g)), values(grid->nodes.size(), 0.0) {}
    RadialField(GridPtr g, std::vector<double> v);

    int size() const { return static_cast<int>(values.size()); }
};

RadialField make_field(GridPtr grid, const std::function<double(double)>& f);

// int_Omega u dx by the grid weights.
double integrate(const RadialField& u);

// int_Omega u^q dx; rejects negative samples when q is fractional.
double integrate_power(const RadialField& u, double q);

// theta = (|Omega|^{-1} int_Omega u^r dx)^{-gamma}.
double compute_theta(const RadialField& u, const ModelParameters& params);

double sup_norm(const RadialField& u);

// Piecewise-linear evaluation at rho in [0, R]; clamps to the endpoints.
double evaluate(const RadialField& u, double rho);

// u'' + (N-1) u'/rho with symmetry at the origin (Delta u(0) = N u''(0))
// and a Neumann ghost condition u'(R) = 0 at the outer boundary.
RadialField laplacian_radial(const RadialField& u);

// Two-column CSV (rho,value) with a metadata header line.
std::string field_to_csv(const RadialField& u);

}  // namespace blowup
