#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vortex/grid.hpp"

namespace vortex {

/// Weighted atoms on the torus T^dim, coordinates in [-1/2, 1/2).
struct WeightedPoints {
    int dim = 2;
    /// n * dim coordinates, atom-major.
    std::vector<double> coords;
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
    const double* atom(std::size_t i) const { return coords.data() + i * static_cast<std::size_t>(dim); }

    /// Equal weights 1/n.
    static WeightedPoints empirical(const std::vector<Vec2>& pts);
    static WeightedPoints empirical(int dim, std::vector<double> coords);
    /// Throws std::invalid_argument unless weights are non-negative with sum 1 (1e-9).
    void validate() const;
};

/// Atoms at the centres of the side x side cells with the exact cell masses of the
/// trigonometric interpolant of rho (renormalized to 1; negative masses rejected).
WeightedPoints quantize(const GridField& rho, int side);

/// Product of two weighted point sets on T^(d1 + d2).
WeightedPoints product(const WeightedPoints& a, const WeightedPoints& b);

/// Largest support accepted by the exact solver, per side.
inline constexpr std::size_t kExactMaxSupport = 4096;

struct ExactTransport {
    /// Optimal value of sum P_ij |x_i - y_j|^2 (torus metric) and its square root.
    double cost = 0.0;
    double w2 = 0.0;
    /// Non-zero plan entries (i, j, mass).
    struct Entry {
        int i;
        int j;
        double mass;
    };
    std::vector<Entry> plan;
    /// Dual potentials with u_i + v_j <= c_ij and sum a u + sum b v = cost.
    std::vector<double> u, v;
    long pivots = 0;
};

/// Exact optimal transport by the primal network simplex (block-search pivoting) on the
/// complete bipartite graph.  Masses are scaled to integers (2^40 total) so that the
/// combinatorial part is exact; costs stay in floating point.  Throws
/// std::invalid_argument if either side exceeds kExactMaxSupport atoms.
ExactTransport w2_exact(const WeightedPoints& a, const WeightedPoints& b);

struct EntropicTransport {
    /// sqrt of the debiased Sinkhorn divergence S = OT(a,b) - (OT(a,a) + OT(b,b))/2.
    double w2 = 0.0;
    /// Transport cost <P, C> of the entropic plan between a and b (biased upward).
    double plan_cost = 0.0;
    double reg = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string note;
};

/// Log-domain Sinkhorn with regularization reg on the squared torus cost.  Convergence is
/// the sup change of the dual potentials relative to reg falling below tol.
EntropicTransport w2_entropic(const WeightedPoints& a, const WeightedPoints& b, double reg = 5e-3,
                              int max_iters = 500, double tol = 1e-7);

enum class W2Method { Exact, Entropic };

W2Method parse_w2_method(const std::string& s);

/// W2 under the torus metric.
double wasserstein2_torus(const WeightedPoints& a, const WeightedPoints& b, W2Method method = W2Method::Exact,
                          double reg = 5e-3);
/// Grid densities are quantized at side x side cell centres first.
double wasserstein2_torus(const GridField& a, const GridField& b, int side, W2Method method = W2Method::Exact);

}  // namespace vortex
