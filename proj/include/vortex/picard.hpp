#pragma once

#include <vector>

#include "vortex/meanfield.hpp"

namespace vortex {

struct PicardOptions {
    int n = 64;
    /// Spacing of the stored time slices; adjusted down so that it divides T.
    double dt_quad = 2e-3;
    /// Trapezoid nodes in tau = sqrt(t - s) per Duhamel integral.
    int tau_nodes = 512;
    double kernel_strength = 1.0;
    /// Required ratio between successive iterate distances after the first two.
    double contraction = 0.9;
    /// Distances below this are converged and exempt from the contraction check.
    double floor = 1e-11;
};

struct PicardResult {
    /// Last iterate at time T.
    GridField field;
    /// Iterate k at time T, k = 0..iters.
    std::vector<GridField> iterates;
    /// distances[k-1] = sup over stored times and grid of |rho^(k) - rho^(k-1)|.
    std::vector<double> distances;
    int time_slices = 0;
};

/// Picard iteration through the heat semigroup.  Iterate 0 is the heat flow of rho0;
/// iterate k solves the linear problem with velocity u^(k-1) in Duhamel form
///   rho^(k)(t) = G(t) * rho0 - int_0^t G(t - s) * (u^(k-1) . grad rho^(k))(s) ds,
/// with s = t - tau^2 and the trapezoid rule in tau; the transport term is interpolated
/// in time by cubic Lagrange polynomials through the stored slices.  The implicit
/// dependence on rho^(k) is resolved slice by slice, forward in time.
/// Throws HorizonTooLarge if the iterates stop contracting.
PicardResult picard_iterate(const InitialDensity& rho0, double T, int iters, const PicardOptions& opt);

GridField solve_picard(const InitialDensity& rho0, double T, int iters, int n, double dt_quad);

}  // namespace vortex
