#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "vortex/estimators.hpp"
#include "vortex/grid.hpp"
#include "vortex/kernel.hpp"
#include "vortex/particles.hpp"

namespace vortex {

/// Outcome of checking an inequality lhs <= rhs.  Constants that do not apply are NaN.
struct InequalityVerdict {
    std::string name;
    double lhs = 0.0;
    double lhs_stderr = 0.0;
    double rhs = 0.0;
    /// Round-off allowance for exact sums (0 for Monte-Carlo verdicts).
    double slack = 0.0;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double beta = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
    double eps = std::numeric_limits<double>::quiet_NaN();
    double eta = std::numeric_limits<double>::quiet_NaN();
    double C = std::numeric_limits<double>::quiet_NaN();
    /// Sup norm of the test function actually built.
    double sup = std::numeric_limits<double>::quiet_NaN();
    /// lhs + 3 lhs_stderr <= rhs + slack.
    bool pass = false;
    std::string note;
};

/// Exact check of E_mu Phi <= eta H_N(mu, nu) + (eta/N) log E_nu exp(N Phi / eta) on a
/// finite state space, with H_N = KL(mu | nu) / N.  Throws std::domain_error for eta <= 0
/// and std::invalid_argument for mismatched sizes, more than 10^4 states, or mu not
/// absolutely continuous w.r.t. nu.
InequalityVerdict change_of_measure_check(const std::vector<double>& mu, const std::vector<double>& nu,
                                          const std::vector<double>& Phi, double eta, int N);

/// Constants of the quadratic exponential moment bound.
struct MomentAConstants {
    double alpha = 0.0;
    double beta = 0.0;
    double C = 0.0;
};

/// alpha = (eps s)^4, beta = (sqrt(2 eps) s)^4, C = 2 (1 + 10 alpha / (1 - alpha)^3 + beta / (1 - beta)).
/// Throws std::domain_error unless s < 1/(2 eps), s < 1/eps, s^2 < 1/(2 eps), alpha < 1, beta < 1.
MomentAConstants moment_a_constants(double eps, double psi_sup);

/// gamma = (1600^2 + 36 e^4) phi_sup^2 (sup norm standing in for the sup_p L^p / p factor).
double moment_b_gamma(double phi_sup);

/// Discrete probability measure on states 0..M-1.
class DiscreteMeasure {
public:
    explicit DiscreteMeasure(std::vector<double> weights);
    std::size_t size() const { return w_.size(); }
    const std::vector<double>& weights() const { return w_; }
    /// State for a uniform u in [0, 1).
    std::size_t draw(double u) const;

private:
    std::vector<double> w_;
    std::vector<double> cdf_;
};

using PairFunction = std::function<double(std::size_t z, std::size_t x)>;

/// Monte-Carlo estimate of E exp((1/N) (sum_j psi(x_1, x_j))^2) under mu^N, compared to C.
/// psi_bound enters the constants and must dominate |psi|.
InequalityVerdict moment_a_verdict(const DiscreteMeasure& mu, const PairFunction& psi, double psi_bound,
                                   double eps, int N, int n_mc, uint64_t seed);

/// Monte-Carlo estimate of E exp((1/N) sum_{i,j} phi(x_i, x_j)) under mu^N, compared to
/// 2 / (1 - gamma(phi_sup)).  Throws std::domain_error if gamma >= 1.
InequalityVerdict moment_b_verdict(const DiscreteMeasure& mu, const PairFunction& phi, double phi_sup, int N,
                                   int n_mc, uint64_t seed);

/// Circular convolution on an n x n grid: out(a) = sum_b f(a - b) w(b), with f indexed so
/// that node i sits at -1/2 + i/n (so f(a - b) is entry a - b + n/2 mod n).
GridField grid_convolve(const GridField& f, const GridField& w);

/// Test functions built from the periodic V and a grid density rho_bar.  The reference
/// measure mu is rho_bar restricted to the grid nodes (weights rho_bar_g / sum), so that
/// the cancellations hold to round-off.
struct MomentFields {
    int n = 0;
    MatrixFieldV V;
    DiscreteMeasure mu{std::vector<double>{1.0}};
    /// V_ab * mu on the grid.
    std::array<GridField, 4> V_mu;
    /// Hessian entries of rho_bar (11, 12, 21, 22).
    std::array<GridField, 4> H;
    GridField rho;
    /// sup_z sum_ab |H_ab(z)|.
    double hess_sup = 0.0;

    static MomentFields build(const GridField& rho_bar);

    /// (V_ab(z - x) - V_ab * mu(z)) / |V|_inf for entry ab = 0..3.
    double psi(int ab, std::size_t z, std::size_t x) const;
    /// sum_ab (V_ab(z - x) - V_ab * mu(z)) H_ab(z) / rho_bar(z), not yet divided by C_A.
    double phi_raw(std::size_t z, std::size_t x) const;
    /// C_A = 4 sqrt(1600^2 + 36 e^4) |Hess rho_bar|_inf |V|_inf lambda.
    double c_a(double lambda) const;
    /// Largest |int phi(x, z) mu(dx)| and |int phi(z, x) mu(dx)| over z, for phi_raw.
    std::pair<double, double> phi_cancellation() const;
    /// Largest |int psi_ab(z, x) mu(dx)| over z and ab.
    double psi_cancellation() const;
};

/// Quadratic exponential moment verdict for psi_ab built from V; all four entries run
/// and the worst one (largest lhs + 3 stderr - rhs) is returned.  Throws std::domain_error
/// if the hypotheses fail and std::logic_error if the centring fails (1e-8).
InequalityVerdict mc_exponential_moment_A(const GridField& rho_bar, double eps, int N, int n_mc, uint64_t seed);

/// Pairwise exponential moment verdict for phi = phi_raw / C_A.  Throws std::domain_error if
/// gamma >= 1 and std::logic_error if either cancellation fails (1e-8).
InequalityVerdict mc_exponential_moment_B(const GridField& rho_bar, double lambda, int N, int n_mc, uint64_t seed);

/// Replica averages of the dissipation error terms.
struct DissipationTerms {
    Estimate A_N;
    Estimate B_N;
    /// DV entropy estimate of h_1 divided by the LSI constant; a proxy, not I_N.
    double I_proxy = 0.0;
};

/// A_N = (1/N^2) sum_{i,j} (V(x_i - x_j) - V * rho_bar(x_i)) : Hess rho_bar / rho_bar (x_i)
/// B_N = (1/N) sum_i |grad rho_bar / rho_bar|^2 (x_i) |(1/N) sum_j V(x_i - x_j) - V * rho_bar(x_i)|^2
/// with the periodic V at rho_bar's resolution, bilinear lookups and the j = i term
/// included.  Throws std::invalid_argument if rho_bar is coarser than 16 x 16.
DissipationTerms dissipation_terms(const Ensemble& ens, std::size_t snap, const GridField& rho_bar, double lambda);

/// The same for a single configuration (no standard error).
std::pair<double, double> dissipation_single(const std::vector<Vec2>& pos, const GridField& rho_bar);

}  // namespace vortex
