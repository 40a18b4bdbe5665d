#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "vortex/grid.hpp"

namespace vortex {

/// Closed-form band-limited initial density with its C_lambda bound.
///   uniform  1
///   default  1 + a cos(2 pi x1) cos(2 pi x2)             (a = 0.5)
///   shear    1 + a cos(2 pi x1)                          (a = 0.3)
///   twomode  1 + a cos(2 pi x1) + (2a/3) sin(2 pi (x1 + x2))     (a = 0.3)
/// The default form is a steady state of the Euler part (u . grad rho = 0), so its
/// evolution is pure heat flow; twomode exercises the nonlinearity.
struct InitialDensity {
    std::string id = "default";
    double amplitude = 0.5;
    double lambda = 2.0;

    double operator()(Vec2 x) const;
    GridField grid(int n) const;
    /// Guaranteed bounds of the closed form.
    double lower_bound() const;
    double upper_bound() const;
    std::string describe() const;
    /// Throws ConfigError unless lambda > 1 and 1/lambda <= rho0 <= lambda.
    void validate() const;

    /// "default", "uniform", "shear", "twomode", optionally "id:amplitude".
    static InitialDensity parse(const std::string& text, double lambda);
};

/// Norms of one density snapshot.
struct NormReport {
    double t = 0.0;
    double mass = 0.0;
    double l2_norm = 0.0;
    double grad_l2 = 0.0;
    double sup_norm = 0.0;
    double inf_value = 0.0;
    /// (order n, max over |alpha| = n of sup |d^alpha rho|).
    std::vector<std::pair<int, double>> derivative_sup;
    /// Entry n-1: trapezoid integral over solver steps of (order-n derivative sup)^2 on [0, t].
    std::vector<double> running_integrals;
    /// Largest relative residual per step of 1/2 d/dt |rho|^2 + |grad rho|^2 = 0, with the
    /// dissipation integrated along the exponential-integrator dense output of the step.
    double energy_residual = 0.0;
    /// Largest relative size of <rho, transport(rho)> against |grad rho|^2 at step starts.
    double energy_residual_inst = 0.0;

    double d_sup(int order) const;
    double running(int order) const;
};

/// Spectral norms of rho; running integrals and residuals are left empty.
NormReport derivative_norms(const GridField& rho, int max_order);

/// Velocity u = strength * K * rho via the Fourier symbol.
VectorField velocity_field(const GridField& rho, double strength = 1.0);

/// Dealiased transport term -P(u(src) . grad rho) in Fourier space, with the 2/3 rule
/// applied to both inputs and the output.  The mean mode of the output is zero.
class TransportOperator {
public:
    explicit TransportOperator(int n, double strength = 1.0);
    int n() const { return n_; }
    double strength() const { return strength_; }
    bool retained(int i, int j) const;
    /// Returns max |u| on the grid.
    double apply(const Spectrum& src, const Spectrum& rho, Spectrum& out);

private:
    int n_;
    int kmax_;
    double strength_;
    Fft2 fft_;
    Spectrum tmp_;
    std::vector<double> u1_, u2_, g1_, g2_;
};

struct MeanFieldOptions {
    int n = 128;
    double dt = 1e-3;
    int max_order = 2;
    double kernel_strength = 1.0;
    /// dt * max|u| * n must not exceed this.
    double cfl = 0.5;
};

/// Integrating-factor RK2 pseudospectral solver.  The state is held in Fourier space;
/// the heat part is integrated exactly, transport by Heun's method.
class MeanFieldSolver {
public:
    MeanFieldSolver(const GridField& rho0, MeanFieldOptions opt);

    double t() const { return t_; }
    long steps() const { return steps_; }
    const MeanFieldOptions& options() const { return opt_; }
    const Spectrum& spectrum() const { return rho_; }
    GridField field() const;

    /// One step of size dt; throws CflError if the transport CFL bound fails.
    void step(double dt);
    /// Steps of size options().dt, the last shortened to land on t_target.
    void advance_to(double t_target);
    NormReport report() const;

private:
    void update_dsup();

    MeanFieldOptions opt_;
    double t_ = 0.0;
    long steps_ = 0;
    Spectrum rho_;
    TransportOperator transport_;
    std::unique_ptr<Fft2> fft_;
    std::vector<double> dsup_;
    std::vector<double> running_;
    double energy_residual_ = 0.0;
    double energy_residual_inst_ = 0.0;
};

/// One IMEX step of size dt applied to a grid density.
GridField step_imex(const GridField& rho, double dt, double kernel_strength = 1.0);

struct MeanFieldSnapshot {
    GridField field;
    NormReport norms;
};

/// Solve up to T, reporting at each of report_times (sorted, within [0, T]; T is used if
/// empty).  Throws SolverInstability if a report leaves [1/lambda - 1e-6, lambda + 1e-6].
std::vector<MeanFieldSnapshot> solve_meanfield(const InitialDensity& rho0, double T, double dt, int n,
                                               const std::vector<double>& report_times, int max_order = 2,
                                               double kernel_strength = 1.0);

/// Periodic heat kernel (4 pi t)^{-1} sum_k exp(-|x - k|^2 / 4t) over |k_i| <= R;
/// R <= 0 picks a radius that reaches double precision.
double heat_kernel_torus(double t, Vec2 x, int lattice_radius = 0);

/// Multiplier e^{-4 pi^2 |k|^2 t} applied to a spectrum.
Spectrum heat_flow(const Spectrum& s, double t);

/// Sum over the full spectrum of |c_k|^2 (= mean of f^2 on the grid).
double spectral_energy(const Spectrum& s, bool include_mean = true);

}  // namespace vortex
