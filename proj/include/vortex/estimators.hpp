#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vortex/config.hpp"
#include "vortex/grid.hpp"
#include "vortex/particles.hpp"
#include "vortex/transport.hpp"

namespace vortex {

/// Point estimate with its Monte-Carlo standard error.
struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

/// Histogram estimate of (1/k) KL(rho_N^k | rho_bar^{(x)k}) from disjoint k-tuples.
struct KLEstimate {
    /// Plug-in value.
    double value = 0.0;
    double stderr_ = 0.0;
    /// Miller-Madow bias of the plug-in value, (occupied - 1) / (2 k M).
    double bias = 0.0;
    /// Tuples used.
    long samples = 0;
    int bins = 0;
    /// Smallest expected cell count fell below 5; stderr_ then includes the bias.
    bool undersampled = false;
};

/// Disjoint k-tuples of snapshot `snap`, pooled over replicas: tuple q of replica r is
/// particles (k q, ..., k q + k - 1).  Returned as one 2k-dimensional point per tuple.
std::vector<std::vector<double>> tuples_by_replica(const Ensemble& ens, std::size_t snap, int k);

/// Reference cell probabilities of rho_bar^{(x)k} on (bins^2)^k cells.
std::vector<double> reference_cells(const GridField& rho_bar, int bins, int k);

/// Cell index of a 2k-dimensional point with `bins` cells per axis.
std::size_t cell_of(const double* x, int dim, int bins);

KLEstimate marginal_kl(const Ensemble& ens, std::size_t snap, const GridField& rho_bar, int k, int bins);

/// Binned L1 distance sum |p_hat - q| over the same cells, with replica jackknife error.
Estimate marginal_l1(const Ensemble& ens, std::size_t snap, const GridField& rho_bar, int k, int bins);

/// W2 between the binned k-marginal and the binned product reference, both as atoms at
/// cell centres (bins per axis, 2k axes).  Exact transport; jackknife over replicas.
Estimate marginal_w2(const Ensemble& ens, std::size_t snap, const GridField& rho_bar, int k, int bins);

/// Mean over replicas of W2(pi(X_r), Q(rho_bar)) with Q the side x side quantization.
Estimate w2_empirical(const Ensemble& ens, std::size_t snap, const GridField& rho_bar, int side,
                      W2Method method = W2Method::Exact, const EstimatorSettings& s = {});

/// W2 between the side x side quantization and a finer (2 side, capped at 64) one.
double quantization_baseline(const GridField& rho_bar, int side);

/// Mean and standard error of W2(iid N-sample of rho_bar, Q(rho_bar)) over reps draws.
Estimate w2_iid_baseline(const GridField& rho_bar, int N, int reps, uint64_t seed, int side);

/// E_nu(g) - E_rho_bar(e^g) + 1 with g a grid function sampled bilinearly at the
/// samples of nu; E_rho_bar by grid quadrature of the normalized rho_bar.
Estimate dv_entropy_lower_bound(const GridField& g, const std::vector<Vec2>& samples_nu, const GridField& rho_bar);

/// Largest DV bound over a fixed dictionary: g = 0 and c cos / c sin of 2 pi k.x for
/// 1 <= |k|_inf <= 2 and c in {+-0.05, +-0.1, +-0.2, +-0.4}.
Estimate dv_entropy_dictionary(const std::vector<Vec2>& samples_nu, const GridField& rho_bar);

/// lambda^2 / (8 pi^2).  Throws std::domain_error for lambda < 1.
double lsi_constant(double lambda);

enum class RateModel { PurePower, PowerWithLog };

struct RateFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    /// Root mean square of the log-space residuals.
    double residual = 0.0;
    /// Standard error of the exponent from the regression (0 with 2 points).
    double exponent_stderr = 0.0;
};

/// Least squares in log space; power_with_log fits value = c N^p ln(1 + N).
/// Throws std::invalid_argument with fewer than 4 distinct N, std::domain_error on
/// non-positive values.
RateFit rate_fit(const std::vector<std::pair<double, double>>& data, RateModel model);

/// One row of the estimate report.
struct EntropyReport {
    double t = 0.0;
    int N = 0;
    int k = 1;
    KLEstimate h_k;
    Estimate l1_k;
    Estimate w2_k;
    Estimate w2_emp;
    double w2_quant_baseline = 0.0;
    Estimate A_N;
    Estimate B_N;
    double I_proxy = 0.0;
};

}  // namespace vortex
