#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vortex/config.hpp"
#include "vortex/estimators.hpp"
#include "vortex/io.hpp"
#include "vortex/particles.hpp"

namespace vortex {

struct FitRow {
    double t = 0.0;
    std::string quantity;
    std::string model;
    RateFit fit;
};

struct RatioRow {
    int N = 0;
    double t = 0.0;
    std::string quantity;
    double r = 0.0;
    double r_err = 0.0;
};

struct Flag {
    std::string criterion;
    std::string name;
    bool pass = false;
    std::string detail;
};

struct WorkloadRow {
    int N = 0;
    int replicas = 0;
    /// Steps per trajectory.
    long steps = 0;
    /// Sum over replicas of steps x N, as logged by the simulator.
    long long particle_steps = 0;
};

struct StudyResult {
    std::vector<EntropyReport> rows;
    std::vector<FitRow> fits;
    std::vector<RatioRow> ratios;
    std::vector<Flag> flags;
    std::vector<WorkloadRow> workload;
    double wall_seconds = 0.0;

    bool pass() const;
    /// Output tables (report.csv and friends), keyed by file name.
    std::vector<std::pair<std::string, CsvTable>> tables() const;
    /// Writes every table plus status.json into dir (created if missing).
    void write(const std::string& dir) const;
};

/// Every (N, replica) cell of a sweep, run on a pool of `workers` threads (0 = hardware
/// concurrency).  Each cell uses its own derived seed, so the result does not depend on
/// the pool size.  Returned ensembles follow the order of N_list.
std::vector<Ensemble> simulate_sweep(const SweepConfig& c, int workers);

/// Density of the mean-field PDE at each config time.
std::vector<GridField> pde_at_times(const SweepConfig& c);

/// Estimator rows (k = 1 and k = 2) for one ensemble snapshot.
std::vector<EntropyReport> estimate_snapshot(const Ensemble& ens, std::size_t snap, int N, const GridField& rho_bar,
                                             const SweepConfig& c);

/// N-sweep at the config times: fits power_with_log to w2_emp and pure_power to h_1 per
/// time, and flags the rate window [-0.65, -0.35] and the monotone decrease of h_1 beyond
/// N = 256.  Throws ConfigError with fewer than 4 distinct N or fewer than 8 replicas.
StudyResult run_convergence_study(const SweepConfig& c);

/// Time sweep: r(t) = error(t) / error(1) for h_1 and w2_emp at each N, flagged against
/// `threshold` over t in [1, 5] with 3 sigma error bars.  Needs t = 1 among the times and
/// at least 5 times spanning [0.5, 5] (ConfigError otherwise).
StudyResult run_uniformity_study(const SweepConfig& c, double threshold = 1.5);

struct SelftestCheck {
    std::string name;
    bool pass = false;
    double value = 0.0;
    std::string detail;
};

struct SelftestSummary {
    std::vector<SelftestCheck> checks;
    bool pass = false;
    /// FNV-1a of the canonical check list (names, verdicts, values).
    std::string hash;
    std::string json() const;
};

/// Fast battery of module examples and invariants; writes summary.json into out_dir
/// (created if missing).
SelftestSummary run_selftest(const std::string& out_dir, uint64_t seed = 20240601);

}  // namespace vortex
