#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vortex {

struct EstimatorSettings {
    int bins_k1 = 24;
    /// Bins per factor for pair marginals.
    int bins_k2 = 12;
    /// "exact" or "entropic".
    std::string w2_method = "exact";
    /// Side of the square quantization of the density used for w2_emp (40 -> 1600 points).
    int quant_side = 40;
    double entropic_reg = 5e-3;
    int entropic_iters = 500;
    double entropic_tol = 1e-7;
};

struct SweepConfig {
    std::vector<int> N_list{64, 128, 256, 512, 1024, 2048, 4096};
    std::vector<double> times{1.0};
    double dt = 2e-3;
    int replicas = 16;
    uint64_t master_seed = 20240601;
    /// parse_kernel syntax.
    std::string kernel = "mollified:0.01";
    int pde_n = 128;
    double pde_dt = 1e-3;
    /// InitialDensity::parse syntax.
    std::string rho0 = "default";
    double lambda = 2.0;
    EstimatorSettings estimator;
    std::string out_dir = "out";
    /// Concurrent (N, replica) cells; 0 = hardware concurrency.
    int workers = 1;

    double horizon() const { return times.empty() ? 0.0 : times.back(); }
    /// Throws ConfigError on any inconsistency.
    void validate() const;
};

/// Parse a JSON object; unknown keys are a ConfigError.  Missing keys keep defaults.
SweepConfig config_from_json(const std::string& text);
SweepConfig load_config(const std::string& path);
std::string config_to_json(const SweepConfig& c);

}  // namespace vortex
