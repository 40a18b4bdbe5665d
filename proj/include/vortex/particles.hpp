#pragma once

#include <cstdint>
#include <vector>

#include "vortex/config.hpp"
#include "vortex/kernel.hpp"
#include "vortex/meanfield.hpp"

namespace vortex {

/// Seed-derivation tags.
inline constexpr uint64_t kTagInitial = 0x11;
inline constexpr uint64_t kTagNoise = 0x22;
inline constexpr uint64_t kTagReplica = 0x33;

struct ParticleState {
    std::vector<Vec2> positions;
    /// Noise stream of each particle.  Travels with the particle under relabeling.
    std::vector<uint64_t> streams;
    double t = 0.0;
    uint64_t seed_id = 0;
    /// Steps taken so far; the noise counter.
    uint64_t step = 0;

    int N() const { return static_cast<int>(positions.size()); }
};

struct Snapshot {
    double t = 0.0;
    std::vector<Vec2> positions;
};

struct Trajectory {
    uint64_t seed_id = 0;
    int N = 0;
    int replica = 0;
    std::vector<Snapshot> snapshots;
    uint64_t steps = 0;
    double wall_seconds = 0.0;
};

struct Ensemble {
    std::vector<double> snapshot_times;
    std::vector<Trajectory> replicas;

    /// Index of the snapshot at time t (within 1e-9); throws std::out_of_range.
    std::size_t snapshot_index(double t) const;
    const std::vector<Vec2>& positions(std::size_t replica, std::size_t snap) const {
        return replicas[replica].snapshots[snap].positions;
    }
};

/// N iid draws from rho0 by rejection against the uniform envelope (acceptance
/// rho0 / lambda).  Particle i uses its own stream, so the state is a pure function of
/// (rho0, N, seed).
ParticleState sample_initial(const InitialDensity& rho0, int N, uint64_t seed);

/// N iid draws from the bilinear interpolant of a grid density (any normalization).
std::vector<Vec2> sample_from_grid(const GridField& rho, int N, uint64_t seed);

/// force_i = (1/N) sum_{j != i} K(x_i - x_j).  Parallel over i; each sum runs over the
/// particles in a canonical position order, so the result does not depend on the thread
/// count and is exactly equivariant under relabeling.  threads = 0 uses the OpenMP default.
/// Throws std::invalid_argument on unwrapped positions.
std::vector<Vec2> drift(const std::vector<Vec2>& pos, const PairKernel& kernel, int threads = 0);

/// Plain serial double loop in label order.
std::vector<Vec2> drift_reference(const std::vector<Vec2>& pos, const PairKernel& kernel);

/// One Euler-Maruyama step x <- wrap(x + drift dt + sqrt(2 dt) xi).  xi for a particle
/// is drawn from the counter-based stream (seed_id, stream, step).  dt = 0 is the identity.
void step_em(ParticleState& state, double dt, const PairKernel& kernel, int threads = 0);

/// Step count used to advance from t0 to t1 with steps no longer than dt.
int steps_between(double t0, double t1, double dt);

/// Trajectory of one particle system with snapshots at the given times (ascending, >= 0).
/// Steps between snapshots are equal and land exactly on each snapshot time.
Trajectory simulate_trajectory(const InitialDensity& rho0, int N, const std::vector<double>& times, double dt,
                               const PairKernel& kernel, uint64_t seed, int threads = 0);

/// Independent particles of the nonlinear process driven by the velocity of a precomputed
/// density trajectory (ascending .t, covering the snapshot times).  The velocity is
/// bilinear in space and linear in time.  Initial positions are drawn from rho_traj[0].
/// Throws std::invalid_argument if consecutive fields are more than 2 dt apart.
Ensemble simulate_nonlinear(const std::vector<GridField>& rho_traj, int N_samples, double dt, uint64_t seed,
                            const std::vector<double>& times, double strength = 1.0);

/// Seed of replica r at particle count N.
uint64_t replica_seed(uint64_t master, int N, int replica);

/// All (N, replica) trajectories of a sweep at one particle count.
Ensemble simulate(const SweepConfig& config, int N);

}  // namespace vortex
