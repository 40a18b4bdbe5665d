#include "vortex/particles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <omp.h>

#include "vortex/rng.hpp"

namespace vortex {

std::size_t Ensemble::snapshot_index(double t) const {
    for (std::size_t s = 0; s < snapshot_times.size(); ++s)
        if (std::abs(snapshot_times[s] - t) <= 1e-9) return s;
    throw std::out_of_range("no snapshot at t = " + std::to_string(t));
}

namespace {

Vec2 uniform_point(PhiloxStream& s) {
    double a = s.uniform() - 0.5;
    double b = s.uniform() - 0.5;
    return wrap({a, b});
}

std::array<uint32_t, 2> split_key(uint64_t k) {
    return {static_cast<uint32_t>(k), static_cast<uint32_t>(k >> 32)};
}

// Standard normal pair for (stream, step) under a noise key.
inline std::pair<double, double> noise(const std::array<uint32_t, 2>& key, uint64_t stream, uint64_t step) {
    return gaussian_pair(philox4x32({static_cast<uint32_t>(step), static_cast<uint32_t>(step >> 32),
                                     static_cast<uint32_t>(stream), static_cast<uint32_t>(stream >> 32)},
                                    key));
}

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

}  // namespace

ParticleState sample_initial(const InitialDensity& rho0, int N, uint64_t seed) {
    rho0.validate();
    if (N < 0) throw std::invalid_argument("N must be non-negative");
    ParticleState st;
    st.seed_id = seed;
    st.positions.resize(static_cast<std::size_t>(N));
    st.streams.resize(static_cast<std::size_t>(N));
    const double envelope = rho0.upper_bound();
    const uint64_t key = derive_seed(seed, kTagInitial, 0);
    for (int i = 0; i < N; ++i) {
        PhiloxStream s(key, static_cast<uint64_t>(i));
        Vec2 x;
        do {
            x = uniform_point(s);
        } while (s.uniform() * envelope >= rho0(x));
        st.positions[static_cast<std::size_t>(i)] = x;
        st.streams[static_cast<std::size_t>(i)] = static_cast<uint64_t>(i);
    }
    return st;
}

std::vector<Vec2> sample_from_grid(const GridField& rho, int N, uint64_t seed) {
    if (N < 0) throw std::invalid_argument("N must be non-negative");
    const double envelope = rho.max();
    if (!(envelope > 0.0) || rho.min() < 0.0) throw std::invalid_argument("grid density must be non-negative and non-zero");
    const uint64_t key = derive_seed(seed, kTagInitial, 1);
    std::vector<Vec2> out(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        PhiloxStream s(key, static_cast<uint64_t>(i));
        Vec2 x;
        do {
            x = uniform_point(s);
        } while (s.uniform() * envelope >= rho.sample(x));
        out[static_cast<std::size_t>(i)] = x;
    }
    return out;
}

std::vector<Vec2> drift(const std::vector<Vec2>& pos, const PairKernel& kernel, int threads) {
    require_wrapped(pos);
    const int N = static_cast<int>(pos.size());
    std::vector<Vec2> out(pos.size());
    if (N == 0 || kernel.mode() == PairKernel::Mode::Zero) return out;

    // canonical order: strips in x1, then x2, then x1; equal keys mean equal positions
    constexpr double kStrips = 64.0;
    auto strip = [&](const Vec2& p) { return static_cast<int>((p.x1 + 0.5) * kStrips); };
    std::vector<int> order(pos.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const Vec2& p = pos[static_cast<std::size_t>(a)];
        const Vec2& q = pos[static_cast<std::size_t>(b)];
        int sa = strip(p), sb = strip(q);
        if (sa != sb) return sa < sb;
        if (p.x2 != q.x2) return p.x2 < q.x2;
        return p.x1 < q.x1;
    });
    std::vector<double> xs(pos.size()), ys(pos.size());
    std::vector<int> rank(pos.size());
    for (int r = 0; r < N; ++r) {
        const Vec2& p = pos[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
        xs[static_cast<std::size_t>(r)] = p.x1;
        ys[static_cast<std::size_t>(r)] = p.x2;
        rank[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;
    }
    const double invN = 1.0 / N;
    const double* X = xs.data();
    const double* Y = ys.data();

    if (kernel.mode() == PairKernel::Mode::Table) {
        // Same arithmetic as PairKernel::operator() in Table mode, with the table hoisted.
        const KernelTable& tab = *kernel.table();
        const int tn = tab.n();
        const double inv_h = tn;
        const std::size_t row = 2 * static_cast<std::size_t>(tn + 1);
        const double* nodes = tab.nodes().data();
        const double strength = kernel.strength();
#pragma omp parallel for schedule(static) num_threads(resolve_threads(threads))
        for (int i = 0; i < N; ++i) {
            const double xi = pos[static_cast<std::size_t>(i)].x1;
            const double yi = pos[static_cast<std::size_t>(i)].x2;
            const int self = rank[static_cast<std::size_t>(i)];
            double s1 = 0.0, s2 = 0.0;
            auto accumulate = [&](int lo, int hi) {
                for (int k = lo; k < hi; ++k) {
                    double d1 = xi - X[k];
                    double d2 = yi - Y[k];
                    d1 += static_cast<double>(d1 < -0.5) - static_cast<double>(d1 >= 0.5);
                    d2 += static_cast<double>(d2 < -0.5) - static_cast<double>(d2 >= 0.5);
                    const double sg = (d1 < 0.0 || (d1 == 0.0 && d2 < 0.0)) ? -1.0 : 1.0;
                    double u = (sg * d1 + 0.5) * inv_h;
                    double w = (sg * d2 + 0.5) * inv_h;
                    int a = std::clamp(static_cast<int>(u), 0, tn - 1);
                    int b = std::clamp(static_cast<int>(w), 0, tn - 1);
                    double fu = u - a, fw = w - b;
                    const double* p = nodes + static_cast<std::size_t>(a) * row + 2 * static_cast<std::size_t>(b);
                    const double* q = p + row;
                    double w00 = (1 - fu) * (1 - fw), w01 = (1 - fu) * fw, w10 = fu * (1 - fw), w11 = fu * fw;
                    double v1 = w00 * p[0] + w01 * p[2] + w10 * q[0] + w11 * q[2];
                    double v2 = w00 * p[1] + w01 * p[3] + w10 * q[1] + w11 * q[3];
                    s1 += sg * (strength * v1);
                    s2 += sg * (strength * v2);
                }
            };
            accumulate(0, self);
            accumulate(self + 1, N);
            out[static_cast<std::size_t>(i)] = {s1 * invN, s2 * invN};
        }
        return out;
    }

#pragma omp parallel for schedule(static) num_threads(resolve_threads(threads))
    for (int i = 0; i < N; ++i) {
        const double xi = pos[static_cast<std::size_t>(i)].x1;
        const double yi = pos[static_cast<std::size_t>(i)].x2;
        const int self = rank[static_cast<std::size_t>(i)];
        double s1 = 0.0, s2 = 0.0;
        auto accumulate = [&](int lo, int hi) {
            for (int k = lo; k < hi; ++k) {
                double d1 = xi - X[k];
                double d2 = yi - Y[k];
                // d lies in (-1, 1); shift into [-1/2, 1/2)
                d1 += static_cast<double>(d1 < -0.5) - static_cast<double>(d1 >= 0.5);
                d2 += static_cast<double>(d2 < -0.5) - static_cast<double>(d2 >= 0.5);
                Vec2 v = kernel(d1, d2);
                s1 += v.x1;
                s2 += v.x2;
            }
        };
        accumulate(0, self);
        accumulate(self + 1, N);
        out[static_cast<std::size_t>(i)] = {s1 * invN, s2 * invN};
    }
    return out;
}

std::vector<Vec2> drift_reference(const std::vector<Vec2>& pos, const PairKernel& kernel) {
    require_wrapped(pos);
    const std::size_t N = pos.size();
    std::vector<Vec2> out(N);
    for (std::size_t i = 0; i < N; ++i) {
        Vec2 s;
        for (std::size_t j = 0; j < N; ++j) {
            if (j == i) continue;
            Vec2 d = min_image(pos[i], pos[j]);
            s += kernel(d.x1, d.x2);
        }
        out[i] = s * (1.0 / static_cast<double>(N));
    }
    return out;
}

void step_em(ParticleState& state, double dt, const PairKernel& kernel, int threads) {
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be finite and non-negative");
    if (state.streams.size() != state.positions.size()) throw std::invalid_argument("streams and positions differ in size");
    if (dt == 0.0) return;
    std::vector<Vec2> f = drift(state.positions, kernel, threads);
    const auto key = split_key(derive_seed(state.seed_id, kTagNoise, 0));
    const double amp = std::sqrt(2.0 * dt);
    const int N = state.N();
    const uint64_t step = state.step;
#pragma omp parallel for schedule(static) num_threads(resolve_threads(threads))
    for (int i = 0; i < N; ++i) {
        auto [g1, g2] = noise(key, state.streams[static_cast<std::size_t>(i)], step);
        Vec2& x = state.positions[static_cast<std::size_t>(i)];
        const Vec2& fi = f[static_cast<std::size_t>(i)];
        x = wrap({x.x1 + fi.x1 * dt + amp * g1, x.x2 + fi.x2 * dt + amp * g2});
    }
    ++state.step;
    state.t += dt;
}

int steps_between(double t0, double t1, double dt) {
    if (!(t1 > t0)) return 0;
    return std::max(1, static_cast<int>(std::ceil((t1 - t0) / dt - 1e-9)));
}

namespace {

void check_times(const std::vector<double>& times) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0)) throw std::invalid_argument("snapshot times must be non-negative");
        if (i > 0 && !(times[i] > times[i - 1])) throw std::invalid_argument("snapshot times must be ascending");
    }
}

}  // namespace

Trajectory simulate_trajectory(const InitialDensity& rho0, int N, const std::vector<double>& times, double dt,
                               const PairKernel& kernel, uint64_t seed, int threads) {
    check_times(times);
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    auto t_start = std::chrono::steady_clock::now();
    Trajectory tr;
    tr.seed_id = seed;
    tr.N = N;
    ParticleState st = sample_initial(rho0, N, seed);
    for (double ts : times) {
        int m = steps_between(st.t, ts, dt);
        if (m > 0) {
            double h = (ts - st.t) / m;
            for (int s = 0; s < m; ++s) step_em(st, h, kernel, threads);
            tr.steps += static_cast<uint64_t>(m);
        }
        st.t = ts;
        tr.snapshots.push_back({ts, st.positions});
    }
    tr.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return tr;
}

Ensemble simulate_nonlinear(const std::vector<GridField>& rho_traj, int N_samples, double dt, uint64_t seed,
                            const std::vector<double>& times, double strength) {
    if (rho_traj.empty()) throw std::invalid_argument("empty density trajectory");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    check_times(times);
    for (std::size_t i = 1; i < rho_traj.size(); ++i) {
        double gap = rho_traj[i].t - rho_traj[i - 1].t;
        if (!(gap > 0.0)) throw std::invalid_argument("density trajectory times must be ascending");
        if (gap > 2.0 * dt * (1.0 + 1e-9))
            throw std::invalid_argument("density trajectory gap " + std::to_string(gap) + " exceeds 2 dt");
    }
    const double t_lo = rho_traj.front().t, t_hi = rho_traj.back().t;
    for (double t : times)
        if (t < t_lo - 1e-12 || t > t_hi + 1e-12) throw std::invalid_argument("snapshot time outside the density trajectory");

    std::vector<VectorField> vel;
    vel.reserve(rho_traj.size());
    for (const auto& r : rho_traj) vel.push_back(velocity_field(r, strength));
    auto velocity = [&](Vec2 x, double t) {
        if (vel.size() == 1) return vel[0].sample(x);
        auto it = std::upper_bound(rho_traj.begin(), rho_traj.end(), t,
                                   [](double v, const GridField& g) { return v < g.t; });
        std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - rho_traj.begin()), 1, rho_traj.size() - 1);
        std::size_t lo = hi - 1;
        double a = std::clamp((t - rho_traj[lo].t) / (rho_traj[hi].t - rho_traj[lo].t), 0.0, 1.0);
        Vec2 u0 = vel[lo].sample(x), u1 = vel[hi].sample(x);
        return u0 * (1.0 - a) + u1 * a;
    };

    Ensemble ens;
    ens.snapshot_times = times;
    Trajectory tr;
    tr.seed_id = seed;
    tr.N = N_samples;
    std::vector<Vec2> x = sample_from_grid(rho_traj.front(), N_samples, seed);
    const auto key = split_key(derive_seed(seed, kTagNoise, 0));
    double t = t_lo;
    uint64_t step = 0;
    for (double ts : times) {
        int m = steps_between(t, ts, dt);
        double h = m > 0 ? (ts - t) / m : 0.0;
        for (int s = 0; s < m; ++s) {
            const double tn = t + s * h;
            const double amp = std::sqrt(2.0 * h);
#pragma omp parallel for schedule(static)
            for (int i = 0; i < N_samples; ++i) {
                Vec2& p = x[static_cast<std::size_t>(i)];
                Vec2 u = velocity(p, tn);
                auto [g1, g2] = noise(key, static_cast<uint64_t>(i), step);
                p = wrap({p.x1 + u.x1 * h + amp * g1, p.x2 + u.x2 * h + amp * g2});
            }
            ++step;
        }
        tr.steps += static_cast<uint64_t>(m);
        t = std::max(t, ts);
        tr.snapshots.push_back({ts, x});
    }
    ens.replicas.push_back(std::move(tr));
    return ens;
}

uint64_t replica_seed(uint64_t master, int N, int replica) {
    return derive_seed(master, kTagReplica, static_cast<uint64_t>(N), static_cast<uint64_t>(replica));
}

Ensemble simulate(const SweepConfig& config, int N) {
    config.validate();
    InitialDensity rho0 = InitialDensity::parse(config.rho0, config.lambda);
    PairKernel kernel(parse_kernel(config.kernel));
    Ensemble ens;
    ens.snapshot_times = config.times;
    for (int r = 0; r < config.replicas; ++r) {
        Trajectory tr = simulate_trajectory(rho0, N, config.times, config.dt, kernel, replica_seed(config.master_seed, N, r));
        tr.replica = r;
        ens.replicas.push_back(std::move(tr));
    }
    return ens;
}

}  // namespace vortex
