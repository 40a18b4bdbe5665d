#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <numeric>

#include "vortex/estimators.hpp"
#include "vortex/particles.hpp"
#include "vortex/rng.hpp"

using namespace vortex;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Vec2> random_points(int N, uint64_t seed) {
    PhiloxStream s(seed, 0);
    std::vector<Vec2> p(static_cast<std::size_t>(N));
    for (auto& x : p) x = wrap({s.uniform() - 0.5, s.uniform() - 0.5});
    return p;
}

// 1% critical values of chi-square
constexpr double kChi2Crit15 = 30.578;  // 15 dof

double chi2_uniform(const std::vector<Vec2>& pts, int side) {
    std::vector<double> counts(static_cast<std::size_t>(side * side), 0.0);
    for (const auto& p : pts) {
        int a = std::min(side - 1, static_cast<int>((p.x1 + 0.5) * side));
        int b = std::min(side - 1, static_cast<int>((p.x2 + 0.5) * side));
        counts[static_cast<std::size_t>(a * side + b)] += 1.0;
    }
    double e = static_cast<double>(pts.size()) / (side * side), c2 = 0.0;
    for (double c : counts) c2 += (c - e) * (c - e) / e;
    return c2;
}

// integral of cos(2 pi x) over [a, b]
double int_cos(double a, double b) { return (std::sin(2 * kPi * b) - std::sin(2 * kPi * a)) / (2 * kPi); }

PairKernel mollified_pair(double eps = 0.05) { return PairKernel(parse_kernel("mollified:" + std::to_string(eps))); }

}  // namespace

TEST_CASE("uniform initial draws pass a chi-square test") {
    InitialDensity u = InitialDensity::parse("uniform", 2.0);
    ParticleState st = sample_initial(u, 100000, 7);
    CHECK(st.N() == 100000);
    CHECK(chi2_uniform(st.positions, 4) < kChi2Crit15);
    for (const auto& p : st.positions) REQUIRE(is_wrapped(p));
}

TEST_CASE("default initial draws match cell-integrated density") {
    InitialDensity d = InitialDensity::parse("default", 2.0);
    const int N = 100000, side = 8;
    ParticleState st = sample_initial(d, N, 11);
    std::vector<double> counts(side * side, 0.0);
    for (const auto& p : st.positions) {
        int a = std::min(side - 1, static_cast<int>((p.x1 + 0.5) * side));
        int b = std::min(side - 1, static_cast<int>((p.x2 + 0.5) * side));
        counts[static_cast<std::size_t>(a * side + b)] += 1.0;
    }
    for (int a = 0; a < side; ++a)
        for (int b = 0; b < side; ++b) {
            double x0 = -0.5 + double(a) / side, x1 = x0 + 1.0 / side;
            double y0 = -0.5 + double(b) / side, y1 = y0 + 1.0 / side;
            double mass = (x1 - x0) * (y1 - y0) + 0.5 * int_cos(x0, x1) * int_cos(y0, y1);
            double sigma = std::sqrt(N * mass * (1 - mass));
            CHECK(std::abs(counts[static_cast<std::size_t>(a * side + b)] - N * mass) <= 4 * sigma);
        }
}

TEST_CASE("initial draws are a function of the seed") {
    InitialDensity d = InitialDensity::parse("default", 2.0);
    auto a = sample_initial(d, 100, 5), b = sample_initial(d, 100, 5), c = sample_initial(d, 100, 6);
    bool same = true, differ = false;
    for (std::size_t i = 0; i < 100; ++i) {
        same = same && a.positions[i].x1 == b.positions[i].x1 && a.positions[i].x2 == b.positions[i].x2;
        differ = differ || a.positions[i].x1 != c.positions[i].x1;
    }
    CHECK(same);
    CHECK(differ);
}

TEST_CASE("grid sampling follows the grid density") {
    GridField g = InitialDensity::parse("shear", 2.0).grid(64);
    auto pts = sample_from_grid(g, 50000, 3);
    // mean of cos(2 pi x1) under 1 + 0.3 cos(2 pi x1) is 0.15
    double m = 0.0;
    for (auto& p : pts) m += std::cos(2 * kPi * p.x1);
    m /= pts.size();
    double sigma = std::sqrt(0.5 / pts.size());
    CHECK(std::abs(m - 0.15) <= 4 * sigma);
}

TEST_CASE("symmetric pair has opposite forces") {
    for (const PairKernel& k : {PairKernel(parse_kernel("raw")), mollified_pair()}) {
        std::vector<Vec2> p{{0.13, -0.21}, {-0.13, 0.21}};
        auto f = drift(p, k);
        CHECK(f[0].x1 == -f[1].x1);
        CHECK(f[0].x2 == -f[1].x2);
        CHECK(std::abs(f[0].x1) > 0.0);
    }
}

TEST_CASE("three particles match a direct double loop") {
    std::vector<Vec2> p{{0.1, 0.2}, {-0.3, 0.45}, {0.49, -0.4}};
    for (const PairKernel& k : {PairKernel(parse_kernel("raw")), mollified_pair(), PairKernel(parse_kernel("flipped:raw"))}) {
        auto f = drift(p, k);
        for (int i = 0; i < 3; ++i) {
            double s1 = 0.0, s2 = 0.0;
            for (int j = 0; j < 3; ++j) {
                if (i == j) continue;
                double d1 = wrap1(p[i].x1 - p[j].x1), d2 = wrap1(p[i].x2 - p[j].x2);
                Vec2 v = k(d1, d2);
                s1 += v.x1;
                s2 += v.x2;
            }
            CHECK(std::abs(f[i].x1 - s1 / 3) <= 1e-14);
            CHECK(std::abs(f[i].x2 - s2 / 3) <= 1e-14);
        }
    }
}

TEST_CASE("coincident particles feel no force") {
    std::vector<Vec2> p(50, Vec2{0.2, -0.1});
    for (const PairKernel& k : {mollified_pair(), PairKernel(parse_kernel("raw"))}) {
        for (auto& f : drift(p, k)) {
            CHECK(f.x1 == 0.0);
            CHECK(f.x2 == 0.0);
        }
    }
}

TEST_CASE("forces sum to zero and agree with the serial reference") {
    auto p = random_points(600, 99);
    for (const PairKernel& k : {mollified_pair(0.01), PairKernel(parse_kernel("raw"))}) {
        auto f = drift(p, k);
        auto r = drift_reference(p, k);
        double s1 = 0.0, s2 = 0.0, diff = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            s1 += f[i].x1;
            s2 += f[i].x2;
            diff = std::max({diff, std::abs(f[i].x1 - r[i].x1), std::abs(f[i].x2 - r[i].x2)});
            scale = std::max({scale, std::abs(r[i].x1), std::abs(r[i].x2)});
        }
        CHECK(std::abs(s1) <= 1e-10);
        CHECK(std::abs(s2) <= 1e-10);
        CHECK(diff <= 1e-12 * std::max(1.0, scale));
    }
}

TEST_CASE("drift rejects unwrapped positions") {
    std::vector<Vec2> p{{0.6, 0.0}, {0.0, 0.0}};
    CHECK_THROWS_AS(drift(p, mollified_pair()), std::invalid_argument);
}

TEST_CASE("free particle increments have variance 2 dt") {
    PairKernel off(parse_kernel("off"));
    ParticleState st;
    st.positions = {{0.0, 0.0}};
    st.streams = {0};
    st.seed_id = 42;
    const double dt = 1e-4;
    const int n = 100000;
    double s[2] = {0, 0}, q[2] = {0, 0};
    for (int k = 0; k < n; ++k) {
        Vec2 before = st.positions[0];
        step_em(st, dt, off);
        Vec2 d = min_image(st.positions[0], before);
        s[0] += d.x1;
        s[1] += d.x2;
        q[0] += d.x1 * d.x1;
        q[1] += d.x2 * d.x2;
    }
    for (int c = 0; c < 2; ++c) {
        double mean = s[c] / n;
        double var = q[c] / n - mean * mean;
        double sigma = 2 * dt * std::sqrt(2.0 / n);
        CHECK(std::abs(var - 2 * dt) <= 3 * sigma);
    }
    CHECK(st.step == static_cast<uint64_t>(n));
}

TEST_CASE("zero step is the identity") {
    ParticleState st = sample_initial(InitialDensity::parse("default", 2.0), 64, 1);
    auto before = st.positions;
    step_em(st, 0.0, mollified_pair());
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(st.positions[i].x1 == before[i].x1);
        CHECK(st.positions[i].x2 == before[i].x2);
    }
    CHECK(st.t == 0.0);
    CHECK_THROWS_AS(step_em(st, -1e-3, mollified_pair()), std::invalid_argument);
}

TEST_CASE("trajectories do not depend on the thread count") {
    PairKernel k = mollified_pair(0.02);
    ParticleState a = sample_initial(InitialDensity::parse("default", 2.0), 300, 17);
    ParticleState b = a;
    for (int s = 0; s < 20; ++s) {
        step_em(a, 2e-3, k, 1);
        step_em(b, 2e-3, k, 8);
    }
    bool same = true;
    for (std::size_t i = 0; i < a.positions.size(); ++i)
        same = same && a.positions[i].x1 == b.positions[i].x1 && a.positions[i].x2 == b.positions[i].x2;
    CHECK(same);
}

TEST_CASE("relabeling particles permutes the trajectory exactly") {
    for (const PairKernel& k : {mollified_pair(0.02), PairKernel(parse_kernel("raw"))}) {
        ParticleState a = sample_initial(InitialDensity::parse("default", 2.0), 257, 23);
        std::vector<std::size_t> perm(a.positions.size());
        std::iota(perm.begin(), perm.end(), 0);
        PhiloxStream s(5, 5);
        for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[s.below(i + 1)]);
        ParticleState b = a;
        for (std::size_t i = 0; i < perm.size(); ++i) {
            b.positions[i] = a.positions[perm[i]];
            b.streams[i] = a.streams[perm[i]];
        }
        for (int step = 0; step < 25; ++step) {
            step_em(a, 2e-3, k);
            step_em(b, 2e-3, k);
        }
        bool same = true;
        for (std::size_t i = 0; i < perm.size(); ++i)
            same = same && b.positions[i].x1 == a.positions[perm[i]].x1 && b.positions[i].x2 == a.positions[perm[i]].x2;
        CHECK(same);
    }
}

TEST_CASE("a single particle is a Brownian motion") {
    InitialDensity d = InitialDensity::parse("default", 2.0);
    std::vector<double> times{0.0, 0.1, 0.5};
    Trajectory raw = simulate_trajectory(d, 1, times, 2e-3, PairKernel(parse_kernel("raw")), 9);
    Trajectory off = simulate_trajectory(d, 1, times, 2e-3, PairKernel(parse_kernel("off")), 9);
    REQUIRE(raw.snapshots.size() == 3);
    for (std::size_t s = 0; s < 3; ++s) {
        CHECK(raw.snapshots[s].positions[0].x1 == off.snapshots[s].positions[0].x1);
        CHECK(raw.snapshots[s].positions[0].x2 == off.snapshots[s].positions[0].x2);
    }
    CHECK(raw.steps == 250);
}

TEST_CASE("step counts land on snapshot times") {
    CHECK(steps_between(0.0, 1.0, 2e-3) == 500);
    CHECK(steps_between(0.0, 0.3, 0.2) == 2);
    CHECK(steps_between(1.0, 1.0, 0.1) == 0);
}

TEST_CASE("nonlinear particles on a uniform trajectory stay uniform") {
    std::vector<GridField> traj;
    for (int m = 0; m <= 50; ++m) {
        GridField g(16, m * 4e-3);
        std::fill(g.values().begin(), g.values().end(), 1.0);
        traj.push_back(g);
    }
    Ensemble e = simulate_nonlinear(traj, 50000, 2e-3, 4, {0.0, 0.2});
    CHECK(chi2_uniform(e.positions(0, 1), 4) < kChi2Crit15);
    CHECK_THROWS_AS(simulate_nonlinear(traj, 10, 1e-3, 4, {0.2}), std::invalid_argument);
    CHECK_THROWS_AS(simulate_nonlinear(traj, 10, 2e-3, 4, {0.3}), std::invalid_argument);
}

TEST_CASE("nonlinear increments follow the interpolated velocity") {
    // Strong velocity so the drift is resolvable against the noise in one step.
    const double strength = 1000.0, h = 2e-3;
    GridField rho = InitialDensity::parse("twomode", 2.0).grid(32);
    rho.t = 0.0;
    GridField rho1 = rho;
    rho1.t = h;
    const int n = 20000;
    Ensemble e = simulate_nonlinear({rho, rho1}, n, h, 8, {0.0, h}, strength);
    VectorField u = velocity_field(rho, strength);
    // regression of the increment on u(x0) h, and the residual mean
    double suu = 0.0, sur = 0.0, r1 = 0.0, r2 = 0.0;
    for (int i = 0; i < n; ++i) {
        Vec2 x0 = e.positions(0, 0)[static_cast<std::size_t>(i)];
        Vec2 dx = min_image(e.positions(0, 1)[static_cast<std::size_t>(i)], x0);
        Vec2 uh = u.sample(x0) * h;
        suu += uh.norm2();
        sur += uh.dot(dx);
        r1 += dx.x1 - uh.x1;
        r2 += dx.x2 - uh.x2;
    }
    double slope = sur / suu;
    double sigma_slope = std::sqrt(2 * h / suu);
    CHECK(std::abs(slope - 1.0) <= 3 * sigma_slope);
    double sigma_mean = std::sqrt(2 * h / n);
    CHECK(std::abs(r1 / n) <= 3 * sigma_mean);
    CHECK(std::abs(r2 / n) <= 3 * sigma_mean);
}

TEST_CASE("sweep replicas use distinct derived seeds") {
    SweepConfig c;
    c.N_list = {8};
    c.times = {0.0, 0.01};
    c.replicas = 3;
    c.kernel = "mollified:0.05";
    Ensemble e = simulate(c, 8);
    REQUIRE(e.replicas.size() == 3);
    CHECK(e.replicas[0].seed_id != e.replicas[1].seed_id);
    CHECK(e.replicas[2].seed_id == replica_seed(c.master_seed, 8, 2));
    CHECK(e.replicas[1].steps == 5);
}

namespace {

std::vector<GridField> pde_fields(const std::string& id, double T, double every, int n) {
    std::vector<double> rt;
    const int m = static_cast<int>(std::lround(T / every));
    for (int k = 0; k <= m; ++k) rt.push_back(k * every);
    std::vector<GridField> f;
    for (auto& s : solve_meanfield(InitialDensity::parse(id, 2.0), T, 1e-3, n, rt)) f.push_back(s.field);
    return f;
}

Ensemble single(std::vector<Vec2> pos) {
    Ensemble e;
    e.snapshot_times = {0.0};
    Trajectory t;
    t.snapshots.push_back({0.0, std::move(pos)});
    e.replicas.push_back(std::move(t));
    return e;
}

}  // namespace

TEST_CASE("nonlinear samples track the PDE density") {
    // binned at 40 x 40 cell centres so both sides fit the exact solver
    struct Case {
        const char* id;
        double T;
    };
    for (Case c : {Case{"default", 1.0}, Case{"twomode", 0.05}}) {
        auto fields = pde_fields(c.id, c.T, 4e-3 * (c.T < 0.5 ? 0.25 : 1.0), 64);
        Ensemble e = simulate_nonlinear(fields, 10000, 2e-3, 21, {c.T});
        const GridField& rho = fields.back();
        double w = marginal_w2(e, 0, rho, 1, 40).value;
        double base = marginal_w2(single(sample_from_grid(rho, 10000, 22)), 0, rho, 1, 40).value;
        CHECK(w <= 2 * base);
    }
}

TEST_CASE("mollification width barely moves the endpoint") {
    const int N = 512;
    InitialDensity d = InitialDensity::parse("default", 2.0);
    PairKernel k1(parse_kernel("mollified:0.02")), k2(parse_kernel("mollified:0.01"));
    GridField rho1 = InitialDensity::parse("uniform", 2.0).grid(64);  // default at t = 1 to 1e-34
    double dist = 0.0, base = 0.0;
    const int R = 4;
    for (int r = 0; r < R; ++r) {
        uint64_t seed = replica_seed(5, N, r);
        auto a = simulate_trajectory(d, N, {1.0}, 2e-3, k1, seed).snapshots[0].positions;
        auto b = simulate_trajectory(d, N, {1.0}, 2e-3, k2, seed).snapshots[0].positions;
        dist += w2_exact(WeightedPoints::empirical(a), WeightedPoints::empirical(b)).w2 / R;
    }
    base = w2_iid_baseline(rho1, N, R, 6, 40).value;
    CHECK(dist <= base);
}

TEST_CASE("halving the time step changes the W2 to the PDE by at most 20%") {
    const int N = 256, R = 8;
    InitialDensity d = InitialDensity::parse("default", 2.0);
    PairKernel k(parse_kernel("mollified:0.01"));
    GridField rho1 = InitialDensity::parse("uniform", 2.0).grid(64);
    std::vector<std::vector<Vec2>> fine, coarse;
    auto to_ensemble = [](const std::vector<std::vector<Vec2>>& reps) {
        Ensemble e;
        e.snapshot_times = {1.0};
        for (const auto& p : reps) {
            Trajectory t;
            t.snapshots.push_back({1.0, p});
            e.replicas.push_back(std::move(t));
        }
        return e;
    };
    for (int r = 0; r < R; ++r) {
        uint64_t seed = replica_seed(7, N, r);
        fine.push_back(simulate_trajectory(d, N, {1.0}, 2e-3, k, seed).snapshots[0].positions);
        coarse.push_back(simulate_trajectory(d, N, {1.0}, 4e-3, k, seed).snapshots[0].positions);
    }
    double wf = w2_empirical(to_ensemble(fine), 0, rho1, 40).value;
    double wc = w2_empirical(to_ensemble(coarse), 0, rho1, 40).value;
    CHECK(std::abs(wc - wf) <= 0.2 * wf);
}
