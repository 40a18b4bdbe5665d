#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "vortex/errors.hpp"
#include "vortex/meanfield.hpp"
#include "vortex/rng.hpp"

using namespace vortex;
constexpr double kPi = std::numbers::pi;

namespace {

double sup_diff(const GridField& a, const GridField& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
    return m;
}

double default_exact(Vec2 x, double t) {
    return 1.0 + 0.5 * std::exp(-8 * kPi * kPi * t) * std::cos(2 * kPi * x.x1) * std::cos(2 * kPi * x.x2);
}

}  // namespace

TEST_CASE("initial densities validate against lambda") {
    CHECK_NOTHROW(InitialDensity::parse("default", 2.0));
    CHECK_NOTHROW(InitialDensity::parse("twomode", 2.0));
    CHECK_NOTHROW(InitialDensity::parse("uniform", 1.5));
    CHECK_THROWS_AS(InitialDensity::parse("default", 1.5), ConfigError);
    CHECK_THROWS_AS(InitialDensity::parse("uniform", 1.0), ConfigError);
    CHECK_THROWS_AS(InitialDensity::parse("bogus", 2.0), ConfigError);
    CHECK_THROWS_AS(InitialDensity::parse("shear:x", 2.0), ConfigError);
    for (const char* id : {"default", "shear", "twomode", "uniform"}) {
        auto d = InitialDensity::parse(id, 2.0);
        GridField g = d.grid(64);
        CHECK(std::abs(g.mean() - 1.0) < 1e-14);
        CHECK(g.min() >= d.lower_bound() - 1e-14);
        CHECK(g.max() <= d.upper_bound() + 1e-14);
    }
}

TEST_CASE("velocity of uniform and shear densities") {
    auto u0 = velocity_field(InitialDensity::parse("uniform", 2.0).grid(32));
    CHECK(u0.c1.max_abs() == 0.0);
    CHECK(u0.c2.max_abs() == 0.0);
    const double a = 0.3;
    GridField rho = InitialDensity::parse("shear", 2.0).grid(64);
    auto u = velocity_field(rho);
    double err = 0.0;
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j)
            err = std::max({err, std::abs(u.c1(i, j)), std::abs(u.c2(i, j) - a / (2 * kPi) * std::sin(2 * kPi * rho.coord(i)))});
    CHECK(err < 1e-14);
}

TEST_CASE("velocity is spectrally divergence free for random band-limited densities") {
    PhiloxStream rng(21, 0);
    const int n = 64;
    Fft2 fft(n);
    Spectrum s(n);
    s[0] = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < s.nc(); ++j) {
            int k1 = s.k1(i);
            if ((i == 0 && j == 0) || std::abs(k1) > 8 || j > 8) continue;
            if (j == 0 && k1 < 0) continue;
            s[static_cast<std::size_t>(i) * s.nc() + j] = 0.01 * cplx(rng.normal(), rng.normal());
        }
    // Hermitian completion of the j = 0 column
    for (int i = 1; i < n / 2; ++i) s[static_cast<std::size_t>(n - i) * s.nc()] = std::conj(s[static_cast<std::size_t>(i) * s.nc()]);
    GridField rho = fft.inverse(s);
    auto u = velocity_field(rho);
    GridField d = derivative(fft, u.c1, 1, 0);
    GridField e = derivative(fft, u.c2, 0, 1);
    double umax = std::max(u.c1.max_abs(), u.c2.max_abs());
    double dmax = 0.0;
    for (std::size_t k = 0; k < d.values().size(); ++k) dmax = std::max(dmax, std::abs(d.values()[k] + e.values()[k]));
    CHECK(umax > 0.0);
    CHECK(dmax <= 1e-12 * umax);
}

TEST_CASE("uniform density is a fixed point of the step") {
    GridField one = InitialDensity::parse("uniform", 2.0).grid(32);
    GridField next = step_imex(one, 0.01);
    for (double v : next.values()) CHECK(v == 1.0);
}

TEST_CASE("pure diffusion decays one mode by exp(-4 pi^2 dt)") {
    const double a = 0.3, dt = 0.01;
    GridField rho = InitialDensity::parse("shear", 2.0).grid(32);
    GridField next = step_imex(rho, dt, 0.0);
    double f = std::exp(-4 * kPi * kPi * dt), err = 0.0;
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j)
            err = std::max(err, std::abs(next(i, j) - (1.0 + a * f * std::cos(2 * kPi * rho.coord(i)))));
    CHECK(err < 1e-10);
}

TEST_CASE("IMEX step conserves mass and is second order") {
    GridField rho = InitialDensity::parse("twomode", 2.0).grid(64);
    GridField one = step_imex(rho, 0.01);
    CHECK(std::abs(one.mean() - 1.0) < 1e-12);
    auto gap = [&](double dt) {
        GridField full = step_imex(rho, dt);
        GridField half = step_imex(step_imex(rho, dt / 2), dt / 2);
        return sup_diff(full, half);
    };
    double g1 = gap(0.00125), g2 = gap(0.000625), g3 = gap(0.0003125);
    MESSAGE("half-step gaps " << g1 << " " << g2 << " " << g3);
    CHECK(g1 / g2 >= 7.0);
    CHECK(g2 / g3 >= 7.0);
}

TEST_CASE("CFL violation rejects the step with a usable suggestion") {
    GridField rho = InitialDensity::parse("twomode", 2.0).grid(128);
    try {
        step_imex(rho, 1.0);
        FAIL("expected CflError");
    } catch (const CflError& e) {
        CHECK(e.suggested_dt > 0.0);
        CHECK_NOTHROW(step_imex(rho, e.suggested_dt));
    }
}

TEST_CASE("uniform initial data stays uniform") {
    auto snaps = solve_meanfield(InitialDensity::parse("uniform", 2.0), 1.0, 0.01, 32, {0.5, 1.0});
    for (const auto& s : snaps)
        for (double v : s.field.values()) CHECK(v == 1.0);
}

TEST_CASE("default run follows the decaying Taylor-Green profile") {
    auto rho0 = InitialDensity::parse("default", 2.0);
    auto snaps = solve_meanfield(rho0, 1.0, 1e-3, 64, {0.0, 0.25, 0.5, 1.0});
    REQUIRE(snaps.size() == 4);
    for (const auto& s : snaps) {
        GridField exact = GridField::from_function(64, [&](Vec2 p) { return default_exact(p, s.field.t); });
        CHECK(sup_diff(s.field, exact) < 1e-12);
        CHECK(s.norms.energy_residual <= 1e-6);
        CHECK(s.norms.energy_residual_inst <= 1e-6);
        CHECK(std::abs(s.norms.mass - 1.0) < 1e-13);
    }
    auto dist_uniform = [](const GridField& f) { return std::max(f.max() - 1.0, 1.0 - f.min()); };
    CHECK(dist_uniform(snaps[3].field) < dist_uniform(snaps[1].field));
    // closed-form running integral of |d1 rho|_inf^2 = pi^2 e^{-16 pi^2 s}
    double exact_int = (1.0 - std::exp(-16 * kPi * kPi * 0.25)) / 16.0;
    CHECK(snaps[1].norms.running(1) == doctest::Approx(exact_int).epsilon(5e-3));
}

TEST_CASE("twomode run: energy identity, monotone L2, positivity") {
    auto rho0 = InitialDensity::parse("twomode", 2.0);
    std::vector<double> times;
    for (int k = 0; k <= 20; ++k) times.push_back(0.025 * k);
    auto coarse = solve_meanfield(rho0, 0.5, 2e-3, 64, times);
    auto fine = solve_meanfield(rho0, 0.5, 1e-3, 64, times);
    for (std::size_t k = 1; k < fine.size(); ++k) {
        CHECK(fine[k].norms.l2_norm <= fine[k - 1].norms.l2_norm + 1e-10);
        CHECK(fine[k].norms.inf_value >= 0.5 - 1e-6);
        CHECK(fine[k].norms.sup_norm <= 2.0 + 1e-6);
    }
    double rc = coarse.back().norms.energy_residual, rf = fine.back().norms.energy_residual;
    MESSAGE("step energy residual dt=2e-3: " << rc << "  dt=1e-3: " << rf
                                             << "  instantaneous: " << fine.back().norms.energy_residual_inst);
    CHECK(fine.back().norms.energy_residual_inst <= 1e-12);
    CHECK(rf <= 1e-6);
    CHECK(rc / rf >= 3.0);
    // the nonlinearity is active on this density
    GridField heat = solve_meanfield(rho0, 0.5, 1e-3, 64, {0.05}, 2, 0.0).back().field;
    CHECK(sup_diff(fine[2].field, heat) > 1e-5);
}

TEST_CASE("doubling the grid changes reported norms by at most 1e-4 relative") {
    auto rho0 = InitialDensity::parse("twomode", 2.0);
    auto a = solve_meanfield(rho0, 0.3, 1e-3, 64, {0.1, 0.3}).back().norms;
    auto b = solve_meanfield(rho0, 0.3, 1e-3, 128, {0.1, 0.3}).back().norms;
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-300); };
    CHECK(rel(a.l2_norm, b.l2_norm) <= 1e-4);
    CHECK(rel(a.grad_l2, b.grad_l2) <= 1e-4);
    CHECK(rel(a.sup_norm, b.sup_norm) <= 1e-4);
    CHECK(rel(a.inf_value, b.inf_value) <= 1e-4);
    CHECK(rel(a.running(1), b.running(1)) <= 1e-4);
}

TEST_CASE("default run: gradient sup peaks early and running integrals saturate") {
    auto rho0 = InitialDensity::parse("default", 2.0);
    std::vector<double> times;
    for (int k = 0; k <= 50; ++k) times.push_back(0.1 * k);
    for (int n : {64, 128}) {
        auto snaps = solve_meanfield(rho0, 5.0, 2e-3, n, times);
        std::size_t arg = 0;
        for (std::size_t k = 0; k < snaps.size(); ++k)
            if (snaps[k].norms.d_sup(1) > snaps[arg].norms.d_sup(1)) arg = k;
        CHECK(snaps[arg].norms.t <= 0.5);
        for (std::size_t k = 6; k < snaps.size(); ++k) CHECK(snaps[k].norms.d_sup(1) <= snaps[k - 1].norms.d_sup(1));
        const auto& mid = snaps[25].norms;
        const auto& end = snaps[50].norms;
        for (int order : {1, 2}) CHECK(end.running(order) < 1.1 * mid.running(order));
    }
}

TEST_CASE("derivative norms of closed forms") {
    auto z = derivative_norms(InitialDensity::parse("uniform", 2.0).grid(32), 4);
    for (auto [m, v] : z.derivative_sup) CHECK(v == doctest::Approx(0.0));
    auto s = derivative_norms(InitialDensity::parse("shear", 2.0).grid(64), 2);
    CHECK(s.d_sup(1) == doctest::Approx(2 * kPi * 0.3).epsilon(1e-12));
    CHECK(s.d_sup(2) == doctest::Approx(4 * kPi * kPi * 0.3).epsilon(1e-12));
    CHECK(s.l2_norm == doctest::Approx(std::sqrt(1.0 + 0.045)).epsilon(1e-14));
    CHECK(s.grad_l2 == doctest::Approx(2 * kPi * 0.3 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK_THROWS(derivative_norms(InitialDensity::parse("shear", 2.0).grid(64), 5));
}

TEST_CASE("periodic heat kernel") {
    CHECK_THROWS_AS(heat_kernel_torus(0.0, {0.1, 0.1}), std::domain_error);
    for (Vec2 x : {Vec2{0.0, 0.0}, Vec2{0.3, -0.2}, Vec2{-0.5, 0.45}}) {
        double v = heat_kernel_torus(10.0, x);
        CHECK(v >= 1.0 - 1e-8);
        CHECK(v <= 1.0 + 1e-8);
    }
    GridField g = GridField::from_function(64, [](Vec2 p) { return heat_kernel_torus(0.01, p, 3); });
    CHECK(std::abs(integrate(g) - 1.0) < 1e-10);
    for (double v : g.values()) CHECK(v > 0.0);
    // Poisson summation: sum_k e^{-4 pi^2 |k|^2 t} e^{2 pi i k.x}
    const double t = 0.05;
    for (Vec2 x : {Vec2{0.0, 0.0}, Vec2{0.3, -0.2}, Vec2{-0.5, 0.45}}) {
        double f1 = 0.0, f2 = 0.0;
        for (int k = -30; k <= 30; ++k) {
            f1 += std::exp(-4 * kPi * kPi * k * k * t) * std::cos(2 * kPi * k * x.x1);
            f2 += std::exp(-4 * kPi * kPi * k * k * t) * std::cos(2 * kPi * k * x.x2);
        }
        CHECK(std::abs(heat_kernel_torus(t, x) - f1 * f2) < 1e-10);
    }
}
