#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "vortex/errors.hpp"
#include "vortex/picard.hpp"

using namespace vortex;
constexpr double kPi = std::numbers::pi;

namespace {

double sup_diff(const GridField& a, const GridField& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
    return m;
}

}  // namespace

TEST_CASE("uniform density is a fixed point of every iterate") {
    PicardOptions opt;
    opt.n = 32;
    auto r = picard_iterate(InitialDensity::parse("uniform", 2.0), 0.1, 3, opt);
    for (const auto& g : r.iterates)
        for (double v : g.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
    for (double d : r.distances) CHECK(d < 1e-15);
}

TEST_CASE("iterate 0 is the heat flow of the initial density") {
    PicardOptions opt;
    auto rho0 = InitialDensity::parse("twomode", 2.0);
    auto r = picard_iterate(rho0, 0.1, 1, opt);
    const double a = 0.3, b = 0.2, t = 0.1;
    GridField exact = GridField::from_function(64, [&](Vec2 p) {
        return 1.0 + a * std::exp(-4 * kPi * kPi * t) * std::cos(2 * kPi * p.x1) +
               b * std::exp(-8 * kPi * kPi * t) * std::sin(2 * kPi * (p.x1 + p.x2));
    });
    CHECK(sup_diff(r.iterates[0], exact) < 1e-14);
}

TEST_CASE("Picard and pseudospectral solutions agree on the default density") {
    auto rho0 = InitialDensity::parse("default", 2.0);
    GridField p = solve_picard(rho0, 0.2, 8, 64, 2e-3);
    GridField s = solve_meanfield(rho0, 0.2, 1e-3, 64, {0.2}).back().field;
    CHECK(sup_diff(p, s) <= 1e-3);
    CHECK(sup_diff(p, s) <= 1e-12);
}

TEST_CASE("Picard iterates contract and match the pseudospectral solution with active transport") {
    auto rho0 = InitialDensity::parse("twomode", 2.0);
    PicardOptions opt;
    auto r = picard_iterate(rho0, 0.05, 8, opt);
    REQUIRE(r.distances.size() == 8);
    MESSAGE("distances:");
    for (double d : r.distances) MESSAGE(d);
    for (std::size_t k = 2; k < r.distances.size(); ++k)
        if (r.distances[k - 1] > opt.floor) CHECK(r.distances[k] <= 0.9 * r.distances[k - 1]);
    CHECK(r.distances[0] > 1e-6);
    GridField s = solve_meanfield(rho0, 0.05, 2.5e-4, 64, {0.05}).back().field;
    GridField heat = r.iterates[0];
    double gap = sup_diff(r.field, s);
    MESSAGE("picard vs imex " << gap << ", nonlinear effect " << sup_diff(s, heat));
    CHECK(gap <= 1e-3);
    CHECK(gap <= 1e-3 * sup_diff(s, heat));
    CHECK(sup_diff(picard_iterate(rho0, 0.2, 8, opt).field, solve_meanfield(rho0, 0.2, 1e-3, 64, {0.2}).back().field) <= 1e-3);
}

TEST_CASE("non-contraction is reported") {
    PicardOptions opt;
    opt.n = 32;
    opt.kernel_strength = 3000.0;
    opt.dt_quad = 1e-3;
    CHECK_THROWS_AS(picard_iterate(InitialDensity::parse("twomode", 2.0), 0.5, 8, opt), HorizonTooLarge);
}

TEST_CASE("argument validation") {
    auto rho0 = InitialDensity::parse("default", 2.0);
    PicardOptions opt;
    CHECK_THROWS_AS(picard_iterate(rho0, 0.2, 0, opt), ConfigError);
    CHECK_THROWS_AS(picard_iterate(rho0, -1.0, 2, opt), ConfigError);
    opt.n = 48;
    CHECK_THROWS_AS(picard_iterate(rho0, 0.2, 2, opt), ConfigError);
}
