#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "vortex/grid.hpp"

using namespace vortex;
constexpr double kPi = std::numbers::pi;

TEST_CASE("forward transform returns Fourier coefficients of the trigonometric interpolant") {
    const int n = 32;
    // f = 1 + 0.3 cos(2 pi x1) + 0.2 sin(2 pi (x1 + 2 x2))
    auto f = GridField::from_function(n, [](Vec2 p) {
        return 1.0 + 0.3 * std::cos(2 * kPi * p.x1) + 0.2 * std::sin(2 * kPi * (p.x1 + 2 * p.x2));
    });
    Fft2 fft(n);
    Spectrum s = fft.forward(f);
    auto at = [&](int k1, int k2) { return s[static_cast<std::size_t>((k1 + n) % n) * s.nc() + k2]; };
    CHECK(std::abs(at(0, 0) - cplx(1.0)) < 1e-14);
    CHECK(std::abs(at(1, 0) - cplx(0.15)) < 1e-14);
    CHECK(std::abs(at(1, 2) - cplx(0.0, -0.1)) < 1e-14);
    CHECK(std::abs(at(-1, 2)) < 1e-14);
    GridField back = fft.inverse(s);
    for (std::size_t k = 0; k < f.values().size(); ++k) CHECK(std::abs(back.values()[k] - f.values()[k]) < 1e-14);
}

TEST_CASE("spectral derivatives of a band-limited field") {
    const int n = 64;
    const double a = 0.4;
    auto f = GridField::from_function(n, [&](Vec2 p) { return 1.0 + a * std::cos(2 * kPi * p.x1) * std::sin(4 * kPi * p.x2); });
    Fft2 fft(n);
    GridField d1 = derivative(fft, f, 1, 0);
    GridField d22 = derivative(fft, f, 0, 2);
    GridField d12 = derivative(fft, f, 1, 1);
    double err1 = 0, err22 = 0, err12 = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double x1 = f.coord(i), x2 = f.coord(j);
            err1 = std::max(err1, std::abs(d1(i, j) + a * 2 * kPi * std::sin(2 * kPi * x1) * std::sin(4 * kPi * x2)));
            err22 = std::max(err22, std::abs(d22(i, j) + a * 16 * kPi * kPi * std::cos(2 * kPi * x1) * std::sin(4 * kPi * x2)));
            err12 = std::max(err12, std::abs(d12(i, j) + a * 8 * kPi * kPi * std::sin(2 * kPi * x1) * std::cos(4 * kPi * x2)));
        }
    }
    CHECK(err1 < 1e-12);
    CHECK(err22 < 1e-10);
    CHECK(err12 < 1e-10);
}

TEST_CASE("cell masses integrate the interpolant exactly") {
    const int n = 64;
    const double a = 0.5;
    auto f = GridField::from_function(n, [&](Vec2 p) { return 1.0 + a * std::cos(2 * kPi * p.x1) * std::cos(2 * kPi * p.x2); });
    const int m = 24;
    auto masses = cell_masses(f, m);
    double total = 0.0, err = 0.0;
    for (int c1 = 0; c1 < m; ++c1) {
        for (int c2 = 0; c2 < m; ++c2) {
            double l1 = -0.5 + static_cast<double>(c1) / m, r1 = l1 + 1.0 / m;
            double l2 = -0.5 + static_cast<double>(c2) / m, r2 = l2 + 1.0 / m;
            double exact = (r1 - l1) * (r2 - l2) + a * (std::sin(2 * kPi * r1) - std::sin(2 * kPi * l1)) / (2 * kPi) *
                                                        (std::sin(2 * kPi * r2) - std::sin(2 * kPi * l2)) / (2 * kPi);
            double got = masses[static_cast<std::size_t>(c1) * m + c2];
            err = std::max(err, std::abs(got - exact));
            total += got;
        }
    }
    CHECK(err < 1e-15);
    CHECK(std::abs(total - 1.0) < 1e-13);
}

TEST_CASE("resampling a band-limited field is exact") {
    auto fn = [](Vec2 p) { return 1.0 + 0.3 * std::cos(2 * kPi * p.x1) - 0.1 * std::sin(2 * kPi * (2 * p.x1 - p.x2)); };
    auto f = GridField::from_function(32, fn);
    for (int m : {16, 64}) {
        GridField g = resample(f, m);
        double err = 0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) err = std::max(err, std::abs(g(i, j) - fn({g.coord(i), g.coord(j)})));
        CHECK(err < 1e-14);
    }
}

TEST_CASE("bilinear sampling reproduces node values and wraps") {
    auto f = GridField::from_function(16, [](Vec2 p) { return p.x1 + 2 * p.x2 * p.x2; });
    CHECK(f.sample({f.coord(3), f.coord(5)}) == doctest::Approx(f(3, 5)).epsilon(1e-14));
    CHECK(f.sample({f.coord(3) + 1.0, f.coord(5) - 2.0}) == doctest::Approx(f(3, 5)).epsilon(1e-14));
    double mid = f.sample({0.5 * (f.coord(3) + f.coord(4)), f.coord(5)});
    CHECK(mid == doctest::Approx(0.5 * (f(3, 5) + f(4, 5))).epsilon(1e-14));
}

TEST_CASE("grid sizes are validated") {
    CHECK_THROWS(Fft2(12));
    CHECK_THROWS(GridField(3));
    CHECK(is_power_of_two(64));
    CHECK_FALSE(is_power_of_two(96));
}
