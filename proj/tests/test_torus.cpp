#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "vortex/rng.hpp"
#include "vortex/torus.hpp"

using namespace vortex;

TEST_CASE("wrap lands in [-1/2, 1/2) and is idempotent") {
    PhiloxStream rng(1, 0);
    for (int i = 0; i < 10000; ++i) {
        double v = (rng.uniform() - 0.5) * 20.0;
        double w = wrap1(v);
        CHECK(w >= -0.5);
        CHECK(w < 0.5);
        CHECK(wrap1(w) == w);
        CHECK(std::abs(std::remainder(v - w, 1.0)) < 1e-12);
    }
    CHECK(wrap1(0.5) == -0.5);
    CHECK(wrap1(-0.5) == -0.5);
    CHECK(wrap1(0.49999999999999994) < 0.5);
    CHECK(wrap1(-0.50000000000000011) < 0.5);
    CHECK(wrap1(-0.50000000000000011) >= -0.5);
}

TEST_CASE("torus distance is symmetric and satisfies the triangle inequality") {
    PhiloxStream rng(2, 0);
    auto pt = [&] { return Vec2{rng.uniform() - 0.5, rng.uniform() - 0.5}; };
    for (int i = 0; i < 5000; ++i) {
        Vec2 a = pt(), b = pt(), c = pt();
        CHECK(torus_dist(a, b) == torus_dist(b, a));
        CHECK(torus_dist(a, c) <= torus_dist(a, b) + torus_dist(b, c) + 1e-15);
        CHECK(torus_dist(a, b) <= std::sqrt(0.5) + 1e-15);
    }
    CHECK(torus_dist({0.4, 0.0}, {-0.4, 0.0}) == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("require_wrapped rejects unwrapped positions") {
    std::vector<Vec2> ok{{0.1, -0.5}, {0.49, 0.2}};
    CHECK_NOTHROW(require_wrapped(ok));
    std::vector<Vec2> bad{{0.1, 0.5}};
    CHECK_THROWS_AS(require_wrapped(bad), std::invalid_argument);
}

TEST_CASE("Philox4x32-10 known-answer vectors") {
    auto a = philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(a[0] == 0x6627e8d5u);
    CHECK(a[1] == 0xe169c58du);
    CHECK(a[2] == 0xbc57ac4cu);
    CHECK(a[3] == 0x9b00dbd8u);
    auto b = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(b[0] == 0x408f276du);
    CHECK(b[1] == 0x41c83b0eu);
    CHECK(b[2] == 0xa20bc7c6u);
    CHECK(b[3] == 0x6d5451fdu);
    auto c = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(c[0] == 0xd16cfe09u);
    CHECK(c[1] == 0x94fdccebu);
    CHECK(c[2] == 0x5001e420u);
    CHECK(c[3] == 0x24126ea1u);
}

TEST_CASE("stream draws are reproducible and streams differ") {
    PhiloxStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    bool differ_c = false, differ_d = false;
    for (int i = 0; i < 100; ++i) {
        double va = a.uniform();
        CHECK(va == b.uniform());
        differ_c |= va != c.uniform();
        differ_d |= va != d.uniform();
    }
    CHECK(differ_c);
    CHECK(differ_d);
}

TEST_CASE("uniform and normal moments") {
    PhiloxStream rng(3, 1);
    const int n = 200000;
    double su = 0, su2 = 0, sn = 0, sn2 = 0, sn4 = 0;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        su += u;
        su2 += u * u;
        double z = rng.normal();
        sn += z;
        sn2 += z * z;
        sn4 += z * z * z * z;
    }
    CHECK(std::abs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(su2 / n - 1.0 / 3) < 4 * std::sqrt(4.0 / 45 / n));
    CHECK(std::abs(sn / n) < 4 / std::sqrt(n));
    CHECK(std::abs(sn2 / n - 1.0) < 4 * std::sqrt(2.0 / n));
    CHECK(std::abs(sn4 / n - 3.0) < 4 * std::sqrt(96.0 / n));
}

TEST_CASE("below is unbiased over a small range") {
    PhiloxStream rng(4, 0);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) counts[rng.below(7)]++;
    for (int c : counts) CHECK(std::abs(c - n / 7.0) < 4 * std::sqrt(n / 7.0));
}

TEST_CASE("derived seeds are distinct across cells") {
    std::set<uint64_t> seen;
    for (uint64_t a = 0; a < 50; ++a)
        for (uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(99, 1, a, b));
    CHECK(seen.size() == 2500);
    CHECK(derive_seed(99, 1, 3, 4) == derive_seed(99, 1, 3, 4));
    CHECK(derive_seed(99, 1, 3, 4) != derive_seed(100, 1, 3, 4));
}
