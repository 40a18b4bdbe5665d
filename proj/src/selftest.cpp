#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>

#include "json.hpp"
#include "vortex/harness.hpp"
#include "vortex/kernel.hpp"
#include "vortex/meanfield.hpp"
#include "vortex/moments.hpp"
#include "vortex/rng.hpp"
#include "vortex/transport.hpp"

namespace vortex {

std::string SelftestSummary::json() const {
    nlohmann::json j;
    j["pass"] = pass;
    j["hash"] = hash;
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks)
        j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"detail", c.detail}});
    return j.dump(2) + "\n";
}

namespace {

struct Battery {
    std::vector<SelftestCheck> checks;

    void run(const std::string& name, const std::function<SelftestCheck()>& f) {
        SelftestCheck c;
        try {
            c = f();
        } catch (const std::exception& e) {
            c.pass = false;
            c.detail = std::string("exception: ") + e.what();
        }
        c.name = name;
        checks.push_back(c);
    }
};

SelftestCheck check(bool pass, double value, std::string detail = {}) { return {"", pass, value, std::move(detail)}; }

std::vector<Vec2> uniform_points(int n, uint64_t seed) {
    PhiloxStream s(seed, 0);
    std::vector<Vec2> p(static_cast<std::size_t>(n));
    for (auto& x : p) x = wrap({s.uniform() - 0.5, s.uniform() - 0.5});
    return p;
}

}  // namespace

SelftestSummary run_selftest(const std::string& out_dir, uint64_t seed) {
    constexpr double kPi = std::numbers::pi;
    Battery b;
    const InitialDensity def = InitialDensity::parse("default", 2.0);

    b.run("kernel.pair_oddness", [&] {
        PairKernel k(parse_kernel("mollified:0.05"));
        double worst = 0.0;
        for (const auto& d : uniform_points(200, seed)) {
            Vec2 a = k(d.x1, d.x2), m = k(-d.x1, -d.x2);
            worst = std::max({worst, std::abs(a.x1 + m.x1), std::abs(a.x2 + m.x2)});
        }
        return check(worst == 0.0, worst);
    });
    b.run("kernel.periodicity", [&] {
        double worst = 0.0;
        for (const auto& x : uniform_points(50, seed + 1)) {
            if (x.norm() < 1e-3) continue;
            Vec2 a = eval_periodic_kernel_fast(x), c = eval_periodic_kernel_fast({x.x1 + 1.0, x.x2 - 1.0});
            worst = std::max({worst, std::abs(a.x1 - c.x1), std::abs(a.x2 - c.x2)});
        }
        return check(worst <= 1e-12, worst);
    });
    b.run("kernel.lattice_cauchy_40_80", [&] {
        Vec2 x{0.3, 0.1};
        Vec2 a = eval_periodized_kernel(x, 40), c = eval_periodized_kernel(x, 80);
        double d = std::hypot(a.x1 - c.x1, a.x2 - c.x2);
        return check(d <= 1e-6, d);
    });
    b.run("meanfield.mass_and_band", [&] {
        auto snaps = solve_meanfield(def, 0.1, 1e-3, 32, {0.05, 0.1});
        double drift = std::abs(snaps.back().norms.mass - 1.0);
        bool band = snaps.back().norms.inf_value >= 0.5 - 1e-6 && snaps.back().norms.sup_norm <= 2.0 + 1e-6;
        return check(drift <= 1e-12 && band, drift);
    });
    b.run("meanfield.heat_flow_default", [&] {
        // the default density evolves by pure heat flow
        auto snaps = solve_meanfield(def, 0.05, 1e-3, 32, {0.05});
        double a = 0.5 * std::exp(-8 * kPi * kPi * 0.05), worst = 0.0;
        const GridField& f = snaps.back().field;
        for (int i = 0; i < 32; ++i)
            for (int j = 0; j < 32; ++j)
                worst = std::max(worst, std::abs(f(i, j) - 1.0 - a * std::cos(2 * kPi * f.coord(i)) * std::cos(2 * kPi * f.coord(j))));
        return check(worst <= 1e-10, worst);
    });
    b.run("particles.seed_determinism", [&] {
        auto a = sample_initial(def, 64, seed), c = sample_initial(def, 64, seed), d = sample_initial(def, 64, seed + 1);
        bool same = a.positions[17].x1 == c.positions[17].x1 && a.positions[63].x2 == c.positions[63].x2;
        bool differ = a.positions[17].x1 != d.positions[17].x1;
        return check(same && differ, 0.0);
    });
    b.run("particles.drift_sum_zero", [&] {
        PairKernel k(parse_kernel("mollified:0.05"));
        auto f = drift(uniform_points(300, seed + 2), k);
        double s1 = 0.0, s2 = 0.0;
        for (const auto& v : f) {
            s1 += v.x1;
            s2 += v.x2;
        }
        double s = std::hypot(s1, s2);
        return check(s <= 1e-10, s);
    });
    b.run("transport.single_pair_and_wrap", [&] {
        double a = w2_exact(WeightedPoints::empirical({{0.1, 0.0}}), WeightedPoints::empirical({{0.1, 0.3}})).w2;
        double c = w2_exact(WeightedPoints::empirical({{0.4, 0.0}}), WeightedPoints::empirical({{-0.4, 0.0}})).w2;
        double e = std::max(std::abs(a - 0.3), std::abs(c - 0.2));
        return check(e <= 1e-12, e);
    });
    b.run("estimators.change_of_measure_random", [&] {
        PhiloxStream s(seed, 9);
        int passed = 0;
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> mu(50), nu(50), phi(50);
            for (auto& x : mu) x = s.uniform() + 1e-3;
            for (auto& x : nu) x = s.uniform() + 1e-3;
            double sm = 0, sn = 0;
            for (double x : mu) sm += x;
            for (double x : nu) sn += x;
            for (auto& x : mu) x /= sm;
            for (auto& x : nu) x /= sn;
            for (auto& x : phi) x = 2 * s.uniform() - 1;
            passed += change_of_measure_check(mu, nu, phi, std::exp(2 * s.uniform() - 1), 64).pass;
        }
        return check(passed == 100, passed);
    });
    b.run("estimators.moment_A_constants", [&] {
        auto c = moment_a_constants(1.0 / 16, 2.0);
        return check(std::abs(c.C - 2.6716) <= 1e-4, c.C);
    });
    b.run("estimators.moment_A_verdict", [&] {
        auto v = mc_exponential_moment_A(def.grid(32), 1.0 / 16, 64, 2000, seed);
        return check(v.pass, v.lhs, "rhs " + fmt(v.rhs));
    });
    b.run("estimators.moment_B_verdict", [&] {
        auto v = mc_exponential_moment_B(def.grid(32), 2.0, 64, 500, seed);
        return check(v.pass && v.gamma <= 0.25, v.lhs, "rhs " + fmt(v.rhs) + ", gamma " + fmt(v.gamma));
    });
    b.run("estimators.kl_iid", [&] {
        Ensemble e;
        e.snapshot_times = {0.0};
        for (int r = 0; r < 8; ++r) {
            Trajectory t;
            t.snapshots.push_back({0.0, sample_initial(def, 2048, derive_seed(seed, 3, static_cast<uint64_t>(r))).positions});
            e.replicas.push_back(std::move(t));
        }
        auto h = marginal_kl(e, 0, def.grid(64), 1, 24);
        return check(std::abs(h.value - h.bias) <= 3 * h.stderr_, h.value - h.bias);
    });
    b.run("estimators.dv_zero", [&] {
        auto v = dv_entropy_lower_bound(GridField(32), uniform_points(100, seed), def.grid(32));
        return check(v.value == 0.0, v.value);
    });
    b.run("estimators.lsi_constant", [&] {
        double v = lsi_constant(1.0);
        return check(std::abs(v - 0.0126651) <= 1e-7, v);
    });
    b.run("estimators.rate_fit_exact", [&] {
        std::vector<std::pair<double, double>> d;
        for (double N : {64.0, 128.0, 256.0, 512.0}) d.push_back({N, 0.3 * std::log1p(N) / std::sqrt(N)});
        double p = rate_fit(d, RateModel::PowerWithLog).exponent;
        return check(std::abs(p + 0.5) <= 1e-12, p);
    });

    SelftestSummary s;
    s.checks = b.checks;
    s.pass = true;
    std::string canon;
    for (const auto& c : s.checks) {
        s.pass = s.pass && c.pass;
        canon += c.name + "|" + (c.pass ? "1" : "0") + "|" + fmt(c.value) + "\n";
    }
    s.hash = fnv1a_hex(canon);
    std::filesystem::create_directories(out_dir);
    write_text((std::filesystem::path(out_dir) / "summary.json").string(), s.json());
    return s;
}

}  // namespace vortex
