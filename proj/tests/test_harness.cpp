#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "vortex/errors.hpp"
#include "vortex/harness.hpp"

using namespace vortex;
namespace fs = std::filesystem;

namespace {

SweepConfig small_config() {
    SweepConfig c;
    c.N_list = {16, 32, 48, 64};
    c.times = {0.02};
    c.replicas = 8;
    c.kernel = "mollified:0.05";
    c.pde_n = 32;
    return c;
}

std::string all_tables(const StudyResult& r) {
    std::string s;
    for (const auto& [name, t] : r.tables()) s += name + "\n" + t.text();
    return s;
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("vortexlab_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("sweeps do not depend on the worker count") {
    SweepConfig c = small_config();
    auto a = simulate_sweep(c, 1), b = simulate_sweep(c, 3);
    REQUIRE(a.size() == b.size());
    for (std::size_t n = 0; n < a.size(); ++n)
        for (std::size_t r = 0; r < a[n].replicas.size(); ++r) {
            CHECK(a[n].replicas[r].seed_id == b[n].replicas[r].seed_id);
            const auto& p = a[n].positions(r, 0);
            const auto& q = b[n].positions(r, 0);
            REQUIRE(p.size() == q.size());
            for (std::size_t i = 0; i < p.size(); ++i) {
                CHECK(p[i].x1 == q[i].x1);
                CHECK(p[i].x2 == q[i].x2);
            }
        }
}

TEST_CASE("convergence study is independent of N order and worker count") {
    SweepConfig c = small_config();
    StudyResult a = run_convergence_study(c);
    c.N_list = {48, 16, 64, 32};
    c.workers = 2;
    StudyResult b = run_convergence_study(c);
    CHECK(all_tables(a) == all_tables(b));
    CHECK(a.rows.size() == 8);
    // workload accounting: replicas x steps x N
    REQUIRE(a.workload.size() == 4);
    for (const auto& w : a.workload) {
        CHECK(w.steps == steps_between(0.0, 0.02, c.dt));
        CHECK(w.particle_steps == static_cast<long long>(c.replicas) * w.steps * w.N);
    }
    for (const auto& r : a.rows) {
        CHECK(r.h_k.stderr_ > 0.0);
        CHECK(r.w2_emp.stderr_ > 0.0);
        CHECK(r.l1_k.value >= 0.0);
        CHECK(r.w2_k.value >= 0.0);
        CHECK(r.B_N.value >= 0.0);
    }
}

TEST_CASE("studies refuse degenerate configurations") {
    SweepConfig c = small_config();
    c.N_list = {64};
    CHECK_THROWS_AS(run_convergence_study(c), ConfigError);
    c.N_list = {16, 32, 32, 64};
    CHECK_THROWS_AS(run_convergence_study(c), ConfigError);
    c = small_config();
    c.replicas = 4;
    CHECK_THROWS_AS(run_convergence_study(c), ConfigError);
    c = small_config();
    c.times = {0.5, 2, 3, 4, 5};
    CHECK_THROWS_AS(run_uniformity_study(c), ConfigError);
    c.times = {1, 2, 3, 4, 5};
    CHECK_THROWS_AS(run_uniformity_study(c), ConfigError);
}

TEST_CASE("convergence study recovers the empirical-measure rate") {
    SweepConfig c;
    c.N_list = {64, 128, 256, 512};
    c.times = {1.0};
    c.replicas = 8;
    c.kernel = "mollified:0.05";
    c.pde_n = 64;
    StudyResult r = run_convergence_study(c);
    const FitRow* f = nullptr;
    for (const auto& x : r.fits)
        if (x.quantity == "w2_emp" && x.model == "power_with_log") f = &x;
    REQUIRE(f != nullptr);
    CHECK(f->fit.exponent >= -0.65);
    CHECK(f->fit.exponent <= -0.35);
    REQUIRE(r.flags.size() == 2);
    CHECK(r.flags[0].criterion == "6");
    CHECK(r.flags[0].pass);
}

TEST_CASE("uniformity controls") {
    SweepConfig c;
    c.N_list = {128};
    c.times = {0.5, 1, 2, 3, 4, 5};
    c.replicas = 8;
    c.pde_n = 32;
    SUBCASE("pure diffusion stays within 1.1") {
        c.kernel = "off";
        StudyResult r = run_uniformity_study(c, 1.1);
        REQUIRE(r.flags.size() == 2);
        for (const auto& f : r.flags) CHECK_MESSAGE(f.pass, f.name << ": " << f.detail);
        for (const auto& x : r.ratios)
            if (x.t == 1.0) CHECK(x.r == 1.0);
    }
    SUBCASE("a sign-flipped drift still looks uniform in time") {
        // uniformity alone does not validate the drift
        c.kernel = "flipped:mollified:0.05";
        StudyResult r = run_uniformity_study(c);
        for (const auto& f : r.flags) CHECK_MESSAGE(f.pass, f.name << ": " << f.detail);
    }
}

TEST_CASE("study outputs carry the report schema and are reproducible") {
    SweepConfig c = small_config();
    fs::path d1 = scratch("study1"), d2 = scratch("study2");
    run_convergence_study(c).write((d1 / "nested").string());
    run_convergence_study(c).write(d2.string());
    CsvTable t = read_csv((d1 / "nested" / "report.csv").string(), kReportHeader);
    CHECK(t.rows.size() == 8);
    for (const char* f : {"report.csv", "diagnostics.csv", "fits.csv", "flags.csv", "ratios.csv", "workload.csv"})
        CHECK(read_text((d1 / "nested" / f).string()) == read_text((d2 / f).string()));
    CHECK(fs::exists(d1 / "nested" / "status.json"));
}

TEST_CASE("selftest passes, is reproducible and creates its directory") {
    fs::path d = scratch("selftest") / "deeper";
    SelftestSummary a = run_selftest(d.string());
    for (const auto& c : a.checks) CHECK_MESSAGE(c.pass, c.name << ": " << c.detail);
    CHECK(a.pass);
    CHECK(fs::exists(d / "summary.json"));
    SelftestSummary b = run_selftest(d.string());
    CHECK(a.hash == b.hash);
    CHECK(a.hash.size() == 16);
}

TEST_CASE("csv helpers") {
    CHECK(fmt(0.1) == "0.10000000000000001");
    CHECK(time_file("field", 0.25) == "field_t0.25.csv");
    CHECK(time_from_file("field_t0.25.csv", "field") == 0.25);
    CHECK(std::isnan(time_from_file("norms.csv", "field")));
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    fs::path d = scratch("csv");
    CsvTable t{{"a", "b"}, {}};
    t.add({"1", "2"});
    write_csv((d / "x.csv").string(), t);
    CHECK_THROWS_AS(read_csv((d / "x.csv").string(), {"a", "c"}), std::runtime_error);
    try {
        read_csv((d / "x.csv").string(), {"a", "c"});
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("missing: c") != std::string::npos);
    }
    CHECK_THROWS_AS(t.add({"1"}), std::invalid_argument);

    CsvTable q{{"name", "detail"}, {}};
    q.add({"w2", "exponent in [-0.65, -0.35]"});
    q.add({"say \"hi\"", ",,"});
    write_csv((d / "q.csv").string(), q);
    CHECK(read_text((d / "q.csv").string()) == "name,detail\nw2,\"exponent in [-0.65, -0.35]\"\n\"say \"\"hi\"\"\",\",,\"\n");
    CsvTable back = read_csv((d / "q.csv").string(), {"name", "detail"});
    CHECK(back.rows == q.rows);
}
