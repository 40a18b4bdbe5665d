#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vortex/errors.hpp"
#include "vortex/harness.hpp"
#include "vortex/io.hpp"
#include "vortex/kernel.hpp"
#include "vortex/meanfield.hpp"
#include "vortex/moments.hpp"

#ifndef VORTEXLAB_VERSION
#define VORTEXLAB_VERSION "dev"
#endif

using namespace vortex;
namespace fs = std::filesystem;

namespace {

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) {
            std::size_t used = 0;
            double v = std::stod(item, &used);
            if (used != item.size()) throw ConfigError("bad number in list: " + item);
            out.push_back(v);
        }
    return out;
}

KernelSpec kernel_arg(const std::string& text) {
    try {
        return parse_kernel(text);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

void mark_incomplete(const std::string& dir) {
    write_text((fs::path(dir) / "status.json").string(), "{\n  \"complete\": false\n}\n");
}

int print_flags(const StudyResult& r) {
    for (const auto& f : r.flags)
        std::cout << (f.pass ? "PASS " : "FAIL ") << "[" << f.criterion << "] " << f.name << ": " << f.detail << "\n";
    return r.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vortexlab: propagation of chaos experiments for the 2D vortex model"};
    app.require_subcommand(1);
    app.set_version_flag("--version", VORTEXLAB_VERSION);

    std::string out, config_path, kernel_text = "mollified:0.01", rho0_text = "default";
    double lambda = 2.0;

    auto* kt = app.add_subcommand("kernel-table", "tabulate a kernel on an n x n node grid");
    int kt_n = 64;
    kt->add_option("--kernel", kernel_text, "kernel spec")->capture_default_str();
    kt->add_option("--n", kt_n, "nodes per side")->capture_default_str();
    kt->add_option("--out", out, "output csv")->required();

    auto* pde = app.add_subcommand("solve-pde", "solve the mean-field PDE");
    double pde_T = 5.0, pde_dt = 1e-3;
    int pde_n = 128;
    std::string pde_times;
    pde->add_option("--rho0", rho0_text)->capture_default_str();
    pde->add_option("--lambda", lambda)->capture_default_str();
    pde->add_option("--T", pde_T)->capture_default_str();
    pde->add_option("--dt", pde_dt)->capture_default_str();
    pde->add_option("--n", pde_n)->capture_default_str();
    pde->add_option("--times", pde_times, "comma-separated report times (default: T)");
    pde->add_option("--out", out, "output directory")->required();

    auto* sim = app.add_subcommand("simulate", "simulate the particle system");
    int sim_N = 256, sim_replicas = 16, sim_workers = 1;
    double sim_T = 1.0, sim_dt = 2e-3;
    uint64_t sim_seed = 20240601;
    std::string sim_snaps;
    sim->add_option("--N", sim_N)->capture_default_str();
    sim->add_option("--T", sim_T)->capture_default_str();
    sim->add_option("--dt", sim_dt)->capture_default_str();
    sim->add_option("--kernel", kernel_text)->capture_default_str();
    sim->add_option("--replicas", sim_replicas)->capture_default_str();
    sim->add_option("--seeds", sim_seed, "master seed")->capture_default_str();
    sim->add_option("--snap-times", sim_snaps, "comma-separated snapshot times (default: T)");
    sim->add_option("--rho0", rho0_text)->capture_default_str();
    sim->add_option("--lambda", lambda)->capture_default_str();
    sim->add_option("--workers", sim_workers)->capture_default_str();
    sim->add_option("--out", out, "output directory")->required();

    auto* est = app.add_subcommand("estimate", "estimate entropies and distances from saved snapshots");
    std::string est_snap, est_pde, est_k = "1,2", est_w2 = "exact";
    est->add_option("--snapshots", est_snap, "directory of snapshots_t<t>.csv")->required();
    est->add_option("--pde", est_pde, "directory of field_t<t>.csv")->required();
    est->add_option("--k", est_k)->capture_default_str();
    est->add_option("--w2", est_w2)->check(CLI::IsMember({"exact", "entropic"}))->capture_default_str();
    est->add_option("--lambda", lambda)->capture_default_str();
    est->add_option("--out", out, "report csv")->required();

    auto* conv = app.add_subcommand("converge", "N-sweep at fixed times");
    conv->add_option("--config", config_path, "JSON config")->required();
    conv->add_option("--out", out, "output directory")->required();

    auto* uni = app.add_subcommand("uniform-time", "time sweep at fixed N");
    double threshold = 1.5;
    uni->add_option("--config", config_path, "JSON config")->required();
    uni->add_option("--out", out, "output directory")->required();
    uni->add_option("--threshold", threshold, "uniformity ratio bound")->capture_default_str();

    auto* st = app.add_subcommand("selftest", "fast battery of module checks");
    st->add_option("--config", config_path, "JSON config (master_seed is used)");
    st->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*kt) {
            write_csv(out, kernel_table(kernel_arg(kernel_text), kt_n));
            return 0;
        }
        if (*pde) {
            InitialDensity rho0 = InitialDensity::parse(rho0_text, lambda);
            rho0.validate();
            std::vector<double> times = pde_times.empty() ? std::vector<double>{pde_T} : parse_list(pde_times);
            auto snaps = solve_meanfield(rho0, pde_T, pde_dt, pde_n, times);
            std::vector<NormReport> norms;
            for (const auto& s : snaps) {
                write_csv((fs::path(out) / time_file("field", s.field.t)).string(), field_table(s.field));
                norms.push_back(s.norms);
            }
            write_csv((fs::path(out) / "norms.csv").string(), norms_table(norms));
            return 0;
        }
        if (*sim) {
            SweepConfig c;
            c.N_list = {sim_N};
            c.times = sim_snaps.empty() ? std::vector<double>{sim_T} : parse_list(sim_snaps);
            c.dt = sim_dt;
            c.replicas = sim_replicas;
            c.master_seed = sim_seed;
            c.kernel = kernel_text;
            c.rho0 = rho0_text;
            c.lambda = lambda;
            c.workers = sim_workers;
            c.out_dir = out;
            c.validate();
            fs::create_directories(out);
            mark_incomplete(out);
            Ensemble e = simulate_sweep(c, sim_workers)[0];
            for (std::size_t s = 0; s < c.times.size(); ++s)
                write_csv((fs::path(out) / time_file("snapshots", c.times[s])).string(), snapshot_table(e, s));
            nlohmann::json meta;
            meta["config"] = nlohmann::json::parse(config_to_json(c));
            meta["code_version"] = VORTEXLAB_VERSION;
            meta["steps_per_replica"] = e.replicas.empty() ? 0 : e.replicas[0].steps;
            meta["complete"] = true;
            write_text((fs::path(out) / "meta.json").string(), meta.dump(2) + "\n");
            write_text((fs::path(out) / "status.json").string(), "{\n  \"complete\": true\n}\n");
            return 0;
        }
        if (*est) {
            std::vector<int> ks;
            for (double k : parse_list(est_k)) {
                if (k != 1.0 && k != 2.0) throw ConfigError("--k accepts 1 and 2");
                ks.push_back(static_cast<int>(k));
            }
            std::map<double, std::string> snaps, fields;
            for (const auto& f : fs::directory_iterator(est_snap)) {
                double t = time_from_file(f.path().filename().string(), "snapshots");
                if (!std::isnan(t)) snaps[t] = f.path().string();
            }
            for (const auto& f : fs::directory_iterator(est_pde)) {
                double t = time_from_file(f.path().filename().string(), "field");
                if (!std::isnan(t)) fields[t] = f.path().string();
            }
            if (snaps.empty()) throw ConfigError("no snapshots_t<t>.csv files in " + est_snap);
            SweepConfig c;
            c.lambda = lambda;
            c.estimator.w2_method = est_w2;
            StudyResult res;
            for (const auto& [t, path] : snaps) {
                auto it = fields.find(t);
                if (it == fields.end()) throw ConfigError("no PDE field for t = " + fmt(t));
                Ensemble e;
                add_snapshot(e, read_csv(path, kSnapshotHeader), t);
                GridField rho = field_from_table(read_csv(it->second, kFieldHeader), t);
                for (const auto& row : estimate_snapshot(e, 0, e.replicas.at(0).N, rho, c))
                    if (std::find(ks.begin(), ks.end(), row.k) != ks.end()) res.rows.push_back(row);
            }
            write_csv(out, res.tables()[0].second);
            return 0;
        }
        if (*conv || *uni) {
            SweepConfig c = load_config(config_path);
            fs::create_directories(out);
            mark_incomplete(out);
            StudyResult r = *conv ? run_convergence_study(c) : run_uniformity_study(c, threshold);
            r.write(out);
            return print_flags(r);
        }
        if (*st) {
            uint64_t seed = 20240601;
            if (!config_path.empty()) seed = load_config(config_path).master_seed;
            SelftestSummary s = run_selftest(out, seed);
            for (const auto& c : s.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " " << fmt(c.value) << "\n";
            std::cout << "hash " << s.hash << "\n";
            return s.pass ? 0 : 1;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
