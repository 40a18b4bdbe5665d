#include "vortex/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <set>
#include <thread>

#include "json.hpp"

#include "vortex/errors.hpp"
#include "vortex/meanfield.hpp"
#include "vortex/moments.hpp"

namespace vortex {

bool StudyResult::pass() const {
    for (const auto& f : flags)
        if (!f.pass) return false;
    return true;
}

std::vector<std::pair<std::string, CsvTable>> StudyResult::tables() const {
    CsvTable report{kReportHeader, {}};
    CsvTable diag{{"t", "N", "k", "h_k_bias", "samples", "undersampled", "w2_quant_baseline", "A_N_err", "B_N_err",
                   "I_proxy"},
                  {}};
    for (const auto& r : rows) {
        report.add({fmt(r.t), std::to_string(r.N), std::to_string(r.k), fmt(r.h_k.value), fmt(r.h_k.stderr_),
                    fmt(r.l1_k.value), fmt(r.l1_k.stderr_), fmt(r.w2_k.value), fmt(r.w2_k.stderr_), fmt(r.w2_emp.value),
                    fmt(r.w2_emp.stderr_), fmt(r.A_N.value), fmt(r.B_N.value)});
        diag.add({fmt(r.t), std::to_string(r.N), std::to_string(r.k), fmt(r.h_k.bias), std::to_string(r.h_k.samples),
                  r.h_k.undersampled ? "1" : "0", fmt(r.w2_quant_baseline), fmt(r.A_N.stderr_), fmt(r.B_N.stderr_),
                  fmt(r.I_proxy)});
    }
    CsvTable fit{{"t", "quantity", "model", "exponent", "exponent_err", "prefactor", "residual"}, {}};
    for (const auto& f : fits)
        fit.add({fmt(f.t), f.quantity, f.model, fmt(f.fit.exponent), fmt(f.fit.exponent_stderr), fmt(f.fit.prefactor),
                 fmt(f.fit.residual)});
    CsvTable ratio{{"N", "t", "quantity", "r", "r_err"}, {}};
    for (const auto& r : ratios) ratio.add({std::to_string(r.N), fmt(r.t), r.quantity, fmt(r.r), fmt(r.r_err)});
    CsvTable flag{{"criterion", "name", "pass", "detail"}, {}};
    for (const auto& f : flags) flag.add({f.criterion, f.name, f.pass ? "1" : "0", f.detail});
    CsvTable work{{"N", "replicas", "steps", "particle_steps"}, {}};
    for (const auto& w : workload)
        work.add({std::to_string(w.N), std::to_string(w.replicas), std::to_string(w.steps), std::to_string(w.particle_steps)});
    return {{"report.csv", report}, {"diagnostics.csv", diag}, {"fits.csv", fit},
            {"ratios.csv", ratio},  {"flags.csv", flag},       {"workload.csv", work}};
}

void StudyResult::write(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json files = nlohmann::json::array();
    for (const auto& [name, table] : tables()) {
        write_csv((std::filesystem::path(dir) / name).string(), table);
        files.push_back(name);
    }
    nlohmann::json status{{"complete", true}, {"pass", pass()}, {"files", files}, {"wall_seconds", wall_seconds}};
    write_text((std::filesystem::path(dir) / "status.json").string(), status.dump(2) + "\n");
}

namespace {

std::vector<int> sorted_unique(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

int resolve_workers(int w) {
    if (w > 0) return w;
    unsigned h = std::thread::hardware_concurrency();
    return h ? static_cast<int>(h) : 1;
}

}  // namespace

std::vector<Ensemble> simulate_sweep(const SweepConfig& c, int workers) {
    c.validate();
    const std::vector<int> Ns = c.N_list;
    InitialDensity rho0 = InitialDensity::parse(c.rho0, c.lambda);
    PairKernel kernel(parse_kernel(c.kernel));
    std::vector<Ensemble> out(Ns.size());
    for (auto& e : out) {
        e.snapshot_times = c.times;
        e.replicas.resize(static_cast<std::size_t>(c.replicas));
    }
    // largest cells first so the pool drains evenly
    std::vector<std::pair<std::size_t, int>> cells;
    for (std::size_t a = 0; a < Ns.size(); ++a)
        for (int r = 0; r < c.replicas; ++r) cells.push_back({a, r});
    std::stable_sort(cells.begin(), cells.end(), [&](auto x, auto y) { return Ns[x.first] > Ns[y.first]; });
    const int pool = std::max(1, std::min<int>(resolve_workers(workers), static_cast<int>(cells.size())));
    const int hw = resolve_workers(0);
    const int inner = std::max(1, hw / pool);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto work = [&] {
        for (;;) {
            std::size_t k = next.fetch_add(1);
            if (k >= cells.size()) return;
            auto [a, r] = cells[k];
            try {
                Trajectory tr = simulate_trajectory(rho0, Ns[a], c.times, c.dt, kernel,
                                                    replica_seed(c.master_seed, Ns[a], r), inner);
                tr.replica = r;
                out[a].replicas[static_cast<std::size_t>(r)] = std::move(tr);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
                next = cells.size();
            }
        }
    };
    if (pool == 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < pool; ++w) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<GridField> pde_at_times(const SweepConfig& c) {
    InitialDensity rho0 = InitialDensity::parse(c.rho0, c.lambda);
    auto snaps = solve_meanfield(rho0, c.horizon(), c.pde_dt, c.pde_n, c.times, 2);
    std::vector<GridField> out;
    for (auto& s : snaps) out.push_back(std::move(s.field));
    return out;
}

std::vector<EntropyReport> estimate_snapshot(const Ensemble& ens, std::size_t snap, int N, const GridField& rho_bar,
                                             const SweepConfig& c) {
    const auto& s = c.estimator;
    W2Method method = parse_w2_method(s.w2_method);
    // the exact solver is limited in support size; larger samples fall back to the entropic one
    if (method == W2Method::Exact && static_cast<std::size_t>(N) > kExactMaxSupport) method = W2Method::Entropic;
    Estimate w2e = w2_empirical(ens, snap, rho_bar, s.quant_side, method, s);
    double qb = quantization_baseline(rho_bar, s.quant_side);
    DissipationTerms d = dissipation_terms(ens, snap, rho_bar, c.lambda);
    std::vector<EntropyReport> out;
    for (int k : {1, 2}) {
        EntropyReport r;
        r.t = ens.snapshot_times[snap];
        r.N = N;
        r.k = k;
        const int bins = k == 1 ? s.bins_k1 : s.bins_k2;
        r.h_k = marginal_kl(ens, snap, rho_bar, k, bins);
        r.l1_k = marginal_l1(ens, snap, rho_bar, k, bins);
        // pair-space transport on (bins/2)^4 atoms keeps the exact solver in range
        r.w2_k = marginal_w2(ens, snap, rho_bar, k, k == 1 ? bins : std::max(2, bins / 2));
        r.w2_emp = w2e;
        r.w2_quant_baseline = qb;
        r.A_N = d.A_N;
        r.B_N = d.B_N;
        r.I_proxy = d.I_proxy;
        out.push_back(r);
    }
    return out;
}

namespace {

void require_study_config(const SweepConfig& c) {
    c.validate();
    if (c.replicas < 8) throw ConfigError("rate and uniformity studies need at least 8 replicas");
}

std::string describe_fit(const RateFit& f) {
    return "exponent " + fmt(f.exponent) + " +- " + fmt(f.exponent_stderr);
}

StudyResult run_rows(const SweepConfig& c, const std::vector<int>& Ns) {
    SweepConfig cc = c;
    cc.N_list = Ns;
    auto fields = pde_at_times(cc);
    auto ensembles = simulate_sweep(cc, cc.workers);
    StudyResult res;
    for (std::size_t a = 0; a < Ns.size(); ++a) {
        const Ensemble& e = ensembles[a];
        WorkloadRow w;
        w.N = Ns[a];
        w.replicas = static_cast<int>(e.replicas.size());
        w.steps = e.replicas.empty() ? 0 : static_cast<long>(e.replicas[0].steps);
        for (const auto& tr : e.replicas) w.particle_steps += static_cast<long long>(tr.steps) * tr.N;
        res.workload.push_back(w);
    }
    for (std::size_t s = 0; s < cc.times.size(); ++s)
        for (std::size_t a = 0; a < Ns.size(); ++a) {
            auto rows = estimate_snapshot(ensembles[a], s, Ns[a], fields[s], cc);
            res.rows.insert(res.rows.end(), rows.begin(), rows.end());
        }
    return res;
}

const EntropyReport* find_row(const StudyResult& r, double t, int N, int k) {
    for (const auto& row : r.rows)
        if (row.N == N && row.k == k && std::abs(row.t - t) < 1e-9) return &row;
    return nullptr;
}

}  // namespace

StudyResult run_convergence_study(const SweepConfig& c) {
    require_study_config(c);
    std::vector<int> Ns = sorted_unique(c.N_list);
    if (Ns.size() < 4) throw ConfigError("convergence study needs at least 4 distinct N to fit a rate");
    auto t0 = std::chrono::steady_clock::now();
    StudyResult res = run_rows(c, Ns);
    for (double t : c.times) {
        std::vector<std::pair<double, double>> w2, h1, l1;
        for (int N : Ns) {
            const EntropyReport* r = find_row(res, t, N, 1);
            w2.push_back({static_cast<double>(N), r->w2_emp.value});
            h1.push_back({static_cast<double>(N), r->h_k.value});
            l1.push_back({static_cast<double>(N), r->l1_k.value});
        }
        FitRow fw{t, "w2_emp", "power_with_log", rate_fit(w2, RateModel::PowerWithLog)};
        res.fits.push_back(fw);
        res.fits.push_back({t, "w2_emp", "pure_power", rate_fit(w2, RateModel::PurePower)});
        res.fits.push_back({t, "h_1", "pure_power", rate_fit(h1, RateModel::PurePower)});
        res.fits.push_back({t, "l1_1", "pure_power", rate_fit(l1, RateModel::PurePower)});
        const double p = fw.fit.exponent;
        res.flags.push_back({"6", "w2_rate_t" + fmt(t), p >= -0.65 && p <= -0.35, describe_fit(fw.fit) + " in [-0.65, -0.35]"});
        bool mono = true;
        std::string detail;
        const EntropyReport* prev = nullptr;
        for (int N : Ns) {
            if (N < 256) continue;
            const EntropyReport* r = find_row(res, t, N, 1);
            if (prev) {
                double se = std::sqrt(prev->h_k.stderr_ * prev->h_k.stderr_ + r->h_k.stderr_ * r->h_k.stderr_);
                if (r->h_k.value > prev->h_k.value + 3 * se) {
                    mono = false;
                    detail += "h_1 rises at N=" + std::to_string(N) + "; ";
                }
            }
            prev = r;
        }
        res.flags.push_back({"6", "h1_monotone_t" + fmt(t), mono, mono ? "h_1 non-increasing beyond N=256 within 3 sigma" : detail});
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

StudyResult run_uniformity_study(const SweepConfig& c, double threshold) {
    require_study_config(c);
    const auto& ts = c.times;
    std::size_t ref = ts.size();
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (std::abs(ts[i] - 1.0) < 1e-9) ref = i;
    if (ref == ts.size()) throw ConfigError("uniformity study needs t = 1 among the times");
    if (ts.size() < 5 || ts.front() > 0.5 + 1e-9 || ts.back() < 5.0 - 1e-9)
        throw ConfigError("uniformity study needs at least 5 times spanning [0.5, 5]");
    auto t0 = std::chrono::steady_clock::now();
    std::vector<int> Ns = sorted_unique(c.N_list);
    StudyResult res = run_rows(c, Ns);
    for (int N : Ns) {
        const EntropyReport* base = find_row(res, ts[ref], N, 1);
        for (const char* q : {"h_1", "w2_emp"}) {
            const bool is_h = std::string(q) == "h_1";
            const Estimate e1 = is_h ? Estimate{base->h_k.value, base->h_k.stderr_} : base->w2_emp;
            double worst = -1e300, raw = 0.0, raw_se = 0.0;
            for (double t : ts) {
                const EntropyReport* row = find_row(res, t, N, 1);
                const Estimate et = is_h ? Estimate{row->h_k.value, row->h_k.stderr_} : row->w2_emp;
                RatioRow rr;
                rr.N = N;
                rr.t = t;
                rr.quantity = q;
                rr.r = et.value / e1.value;
                rr.r_err = t == ts[ref] ? 0.0
                                        : std::abs(rr.r) * std::sqrt(std::pow(et.stderr_ / et.value, 2) +
                                                                     std::pow(e1.stderr_ / e1.value, 2));
                res.ratios.push_back(rr);
                if (t >= 1.0 - 1e-9 && t <= 5.0 + 1e-9) {
                    worst = std::max(worst, rr.r - 3 * rr.r_err);
                    if (rr.r > raw) {
                        raw = rr.r;
                        raw_se = rr.r_err;
                    }
                }
            }
            res.flags.push_back({"7", std::string(q) + "_uniform_N" + std::to_string(N), worst <= threshold,
                                 "max r " + fmt(raw) + " +- " + fmt(raw_se) + ", max(r - 3 sigma) " + fmt(worst) + " vs " +
                                     fmt(threshold)});
        }
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

}  // namespace vortex
