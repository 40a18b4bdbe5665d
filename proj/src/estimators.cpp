#include "vortex/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>

#include "vortex/rng.hpp"

namespace vortex {

std::vector<std::vector<double>> tuples_by_replica(const Ensemble& ens, std::size_t snap, int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < ens.replicas.size(); ++r) {
        const auto& pos = ens.positions(r, snap);
        std::vector<double> t;
        const std::size_t q = pos.size() / static_cast<std::size_t>(k);
        t.reserve(q * 2 * static_cast<std::size_t>(k));
        for (std::size_t a = 0; a < q * static_cast<std::size_t>(k); ++a) {
            t.push_back(pos[a].x1);
            t.push_back(pos[a].x2);
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<double> reference_cells(const GridField& rho_bar, int bins, int k) {
    std::vector<double> m = cell_masses(rho_bar, bins);
    double tot = 0.0;
    for (double& v : m) tot += (v = std::max(v, 0.0));
    for (double& v : m) v /= tot;
    std::vector<double> q = m;
    for (int f = 1; f < k; ++f) {
        std::vector<double> next;
        next.reserve(q.size() * m.size());
        for (double a : q)
            for (double b : m) next.push_back(a * b);
        q.swap(next);
    }
    return q;
}

std::size_t cell_of(const double* x, int dim, int bins) {
    std::size_t c = 0;
    for (int d = 0; d < dim; ++d) {
        int b = static_cast<int>((x[d] + 0.5) * bins);
        b = std::clamp(b, 0, bins - 1);
        c = c * static_cast<std::size_t>(bins) + static_cast<std::size_t>(b);
    }
    return c;
}

namespace {

// Cell counts per group.  Groups are replicas, or 8 blocks of tuples for one replica.
struct GroupedCounts {
    std::vector<std::vector<double>> counts;
    std::vector<double> total;
    double M = 0.0;
};

GroupedCounts grouped_counts(const Ensemble& ens, std::size_t snap, int k, int bins) {
    auto tuples = tuples_by_replica(ens, snap, k);
    const int dim = 2 * k;
    std::size_t cells = 1;
    for (int d = 0; d < dim; ++d) cells *= static_cast<std::size_t>(bins);
    GroupedCounts g;
    if (tuples.size() >= 2) {
        for (const auto& t : tuples) {
            std::vector<double> c(cells, 0.0);
            for (std::size_t a = 0; a + static_cast<std::size_t>(dim) <= t.size(); a += static_cast<std::size_t>(dim))
                c[cell_of(t.data() + a, dim, bins)] += 1.0;
            g.counts.push_back(std::move(c));
        }
    } else if (tuples.size() == 1) {
        const auto& t = tuples[0];
        const std::size_t nt = t.size() / static_cast<std::size_t>(dim);
        const std::size_t blocks = std::min<std::size_t>(8, std::max<std::size_t>(nt, 1));
        g.counts.assign(blocks, std::vector<double>(cells, 0.0));
        for (std::size_t a = 0; a < nt; ++a)
            g.counts[a * blocks / nt][cell_of(t.data() + a * static_cast<std::size_t>(dim), dim, bins)] += 1.0;
    }
    g.total.assign(cells, 0.0);
    for (const auto& c : g.counts)
        for (std::size_t i = 0; i < cells; ++i) g.total[i] += c[i];
    for (double v : g.total) g.M += v;
    return g;
}

// Jackknife over groups of a statistic of the pooled counts.
template <class F>
Estimate jackknife(const GroupedCounts& g, F&& stat) {
    Estimate e;
    e.value = stat(g.total, g.M);
    const std::size_t G = g.counts.size();
    if (G < 2) return e;
    std::vector<double> loo(G);
    std::vector<double> c(g.total.size());
    for (std::size_t r = 0; r < G; ++r) {
        double m = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            c[i] = g.total[i] - g.counts[r][i];
            m += c[i];
        }
        loo[r] = stat(c, m);
    }
    double mean = 0.0;
    for (double v : loo) mean += v;
    mean /= static_cast<double>(G);
    double s = 0.0;
    for (double v : loo) s += (v - mean) * (v - mean);
    e.stderr_ = std::sqrt(s * static_cast<double>(G - 1) / static_cast<double>(G));
    return e;
}

double plugin_kl(const std::vector<double>& c, double M, const std::vector<double>& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i] > 0.0) {
            double p = c[i] / M;
            s += p * std::log(p / q[i]);
        }
    return s;
}

}  // namespace

KLEstimate marginal_kl(const Ensemble& ens, std::size_t snap, const GridField& rho_bar, int k, int bins) {
    if (k != 1 && k != 2) throw std::invalid_argument("marginal order k must be 1 or 2");
    if (bins < 2) throw std::invalid_argument("bins must be >= 2");
    std::vector<double> q = reference_cells(rho_bar, bins, k);
    GroupedCounts g = grouped_counts(ens, snap, k, bins);
    if (!(g.M > 0.0)) throw std::invalid_argument("no tuples in ensemble");
    Estimate e = jackknife(g, [&](const std::vector<double>& c, double M) { return plugin_kl(c, M, q) / k; });
    KLEstimate r;
    r.value = e.value;
    r.stderr_ = e.stderr_;
    r.samples = static_cast<long>(g.M);
    r.bins = bins;
    long occupied = 0;
    for (double c : g.total) occupied += c > 0.0;
    r.bias = static_cast<double>(occupied - 1) / (2.0 * g.M * k);
    double qmin = *std::min_element(q.begin(), q.end());
    if (g.M * qmin < 5.0) {
        r.undersampled = true;
        r.stderr_ = std::sqrt(r.stderr_ * r.stderr_ + r.bias * r.bias);
    }
    return r;
}

Estimate marginal_l1(const Ensemble& ens, std::size_t snap, const GridField& rho_bar, int k, int bins) {
    std::vector<double> q = reference_cells(rho_bar, bins, k);
    GroupedCounts g = grouped_counts(ens, snap, k, bins);
    if (!(g.M > 0.0)) throw std::invalid_argument("no tuples in ensemble");
    return jackknife(g, [&](const std::vector<double>& c, double M) {
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += std::abs(c[i] / M - q[i]);
        return s;
    });
}

namespace {

WeightedPoints cell_atoms(const std::vector<double>& w, int dim, int bins, bool drop_empty) {
    WeightedPoints p;
    p.dim = dim;
    double tot = 0.0;
    for (double v : w) tot += v;
    for (std::size_t c = 0; c < w.size(); ++c) {
        if (drop_empty && w[c] <= 0.0) continue;
        std::size_t rest = c;
        std::vector<double> x(static_cast<std::size_t>(dim));
        for (int d = dim - 1; d >= 0; --d) {
            int b = static_cast<int>(rest % static_cast<std::size_t>(bins));
            rest /= static_cast<std::size_t>(bins);
            x[static_cast<std::size_t>(d)] = -0.5 + (b + 0.5) / bins;
        }
        p.coords.insert(p.coords.end(), x.begin(), x.end());
        p.weights.push_back(w[c] / tot);
    }
    return p;
}

}  // namespace

Estimate marginal_w2(const Ensemble& ens, std::size_t snap, const GridField& rho_bar, int k, int bins) {
    std::vector<double> q = reference_cells(rho_bar, bins, k);
    WeightedPoints ref = cell_atoms(q, 2 * k, bins, true);
    GroupedCounts g = grouped_counts(ens, snap, k, bins);
    if (!(g.M > 0.0)) throw std::invalid_argument("no tuples in ensemble");
    return jackknife(g, [&](const std::vector<double>& c, double) { return w2_exact(cell_atoms(c, 2 * k, bins, true), ref).w2; });
}

Estimate w2_empirical(const Ensemble& ens, std::size_t snap, const GridField& rho_bar, int side, W2Method method,
                      const EstimatorSettings& s) {
    WeightedPoints q = quantize(rho_bar, side);
    std::vector<double> vals;
    for (std::size_t r = 0; r < ens.replicas.size(); ++r) {
        WeightedPoints p = WeightedPoints::empirical(ens.positions(r, snap));
        vals.push_back(method == W2Method::Exact
                           ? w2_exact(p, q).w2
                           : w2_entropic(p, q, s.entropic_reg, s.entropic_iters, s.entropic_tol).w2);
    }
    Estimate e;
    for (double v : vals) e.value += v;
    e.value /= static_cast<double>(vals.size());
    if (vals.size() > 1) {
        double ss = 0.0;
        for (double v : vals) ss += (v - e.value) * (v - e.value);
        e.stderr_ = std::sqrt(ss / static_cast<double>(vals.size() - 1) / static_cast<double>(vals.size()));
    }
    return e;
}

double quantization_baseline(const GridField& rho_bar, int side) {
    int fine = std::min(2 * side, 64);
    if (fine <= side) fine = side + 1;
    return w2_exact(quantize(rho_bar, side), quantize(rho_bar, fine)).w2;
}

Estimate w2_iid_baseline(const GridField& rho_bar, int N, int reps, uint64_t seed, int side) {
    WeightedPoints q = quantize(rho_bar, side);
    std::vector<double> vals;
    for (int r = 0; r < reps; ++r) {
        auto pts = sample_from_grid(rho_bar, N, derive_seed(seed, 0x44, static_cast<uint64_t>(N), static_cast<uint64_t>(r)));
        vals.push_back(w2_exact(WeightedPoints::empirical(pts), q).w2);
    }
    Estimate e;
    for (double v : vals) e.value += v;
    e.value /= reps;
    if (reps > 1) {
        double ss = 0.0;
        for (double v : vals) ss += (v - e.value) * (v - e.value);
        e.stderr_ = std::sqrt(ss / (reps - 1) / reps);
    }
    return e;
}

Estimate dv_entropy_lower_bound(const GridField& g, const std::vector<Vec2>& samples_nu, const GridField& rho_bar) {
    if (g.n() != rho_bar.n()) throw std::invalid_argument("g and rho_bar must share the grid");
    if (samples_nu.empty()) throw std::invalid_argument("no samples");
    double mz = 0.0, m2 = 0.0;
    for (const auto& x : samples_nu) {
        double v = g.sample(x);
        mz += v;
        m2 += v * v;
    }
    const double n = static_cast<double>(samples_nu.size());
    mz /= n;
    double var = std::max(0.0, m2 / n - mz * mz);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.values().size(); ++i) {
        num += std::exp(g.values()[i]) * rho_bar.values()[i];
        den += rho_bar.values()[i];
    }
    Estimate e;
    e.value = mz - num / den + 1.0;
    e.stderr_ = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    return e;
}

Estimate dv_entropy_dictionary(const std::vector<Vec2>& samples_nu, const GridField& rho_bar) {
    const int n = rho_bar.n();
    constexpr double tau = 2.0 * std::numbers::pi;
    Estimate best = dv_entropy_lower_bound(GridField(n), samples_nu, rho_bar);
    for (int k1 = -2; k1 <= 2; ++k1)
        for (int k2 = 0; k2 <= 2; ++k2) {
            if (k2 == 0 && k1 <= 0) continue;
            for (int phase = 0; phase < 2; ++phase)
                for (double c : {0.05, 0.1, 0.2, 0.4, -0.05, -0.1, -0.2, -0.4}) {
                    GridField g = GridField::from_function(n, [&](Vec2 x) {
                        double a = tau * (k1 * x.x1 + k2 * x.x2);
                        return c * (phase == 0 ? std::cos(a) : std::sin(a));
                    });
                    Estimate e = dv_entropy_lower_bound(g, samples_nu, rho_bar);
                    if (e.value > best.value) best = e;
                }
        }
    return best;
}

double lsi_constant(double lambda) {
    if (!(lambda >= 1.0)) throw std::domain_error("lsi_constant requires lambda >= 1");
    return lambda * lambda / (8.0 * std::numbers::pi * std::numbers::pi);
}

RateFit rate_fit(const std::vector<std::pair<double, double>>& data, RateModel model) {
    std::set<double> distinct;
    for (const auto& [N, v] : data) {
        if (!(v > 0.0)) throw std::domain_error("rate_fit: values must be positive");
        if (!(N > 0.0)) throw std::domain_error("rate_fit: N must be positive");
        distinct.insert(N);
    }
    if (distinct.size() < 4) throw std::invalid_argument("rate_fit: need at least 4 distinct N values");
    const double n = static_cast<double>(data.size());
    double sx = 0, sy = 0;
    std::vector<double> xs, ys;
    for (const auto& [N, v] : data) {
        double x = std::log(N);
        double y = std::log(v);
        if (model == RateModel::PowerWithLog) y -= std::log(std::log1p(N));
        xs.push_back(x);
        ys.push_back(y);
        sx += x;
        sy += y;
    }
    double mx = sx / n, my = sy / n, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    RateFit f;
    f.exponent = sxy / sxx;
    double icpt = my - f.exponent * mx;
    f.prefactor = std::exp(icpt);
    double ssr = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double r = ys[i] - (icpt + f.exponent * xs[i]);
        ssr += r * r;
    }
    f.residual = std::sqrt(ssr / n);
    f.exponent_stderr = n > 2 ? std::sqrt(ssr / (n - 2) / sxx) : 0.0;
    return f;
}

}  // namespace vortex
