#include "vortex/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "vortex/rng.hpp"

namespace vortex {

namespace {

double log_sum_exp(const std::vector<double>& logw) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : logw) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : logw) s += std::exp(v - m);
    return m + std::log(s);
}

const double kGammaFactor = 1600.0 * 1600.0 + 36.0 * std::exp(4.0);

}  // namespace

InequalityVerdict change_of_measure_check(const std::vector<double>& mu, const std::vector<double>& nu,
                                          const std::vector<double>& Phi, double eta, int N) {
    if (!(eta > 0.0)) throw std::domain_error("change of measure: eta must be positive");
    if (N < 1) throw std::invalid_argument("change of measure: N must be >= 1");
    if (mu.size() != nu.size() || mu.size() != Phi.size() || mu.empty())
        throw std::invalid_argument("change of measure: size mismatch");
    if (mu.size() > 10000) throw std::invalid_argument("change of measure: more than 10^4 states");
    InequalityVerdict v;
    v.name = "change_of_measure";
    v.eta = eta;
    double kl = 0.0, scale = 0.0;
    std::vector<double> lw;
    lw.reserve(nu.size());
    for (std::size_t s = 0; s < mu.size(); ++s) {
        if (mu[s] < 0.0 || nu[s] < 0.0) throw std::invalid_argument("change of measure: negative weight");
        if (mu[s] > 0.0) {
            if (nu[s] == 0.0) throw std::invalid_argument("change of measure: mu not absolutely continuous");
            kl += mu[s] * std::log(mu[s] / nu[s]);
        }
        v.lhs += mu[s] * Phi[s];
        scale = std::max(scale, std::abs(Phi[s]));
        if (nu[s] > 0.0) lw.push_back(std::log(nu[s]) + N * Phi[s] / eta);
    }
    v.rhs = eta * kl / N + eta / N * log_sum_exp(lw);
    v.slack = 1e-12 * (1.0 + scale + std::abs(v.rhs));
    v.pass = v.lhs <= v.rhs + v.slack;
    return v;
}

MomentAConstants moment_a_constants(double eps, double psi_sup) {
    if (!(eps > 0.0) || !(psi_sup >= 0.0)) throw std::domain_error("moment A: eps > 0 and sup >= 0 required");
    if (!(psi_sup < 1.0 / (2.0 * eps))) throw std::domain_error("moment A: sup psi must be < 1/(2 eps)");
    if (!(psi_sup < 1.0 / eps) || !(psi_sup * psi_sup < 1.0 / (2.0 * eps)))
        throw std::domain_error("moment A: need sup psi < 1/eps and sup psi^2 < 1/(2 eps)");
    MomentAConstants c;
    c.alpha = std::pow(eps * psi_sup, 4);
    c.beta = std::pow(std::sqrt(2.0 * eps) * psi_sup, 4);
    if (!(c.alpha < 1.0) || !(c.beta < 1.0)) throw std::domain_error("moment A: alpha and beta must be < 1");
    c.C = 2.0 * (1.0 + 10.0 * c.alpha / std::pow(1.0 - c.alpha, 3) + c.beta / (1.0 - c.beta));
    return c;
}

double moment_b_gamma(double phi_sup) { return kGammaFactor * phi_sup * phi_sup; }

DiscreteMeasure::DiscreteMeasure(std::vector<double> weights) : w_(std::move(weights)) {
    if (w_.empty()) throw std::invalid_argument("empty measure");
    double tot = 0.0;
    for (double x : w_) {
        if (!(x >= 0.0)) throw std::invalid_argument("negative weight");
        tot += x;
    }
    if (!(tot > 0.0)) throw std::invalid_argument("zero mass");
    cdf_.resize(w_.size());
    double c = 0.0;
    for (std::size_t i = 0; i < w_.size(); ++i) {
        w_[i] /= tot;
        c += w_[i];
        cdf_[i] = c;
    }
    cdf_.back() = 1.0;
}

std::size_t DiscreteMeasure::draw(double u) const {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
    i = std::min(i, w_.size() - 1);
    while (w_[i] == 0.0 && i + 1 < w_.size()) ++i;
    return i;
}

namespace {

template <class F>
Estimate mc_mean(int n_mc, F&& sample) {
    std::vector<double> vals(static_cast<std::size_t>(n_mc));
#pragma omp parallel for schedule(static)
    for (int m = 0; m < n_mc; ++m) vals[static_cast<std::size_t>(m)] = sample(m);
    Estimate e;
    for (double v : vals) e.value += v;
    e.value /= n_mc;
    if (n_mc > 1) {
        double s = 0.0;
        for (double v : vals) s += (v - e.value) * (v - e.value);
        e.stderr_ = std::sqrt(s / (n_mc - 1) / n_mc);
    }
    return e;
}

}  // namespace

InequalityVerdict moment_a_verdict(const DiscreteMeasure& mu, const PairFunction& psi, double psi_bound, double eps,
                                   int N, int n_mc, uint64_t seed) {
    if (N < 1 || n_mc < 1) throw std::invalid_argument("moment A: N and n_mc must be >= 1");
    MomentAConstants c = moment_a_constants(eps, psi_bound);
    InequalityVerdict v;
    v.name = "exponential_moment_A";
    v.alpha = c.alpha;
    v.beta = c.beta;
    v.eps = eps;
    v.C = c.C;
    v.rhs = c.C;
    Estimate e = mc_mean(n_mc, [&](int m) {
        PhiloxStream s(seed, static_cast<uint64_t>(m));
        std::size_t z = mu.draw(s.uniform());
        double S = psi(z, z);
        for (int j = 1; j < N; ++j) S += psi(z, mu.draw(s.uniform()));
        return std::exp(S * S / N);
    });
    v.lhs = e.value;
    v.lhs_stderr = e.stderr_;
    v.pass = v.lhs + 3.0 * v.lhs_stderr <= v.rhs;
    return v;
}

InequalityVerdict moment_b_verdict(const DiscreteMeasure& mu, const PairFunction& phi, double phi_sup, int N,
                                   int n_mc, uint64_t seed) {
    if (N < 1 || n_mc < 1) throw std::invalid_argument("moment B: N and n_mc must be >= 1");
    InequalityVerdict v;
    v.name = "exponential_moment_B";
    v.gamma = moment_b_gamma(phi_sup);
    v.sup = phi_sup;
    if (!(v.gamma < 1.0)) throw std::domain_error("moment B: gamma must be < 1");
    v.rhs = 2.0 / (1.0 - v.gamma);
    v.C = v.rhs;
    Estimate e = mc_mean(n_mc, [&](int m) {
        PhiloxStream s(seed, static_cast<uint64_t>(m));
        std::vector<std::size_t> x(static_cast<std::size_t>(N));
        for (auto& xi : x) xi = mu.draw(s.uniform());
        double S = 0.0;
        for (std::size_t i : x)
            for (std::size_t j : x) S += phi(i, j);
        return std::exp(S / N);
    });
    v.lhs = e.value;
    v.lhs_stderr = e.stderr_;
    v.pass = v.lhs + 3.0 * v.lhs_stderr <= v.rhs;
    return v;
}

GridField grid_convolve(const GridField& f, const GridField& w) {
    const int n = f.n();
    if (w.n() != n) throw std::invalid_argument("grid_convolve: size mismatch");
    Fft2 fft(n);
    Spectrum a = fft.forward(f), b = fft.forward(w);
    const double n2 = static_cast<double>(n) * n;
    for (std::size_t k = 0; k < a.size(); ++k) a[k] *= b[k] * n2;
    return fft.inverse(a);
}

namespace {

std::size_t diff_index(std::size_t z, std::size_t x, int n) {
    const std::size_t un = static_cast<std::size_t>(n);
    std::size_t zi = z / un, zj = z % un, xi = x / un, xj = x % un;
    std::size_t a = (zi + un + un / 2 - xi) % un;
    std::size_t b = (zj + un + un / 2 - xj) % un;
    return a * un + b;
}

}  // namespace

MomentFields MomentFields::build(const GridField& rho_bar) {
    const int n = rho_bar.n();
    if (n < 16 || !is_power_of_two(n)) throw std::invalid_argument("moment fields need a power-of-two grid >= 16");
    if (!(rho_bar.min() > 0.0)) throw std::invalid_argument("moment fields need a positive density");
    MomentFields m;
    m.n = n;
    m.rho = rho_bar;
    m.V = periodic_V(n);
    m.mu = DiscreteMeasure(rho_bar.values());
    GridField w(n);
    w.values() = m.mu.weights();
    for (int c = 0; c < 4; ++c) m.V_mu[static_cast<std::size_t>(c)] = grid_convolve(m.V.grid[static_cast<std::size_t>(c)], w);
    Fft2 fft(n);
    m.H[0] = derivative(fft, rho_bar, 2, 0);
    m.H[1] = derivative(fft, rho_bar, 1, 1);
    m.H[2] = m.H[1];
    m.H[3] = derivative(fft, rho_bar, 0, 2);
    for (std::size_t g = 0; g < rho_bar.values().size(); ++g) {
        double s = 0.0;
        for (const auto& h : m.H) s += std::abs(h.values()[g]);
        m.hess_sup = std::max(m.hess_sup, s);
    }
    return m;
}

double MomentFields::psi(int ab, std::size_t z, std::size_t x) const {
    const auto c = static_cast<std::size_t>(ab);
    return (V.grid[c].values()[diff_index(z, x, n)] - V_mu[c].values()[z]) / V.v_inf;
}

double MomentFields::phi_raw(std::size_t z, std::size_t x) const {
    const std::size_t d = diff_index(z, x, n);
    double s = 0.0;
    for (std::size_t c = 0; c < 4; ++c) s += (V.grid[c].values()[d] - V_mu[c].values()[z]) * H[c].values()[z];
    return s / rho.values()[z];
}

double MomentFields::c_a(double lambda) const {
    return 4.0 * std::sqrt(kGammaFactor) * hess_sup * V.v_inf * lambda;
}

std::pair<double, double> MomentFields::phi_cancellation() const {
    // int phi(x, z) mu(dx) = sum_x w_x sum_ab (V_ab(x - z) - V_ab*mu(x)) H_ab(x) / rho(x)
    // = (1/sum rho) sum_ab [ sum_x V_ab(x - z) H_ab(x) - sum_x V_ab*mu(x) H_ab(x) ]
    double tot = 0.0;
    for (double r : rho.values()) tot += r;
    GridField first(n);
    double second = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
        // sum_x V(x - z) H(x) = sum_x Vr(z - x) H(x) with Vr(y) = V(-y)
        GridField vr(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) vr(i, j) = V.grid[c]((n - i) % n, (n - j) % n);
        GridField conv = grid_convolve(vr, H[c]);
        for (std::size_t g = 0; g < first.values().size(); ++g) first.values()[g] += conv.values()[g];
        for (std::size_t g = 0; g < first.values().size(); ++g) second += V_mu[c].values()[g] * H[c].values()[g];
    }
    double a = 0.0;
    for (double v : first.values()) a = std::max(a, std::abs((v - second) / tot));
    // int phi(z, x) mu(dx) = sum_ab (V_ab*mu(z) - V_ab*mu(z)) H_ab / rho: evaluate directly
    double b = 0.0;
    const std::size_t M = mu.size();
    for (std::size_t z = 0; z < M; z += std::max<std::size_t>(1, M / 64)) {
        double s = 0.0;
        for (std::size_t x = 0; x < M; ++x) s += mu.weights()[x] * phi_raw(z, x);
        b = std::max(b, std::abs(s));
    }
    return {a, b};
}

double MomentFields::psi_cancellation() const {
    double worst = 0.0;
    const std::size_t M = mu.size();
    for (int ab = 0; ab < 4; ++ab)
        for (std::size_t z = 0; z < M; z += std::max<std::size_t>(1, M / 64)) {
            double s = 0.0;
            for (std::size_t x = 0; x < M; ++x) s += mu.weights()[x] * psi(ab, z, x);
            worst = std::max(worst, std::abs(s));
        }
    return worst;
}

InequalityVerdict mc_exponential_moment_A(const GridField& rho_bar, double eps, int N, int n_mc, uint64_t seed) {
    MomentFields f = MomentFields::build(rho_bar);
    const double psi_bound = 2.0;
    moment_a_constants(eps, psi_bound);
    if (f.psi_cancellation() > 1e-8) throw std::logic_error("moment A: psi is not centred under mu");
    InequalityVerdict worst;
    double margin = -std::numeric_limits<double>::infinity();
    for (int ab = 0; ab < 4; ++ab) {
        double sup = 0.0;
        for (std::size_t g = 0; g < f.mu.size(); ++g) {
            const std::size_t c = static_cast<std::size_t>(ab);
            double vmax = f.V.grid[c].max_abs();
            sup = std::max(sup, (vmax + std::abs(f.V_mu[c].values()[g])) / f.V.v_inf);
        }
        InequalityVerdict v = moment_a_verdict(
            f.mu, [&](std::size_t z, std::size_t x) { return f.psi(ab, z, x); }, psi_bound, eps, N, n_mc,
            derive_seed(seed, 0x55, static_cast<uint64_t>(ab)));
        v.sup = sup;
        v.note = "entry " + std::to_string(ab);
        double m = v.lhs + 3.0 * v.lhs_stderr - v.rhs;
        if (m > margin) {
            margin = m;
            worst = v;
        }
    }
    return worst;
}

InequalityVerdict mc_exponential_moment_B(const GridField& rho_bar, double lambda, int N, int n_mc, uint64_t seed) {
    MomentFields f = MomentFields::build(rho_bar);
    const double ca = f.c_a(lambda);
    auto [c1, c2] = f.phi_cancellation();
    if (ca > 0.0 && (c1 / ca > 1e-8 || c2 / ca > 1e-8)) throw std::logic_error("moment B: phi cancellations fail");
    double sup = 0.0;
    if (ca > 0.0)
        for (std::size_t z = 0; z < f.mu.size(); ++z) {
            // sup over x of |phi(z, x)|: the V entries range over their table
            double s = 0.0;
            for (std::size_t c = 0; c < 4; ++c)
                s += (f.V.grid[c].max_abs() + std::abs(f.V_mu[c].values()[z])) * std::abs(f.H[c].values()[z]);
            sup = std::max(sup, s / f.rho.values()[z] / ca);
        }
    PairFunction phi = [&](std::size_t z, std::size_t x) { return ca > 0.0 ? f.phi_raw(z, x) / ca : 0.0; };
    InequalityVerdict v = moment_b_verdict(f.mu, phi, sup, N, n_mc, seed);
    v.eps = std::numeric_limits<double>::quiet_NaN();
    v.note = "C_A = " + std::to_string(ca);
    return v;
}

namespace {

struct DissipationContext {
    int n;
    MatrixFieldV V;
    std::array<GridField, 4> Vr;  // V * rho_bar (continuous convolution)
    std::array<GridField, 4> H;
    std::array<GridField, 2> G;
    GridField rho;

    explicit DissipationContext(const GridField& rho_bar) : n(rho_bar.n()), V(periodic_V(rho_bar.n())), rho(rho_bar) {
        if (n < 16 || !is_power_of_two(n)) throw std::invalid_argument("dissipation terms need a power-of-two grid >= 16");
        Fft2 fft(n);
        Spectrum r = fft.forward(rho_bar);
        for (std::size_t c = 0; c < 4; ++c) {
            Spectrum v = fft.forward(V.grid[c]);
            for (std::size_t k = 0; k < v.size(); ++k) v[k] *= r[k];
            Vr[c] = fft.inverse(v);
        }
        H[0] = derivative(fft, rho_bar, 2, 0);
        H[1] = derivative(fft, rho_bar, 1, 1);
        H[2] = H[1];
        H[3] = derivative(fft, rho_bar, 0, 2);
        G[0] = derivative(fft, rho_bar, 1, 0);
        G[1] = derivative(fft, rho_bar, 0, 1);
    }

    std::pair<double, double> eval(const std::vector<Vec2>& pos) const {
        const std::size_t N = pos.size();
        // per-particle terms summed serially afterwards, so the result is independent of the thread count
        std::vector<double> av(N), bv(N);
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < N; ++i) {
            std::array<double, 4> m{0, 0, 0, 0};
            for (std::size_t j = 0; j < N; ++j) {
                Vec2 d = wrap({pos[i].x1 - pos[j].x1, pos[i].x2 - pos[j].x2});
                for (std::size_t c = 0; c < 4; ++c) m[c] += V.grid[c].sample(d);
            }
            double r = rho.sample(pos[i]);
            double g2 = 0.0;
            for (const auto& g : G) g2 += std::pow(g.sample(pos[i]) / r, 2);
            double am = 0.0, m2 = 0.0;
            for (std::size_t c = 0; c < 4; ++c) {
                double mc = m[c] / static_cast<double>(N) - Vr[c].sample(pos[i]);
                am += mc * H[c].sample(pos[i]) / r;
                m2 += mc * mc;
            }
            av[i] = am;
            bv[i] = g2 * m2;
        }
        double a = 0.0, b = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            a += av[i];
            b += bv[i];
        }
        return {a / static_cast<double>(N), b / static_cast<double>(N)};
    }
};

}  // namespace

std::pair<double, double> dissipation_single(const std::vector<Vec2>& pos, const GridField& rho_bar) {
    return DissipationContext(rho_bar).eval(pos);
}

DissipationTerms dissipation_terms(const Ensemble& ens, std::size_t snap, const GridField& rho_bar, double lambda) {
    DissipationContext ctx(rho_bar);
    std::vector<double> as, bs;
    std::vector<Vec2> pooled;
    for (std::size_t r = 0; r < ens.replicas.size(); ++r) {
        const auto& pos = ens.positions(r, snap);
        auto [a, b] = ctx.eval(pos);
        as.push_back(a);
        bs.push_back(b);
        pooled.insert(pooled.end(), pos.begin(), pos.end());
    }
    auto summarize = [](const std::vector<double>& v) {
        Estimate e;
        for (double x : v) e.value += x;
        e.value /= static_cast<double>(v.size());
        if (v.size() > 1) {
            double s = 0.0;
            for (double x : v) s += (x - e.value) * (x - e.value);
            e.stderr_ = std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
        }
        return e;
    };
    DissipationTerms d;
    d.A_N = summarize(as);
    d.B_N = summarize(bs);
    if (!pooled.empty()) d.I_proxy = std::max(0.0, dv_entropy_dictionary(pooled, rho_bar).value) / lsi_constant(lambda);
    return d;
}

}  // namespace vortex
