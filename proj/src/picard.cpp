#include "vortex/picard.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "vortex/errors.hpp"

namespace vortex {

namespace {

constexpr double kFourPi2 = 4.0 * std::numbers::pi * std::numbers::pi;

// Mode layout shared by every slice: retained slots and their |k|^2 class.
struct ModeTable {
    std::vector<std::size_t> slot;  // spectrum index of each retained mode
    std::vector<int> cls;           // index into lambdas
    std::vector<double> lambdas;    // distinct 4 pi^2 |k|^2
};

ModeTable build_modes(const TransportOperator& op) {
    ModeTable mt;
    const int n = op.n();
    const int nc = n / 2 + 1;
    std::map<int, int> index;
    Spectrum probe(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < nc; ++j) {
            if (!op.retained(i, j)) continue;
            int k1 = probe.k1(i);
            int q2 = k1 * k1 + j * j;
            auto it = index.find(q2);
            if (it == index.end()) it = index.emplace(q2, 0).first;
            mt.slot.push_back(static_cast<std::size_t>(i) * nc + j);
            mt.cls.push_back(q2);
        }
    int c = 0;
    for (auto& [q2, id] : index) {
        id = c++;
        mt.lambdas.push_back(kFourPi2 * q2);
    }
    for (int& q : mt.cls) q = index[q];
    return mt;
}

// Lagrange weights at s for the (up to) 4 slices nearest s inside [0, m].
int stencil(double s, double dq, int m, int nodes[4], double w[4]) {
    int count = std::min(4, m + 1);
    int i0 = static_cast<int>(std::floor(s / dq)) - 1;
    i0 = std::clamp(i0, 0, m + 1 - count);
    for (int r = 0; r < count; ++r) nodes[r] = i0 + r;
    for (int r = 0; r < count; ++r) {
        double l = 1.0;
        for (int q = 0; q < count; ++q)
            if (q != r) l *= (s - nodes[q] * dq) / ((nodes[r] - nodes[q]) * dq);
        w[r] = l;
    }
    return count;
}

}  // namespace

PicardResult picard_iterate(const InitialDensity& rho0, double T, int iters, const PicardOptions& opt) {
    rho0.validate();
    if (!(T > 0.0)) throw ConfigError("T must be positive");
    if (iters < 1) throw ConfigError("iters must be >= 1");
    if (!(opt.dt_quad > 0.0)) throw ConfigError("dt_quad must be positive");
    if (opt.tau_nodes < 2) throw ConfigError("tau_nodes must be >= 2");
    if (!is_power_of_two(opt.n) || opt.n < 8) throw ConfigError("grid size must be a power of two >= 8");

    const int n = opt.n;
    const int M = std::max(1, static_cast<int>(std::ceil(T / opt.dt_quad - 1e-9)));
    const double dq = T / M;
    const int J = opt.tau_nodes;

    TransportOperator op(n, opt.kernel_strength);
    ModeTable mt = build_modes(op);
    const std::size_t L = mt.lambdas.size();
    const std::size_t nm = mt.slot.size();

    // W[m][m' * L + l]: weight of the transport term (which carries its own minus sign)
    // at slice m' in the Duhamel integral ending at slice m, for decay class l
    std::vector<std::vector<double>> W(static_cast<std::size_t>(M) + 1);
    for (int m = 1; m <= M; ++m) {
        auto& wm = W[static_cast<std::size_t>(m)];
        wm.assign(static_cast<std::size_t>(m + 1) * L, 0.0);
        const double t = m * dq;
        const double h = std::sqrt(t) / J;
        for (int j = 1; j <= J; ++j) {
            double tau = j * h;
            double cw = (j == J ? 0.5 : 1.0) * h * 2.0 * tau;
            double s = std::max(0.0, t - tau * tau);
            int nodes[4];
            double lw[4];
            int cnt = stencil(s, dq, m, nodes, lw);
            for (std::size_t l = 0; l < L; ++l) {
                double f = cw * std::exp(-mt.lambdas[l] * tau * tau);
                for (int r = 0; r < cnt; ++r) wm[static_cast<std::size_t>(nodes[r]) * L + l] += f * lw[r];
            }
        }
    }

    Fft2 fft(n);
    Spectrum init = fft.forward(rho0.grid(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < init.nc(); ++j)
            if ((i != 0 || j != 0) && !op.retained(i, j)) init[static_cast<std::size_t>(i) * init.nc() + j] = 0.0;

    auto heat_slice = [&](double t) {
        Spectrum s(n);
        s[0] = init[0];
        for (std::size_t q = 0; q < nm; ++q) s[mt.slot[q]] = init[mt.slot[q]] * std::exp(-mt.lambdas[static_cast<std::size_t>(mt.cls[q])] * t);
        return s;
    };

    std::vector<Spectrum> prev(static_cast<std::size_t>(M) + 1), cur;
    for (int m = 0; m <= M; ++m) prev[static_cast<std::size_t>(m)] = heat_slice(m * dq);

    PicardResult res;
    res.time_slices = M + 1;
    res.iterates.push_back(fft.inverse(prev.back(), T));

    std::vector<double> a(static_cast<std::size_t>(n) * n), b(a.size());
    for (int k = 1; k <= iters; ++k) {
        cur = prev;
        std::vector<Spectrum> F(static_cast<std::size_t>(M) + 1, Spectrum(n));
        op.apply(prev[0], cur[0], F[0]);
        for (int m = 1; m <= M; ++m) {
            const auto& wm = W[static_cast<std::size_t>(m)];
            Spectrum base = heat_slice(m * dq);
            for (int mp = 0; mp < m; ++mp) {
                const Spectrum& f = F[static_cast<std::size_t>(mp)];
                const double* wrow = wm.data() + static_cast<std::size_t>(mp) * L;
                for (std::size_t q = 0; q < nm; ++q)
                    base[mt.slot[q]] += wrow[mt.cls[q]] * f[mt.slot[q]];
            }
            const double* wself = wm.data() + static_cast<std::size_t>(m) * L;
            Spectrum& x = cur[static_cast<std::size_t>(m)];
            Spectrum& fx = F[static_cast<std::size_t>(m)];
            double scale = 0.0;
            for (std::size_t q = 0; q < nm; ++q) scale = std::max(scale, std::abs(base[mt.slot[q]]));
            bool converged = false;
            for (int it = 0; it < 200 && !converged; ++it) {
                op.apply(prev[static_cast<std::size_t>(m)], x, fx);
                double change = 0.0;
                for (std::size_t q = 0; q < nm; ++q) {
                    cplx v = base[mt.slot[q]] + wself[mt.cls[q]] * fx[mt.slot[q]];
                    change = std::max(change, std::abs(v - x[mt.slot[q]]));
                    x[mt.slot[q]] = v;
                }
                x[0] = base[0];
                converged = change <= 1e-15 * std::max(scale, 1e-300);
            }
            if (!converged) throw HorizonTooLarge("Picard slice update did not converge; reduce dt_quad");
            op.apply(prev[static_cast<std::size_t>(m)], x, fx);
        }

        double d = 0.0;
        for (int m = 0; m <= M; ++m) {
            fft.inverse(cur[static_cast<std::size_t>(m)], a.data());
            fft.inverse(prev[static_cast<std::size_t>(m)], b.data());
            for (std::size_t q = 0; q < a.size(); ++q) d = std::max(d, std::abs(a[q] - b[q]));
        }
        if (!std::isfinite(d)) throw HorizonTooLarge("Picard iterates diverged (non-finite distance)");
        res.distances.push_back(d);
        res.iterates.push_back(fft.inverse(cur.back(), T));
        prev.swap(cur);

        if (k >= 3) {
            double dprev = res.distances[static_cast<std::size_t>(k - 2)];
            if (dprev > opt.floor && d > opt.contraction * dprev) {
                std::ostringstream os;
                os << "horizon too large: Picard distance " << d << " after " << dprev << " at iteration " << k
                   << " exceeds the contraction factor " << opt.contraction << " (T = " << T << ")";
                throw HorizonTooLarge(os.str());
            }
        }
    }
    res.field = res.iterates.back();
    return res;
}

GridField solve_picard(const InitialDensity& rho0, double T, int iters, int n, double dt_quad) {
    PicardOptions opt;
    opt.n = n;
    opt.dt_quad = dt_quad;
    return picard_iterate(rho0, T, iters, opt).field;
}

}  // namespace vortex
