#include "vortex/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace vortex {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInvTwoPi = 1.0 / kTwoPi;

Vec2 free_kernel_raw(double x1, double x2) {
    double r2 = x1 * x1 + x2 * x2;
    return {-x2 * kInvTwoPi / r2, x1 * kInvTwoPi / r2};
}

// Nonzero lattice vectors with |k| <= R, ordered by |k|^2 then lexicographically.
const std::vector<std::pair<int, int>>& lattice_shells(int R) {
    static std::mutex mu;
    static std::map<int, std::vector<std::pair<int, int>>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(R);
    if (it != cache.end()) return it->second;
    std::vector<std::pair<int, int>> ks;
    for (int a = -R; a <= R; ++a)
        for (int b = -R; b <= R; ++b)
            if ((a != 0 || b != 0) && a * a + b * b <= R * R) ks.emplace_back(a, b);
    std::stable_sort(ks.begin(), ks.end(), [](auto p, auto q) {
        int np = p.first * p.first + p.second * p.second;
        int nq = q.first * q.first + q.second * q.second;
        return np < nq;
    });
    return cache.emplace(R, std::move(ks)).first->second;
}

// pi cot(pi z) - 1/z, regular at 0
cplx cot_minus_pole(cplx z) {
    if (std::abs(z) < 1e-3) {
        cplx z2 = z * z;
        double c1 = kPi * kPi / 3.0;
        double c2 = std::pow(kPi, 4) / 45.0;
        double c3 = 2.0 * std::pow(kPi, 6) / 945.0;
        return -z * (c1 + z2 * (c2 + z2 * c3));
    }
    cplx w = kPi * z;
    return kPi * std::cos(w) / std::sin(w) - 1.0 / z;
}

cplx pi_cot(cplx z) {
    cplx w = kPi * z;
    return kPi * std::cos(w) / std::sin(w);
}

KernelTable odd_table_from_spectrum(Fft2& fft, const Spectrum& s1, const Spectrum& s2) {
    GridField g1 = fft.inverse(s1);
    GridField g2 = fft.inverse(s2);
    const int n = g1.n();
    // enforce exact oddness: node i maps to (n - i) mod n under x -> -x
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            int mi = (n - i) % n;
            int mj = (n - j) % n;
            if (i * n + j > mi * n + mj) continue;
            double a1 = 0.5 * (g1(i, j) - g1(mi, mj));
            double a2 = 0.5 * (g2(i, j) - g2(mi, mj));
            g1(i, j) = a1;
            g2(i, j) = a2;
            g1(mi, mj) = -a1;
            g2(mi, mj) = -a2;
        }
    }
    return KernelTable::from_periodic_grid(g1, g2);
}

void zero_nyquist(Spectrum& s) {
    const int n = s.n();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < s.nc(); ++j) {
            if (i == n / 2 || j == n / 2) s[static_cast<std::size_t>(i) * s.nc() + j] = 0.0;
        }
    }
}

}  // namespace

double Mat2::max_abs() const {
    return std::max({std::abs(a11), std::abs(a12), std::abs(a21), std::abs(a22)});
}

Vec2 eval_free_kernel(Vec2 x) {
    Vec2 d = wrap(x);
    if (d.x1 == 0.0 && d.x2 == 0.0) throw std::domain_error("free kernel is singular at x = 0");
    return free_kernel_raw(d.x1, d.x2);
}

Vec2 eval_periodized_kernel(Vec2 x, int lattice_radius) {
    if (lattice_radius < 0) throw std::invalid_argument("lattice radius must be >= 0");
    Vec2 d = wrap(x);
    if (d.x1 == 0.0 && d.x2 == 0.0) throw std::domain_error("periodized kernel is singular at x = 0");
    Vec2 acc = free_kernel_raw(d.x1, d.x2);
    if (lattice_radius == 0) return acc;
    for (auto [k1, k2] : lattice_shells(lattice_radius)) {
        acc += free_kernel_raw(d.x1 - k1, d.x2 - k2);
    }
    // unit-density disk of radius R >= |x| induces (-x2, x1)/2 at x
    acc.x1 -= -0.5 * d.x2;
    acc.x2 -= 0.5 * d.x1;
    return acc;
}

Vec2 eval_kernel_smooth_part(Vec2 x) {
    cplx z(x.x1, x.x2);
    cplx g = cot_minus_pole(z);
    for (int m = 1; m <= 8; ++m) {
        g += pi_cot(z - cplx(0.0, m)) + pi_cot(z + cplx(0.0, m));
    }
    g += cplx(0.0, kTwoPi * x.x2);
    cplx w = cplx(0.0, kInvTwoPi) * std::conj(g);
    return {w.real(), w.imag()};
}

Vec2 eval_periodic_kernel_fast(Vec2 x) {
    Vec2 d = wrap(x);
    if (d.x1 == 0.0 && d.x2 == 0.0) throw std::domain_error("periodic kernel is singular at x = 0");
    return free_kernel_raw(d.x1, d.x2) + eval_kernel_smooth_part(d);
}

Mat2 eval_V_free(Vec2 x) {
    Vec2 d = wrap(x);
    if (d.x1 == 0.0 || d.x2 == 0.0) throw std::domain_error("V is undefined on the coordinate axes");
    Mat2 m;
    m.a11 = -std::atan(d.x1 / d.x2) * kInvTwoPi;
    m.a22 = std::atan(d.x2 / d.x1) * kInvTwoPi;
    return m;
}

std::array<cplx, 2> spectral_symbol(int k1, int k2) {
    if (k1 == 0 && k2 == 0) return {cplx(0.0), cplx(0.0)};
    double r2 = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
    return {cplx(0.0, k2 / (kTwoPi * r2)), cplx(0.0, -k1 / (kTwoPi * r2))};
}

KernelTable KernelTable::from_periodic_grid(const GridField& c1, const GridField& c2) {
    const int n = c1.n();
    std::vector<double> nodes(2 * static_cast<std::size_t>(n + 1) * (n + 1));
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            std::size_t k = 2 * (static_cast<std::size_t>(i) * (n + 1) + j);
            nodes[k] = c1(i % n, j % n);
            nodes[k + 1] = c2(i % n, j % n);
        }
    }
    return KernelTable(n, std::move(nodes));
}

Vec2 KernelSpec::eval(Vec2 x) const {
    Vec2 v;
    switch (variant) {
        case Variant::FreeSpace:
            v = eval_free_kernel(x);
            break;
        case Variant::Periodized:
            v = eval_periodized_kernel(x, lattice_radius);
            break;
        case Variant::Mollified:
        case Variant::Spectral: {
            if (!table) throw std::logic_error("kernel table not built");
            Vec2 d = wrap(x);
            v = table->interp(d.x1, d.x2);
            break;
        }
    }
    return v * strength;
}

std::string KernelSpec::describe() const {
    std::ostringstream os;
    if (strength != 1.0) os << "strength=" << strength << " ";
    switch (variant) {
        case Variant::FreeSpace: os << "free"; break;
        case Variant::Periodized: os << "periodized(R=" << lattice_radius << ")"; break;
        case Variant::Spectral: os << "spectral(n=" << grid_n << ")"; break;
        case Variant::Mollified:
            os << "mollified(eps=" << epsilon << ",n=" << grid_n << ",base=" << (base ? base->describe() : "?")
               << ")";
            break;
    }
    return os.str();
}

KernelSpec free_space_kernel() {
    KernelSpec k;
    k.variant = KernelSpec::Variant::FreeSpace;
    return k;
}

KernelSpec periodized_kernel(int lattice_radius) {
    if (lattice_radius < 1) throw std::invalid_argument("lattice radius must be >= 1");
    KernelSpec k;
    k.variant = KernelSpec::Variant::Periodized;
    k.lattice_radius = lattice_radius;
    return k;
}

KernelSpec spectral_kernel(int grid_n) {
    if (!is_power_of_two(grid_n) || grid_n < 8) throw std::invalid_argument("spectral grid must be a power of two >= 8");
    Fft2 fft(grid_n);
    Spectrum s1(grid_n), s2(grid_n);
    for (int i = 0; i < grid_n; ++i) {
        for (int j = 0; j < s1.nc(); ++j) {
            auto m = spectral_symbol(s1.k1(i), j);
            s1[static_cast<std::size_t>(i) * s1.nc() + j] = m[0];
            s2[static_cast<std::size_t>(i) * s2.nc() + j] = m[1];
        }
    }
    zero_nyquist(s1);
    zero_nyquist(s2);
    KernelSpec k;
    k.variant = KernelSpec::Variant::Spectral;
    k.grid_n = grid_n;
    k.table = std::make_shared<KernelTable>(odd_table_from_spectrum(fft, s1, s2));
    return k;
}

int resolution_for_epsilon(double epsilon) {
    int n = 64;
    while (2.0 * epsilon * n < 8.0) n *= 2;
    return n;
}

GridField mollifier_grid(double epsilon, int n) {
    GridField z(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double x1 = z.coord(i), x2 = z.coord(j);
            double r2 = (x1 * x1 + x2 * x2) / (epsilon * epsilon);
            double v = r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
            z(i, j) = v;
            sum += v;
        }
    }
    double scale = 1.0 / (sum * z.h() * z.h());
    for (double& v : z.values()) v *= scale;
    return z;
}

KernelSpec mollify_kernel(const KernelSpec& base, double epsilon, int grid_n) {
    if (!(epsilon > 0.0) || epsilon >= 0.25)
        throw std::invalid_argument("mollifier support violation: need 0 < epsilon < 1/4");
    if (!is_power_of_two(grid_n) || grid_n < 64)
        throw std::invalid_argument("mollifier grid must be a power of two >= 64");
    if (2.0 * epsilon * grid_n < 8.0)
        throw std::invalid_argument("resolution error: fewer than 8 grid cells across the mollifier (need n >= " +
                                    std::to_string(resolution_for_epsilon(epsilon)) + ")");
    if (base.variant != KernelSpec::Variant::Periodized && base.variant != KernelSpec::Variant::Spectral)
        throw std::invalid_argument("mollification needs a periodic base kernel (periodized or spectral)");

    Fft2 fft(grid_n);
    Spectrum zh = fft.forward(mollifier_grid(epsilon, grid_n));
    Spectrum s1(grid_n), s2(grid_n);
    for (int i = 0; i < grid_n; ++i) {
        for (int j = 0; j < s1.nc(); ++j) {
            std::size_t k = static_cast<std::size_t>(i) * s1.nc() + j;
            auto m = spectral_symbol(s1.k1(i), j);
            // zeta is even about the origin, so its coefficients are real
            double zr = zh[k].real();
            s1[k] = m[0] * zr;
            s2[k] = m[1] * zr;
        }
    }
    zero_nyquist(s1);
    zero_nyquist(s2);
    KernelSpec k;
    k.variant = KernelSpec::Variant::Mollified;
    k.epsilon = epsilon;
    k.grid_n = grid_n;
    KernelSpec b = base;
    b.strength = 1.0;
    k.base = std::make_shared<KernelSpec>(std::move(b));
    k.strength = base.strength;
    k.table = std::make_shared<KernelTable>(odd_table_from_spectrum(fft, s1, s2));
    return k;
}

KernelSpec parse_kernel(const std::string& text) {
    std::string t = text;
    double strength = 1.0;
    const std::string flip = "flipped:";
    if (t.rfind(flip, 0) == 0) {
        strength = -1.0;
        t = t.substr(flip.size());
    }
    KernelSpec k;
    if (t == "raw" || t == "periodized") {
        k = periodized_kernel(80);
    } else if (t == "free") {
        k = free_space_kernel();
    } else if (t == "off" || t == "zero") {
        k = periodized_kernel(80);
        strength = 0.0;
    } else if (t.rfind("spectral:", 0) == 0) {
        k = spectral_kernel(std::stoi(t.substr(9)));
    } else if (t.rfind("mollified:", 0) == 0) {
        std::string rest = t.substr(10);
        auto colon = rest.find(':');
        double eps = std::stod(rest.substr(0, colon));
        int n = colon == std::string::npos ? resolution_for_epsilon(eps) : std::stoi(rest.substr(colon + 1));
        k = mollify_kernel(periodized_kernel(80), eps, n);
    } else {
        throw std::invalid_argument("unknown kernel '" + text + "'");
    }
    k.strength *= strength;
    return k;
}

PairKernel::PairKernel(const KernelSpec& spec, int smooth_table_n) : strength_(spec.strength) {
    if (spec.strength == 0.0) {
        mode_ = Mode::Zero;
        return;
    }
    switch (spec.variant) {
        case KernelSpec::Variant::Mollified:
        case KernelSpec::Variant::Spectral:
            mode_ = Mode::Table;
            table_ = spec.table;
            break;
        case KernelSpec::Variant::FreeSpace:
            mode_ = Mode::Singular;
            break;
        case KernelSpec::Variant::Periodized: {
            mode_ = Mode::Singular;
            const int n = smooth_table_n;
            std::vector<double> nodes(2 * static_cast<std::size_t>(n + 1) * (n + 1));
            for (int i = 0; i <= n; ++i) {
                for (int j = 0; j <= n; ++j) {
                    Vec2 v = eval_kernel_smooth_part({-0.5 + static_cast<double>(i) / n, -0.5 + static_cast<double>(j) / n});
                    std::size_t k = 2 * (static_cast<std::size_t>(i) * (n + 1) + j);
                    nodes[k] = v.x1;
                    nodes[k + 1] = v.x2;
                }
            }
            table_ = std::make_shared<KernelTable>(n, std::move(nodes));
            break;
        }
    }
}

Mat2 MatrixFieldV::eval(Vec2 x) const {
    if (kind == Kind::Free) return eval_V_free(x);
    Mat2 m;
    m.a11 = grid[0].sample(x);
    m.a12 = grid[1].sample(x);
    m.a21 = grid[2].sample(x);
    m.a22 = grid[3].sample(x);
    return m;
}

MatrixFieldV free_V() { return MatrixFieldV{}; }

MatrixFieldV periodic_V(int n) {
    Fft2 fft(n);
    std::array<Spectrum, 4> s{Spectrum(n), Spectrum(n), Spectrum(n), Spectrum(n)};
    const int nc = s[0].nc();
    for (int i = 0; i < n; ++i) {
        int k1 = s[0].k1(i);
        for (int j = 0; j < nc; ++j) {
            int k2 = j;
            std::size_t k = static_cast<std::size_t>(i) * nc + j;
            if (i == n / 2 || j == n / 2 || (k1 == 0 && k2 == 0)) continue;
            auto m = spectral_symbol(k1, k2);
            if (k1 != 0) s[0][k] = m[0] / cplx(0.0, kTwoPi * k1);
            else s[1][k] = m[0] / cplx(0.0, kTwoPi * k2);
            if (k2 != 0) s[3][k] = m[1] / cplx(0.0, kTwoPi * k2);
            else s[2][k] = m[1] / cplx(0.0, kTwoPi * k1);
        }
    }
    MatrixFieldV v;
    v.kind = MatrixFieldV::Kind::PeriodicTable;
    double vmax = 0.0;
    for (int c = 0; c < 4; ++c) {
        v.grid[c] = fft.inverse(s[c]);
        vmax = std::max(vmax, v.grid[c].max_abs());
    }
    v.v_inf = vmax;
    return v;
}

}  // namespace vortex
