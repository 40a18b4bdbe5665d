#include "vortex/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace vortex {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

GridField::GridField(int n, double t_) : t(t_), n_(n), v_(static_cast<std::size_t>(n) * n, 0.0) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("grid size must be even and >= 2");
}

double GridField::mean() const {
    double s = 0.0;
    for (double v : v_) s += v;
    return s / static_cast<double>(v_.size());
}

double GridField::max() const { return *std::max_element(v_.begin(), v_.end()); }
double GridField::min() const { return *std::min_element(v_.begin(), v_.end()); }

double GridField::max_abs() const {
    double m = 0.0;
    for (double v : v_) m = std::max(m, std::abs(v));
    return m;
}

double GridField::sample(Vec2 p) const {
    double u = (wrap1(p.x1) + 0.5) * n_;
    double w = (wrap1(p.x2) + 0.5) * n_;
    int i0 = static_cast<int>(u);
    int j0 = static_cast<int>(w);
    if (i0 >= n_) i0 = n_ - 1;
    if (j0 >= n_) j0 = n_ - 1;
    double fu = u - i0;
    double fw = w - j0;
    int i1 = (i0 + 1) % n_;
    int j1 = (j0 + 1) % n_;
    const auto& f = *this;
    return (1 - fu) * ((1 - fw) * f(i0, j0) + fw * f(i0, j1)) +
           fu * ((1 - fw) * f(i1, j0) + fw * f(i1, j1));
}

Fft2::Fft2(int n) : n_(n) {
    if (!is_power_of_two(n) || n < 4) throw std::invalid_argument("FFT grid size must be a power of two >= 4");
    std::lock_guard<std::mutex> lock(planner_mutex());
    std::size_t nr = static_cast<std::size_t>(n) * n;
    std::size_t nc = static_cast<std::size_t>(n) * (n / 2 + 1);
    real_ = fftw_alloc_real(nr);
    auto* c = fftw_alloc_complex(nc);
    cplx_ = c;
    plan_fwd_ = fftw_plan_dft_r2c_2d(n, n, real_, c, FFTW_ESTIMATE);
    plan_inv_ = fftw_plan_dft_c2r_2d(n, n, c, real_, FFTW_ESTIMATE);
}

Fft2::~Fft2() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
    fftw_free(real_);
    fftw_free(cplx_);
}

void Fft2::forward(const double* in, Spectrum& out) {
    const std::size_t nr = static_cast<std::size_t>(n_) * n_;
    std::copy(in, in + nr, real_);
    fftw_execute(static_cast<fftw_plan>(plan_fwd_));
    auto* c = static_cast<fftw_complex*>(cplx_);
    const int nc = n_ / 2 + 1;
    const double scale = 1.0 / static_cast<double>(nr);
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < nc; ++j) {
            std::size_t k = static_cast<std::size_t>(i) * nc + j;
            double s = ((i + j) & 1) ? -scale : scale;
            out[k] = cplx(c[k][0] * s, c[k][1] * s);
        }
    }
}

void Fft2::inverse(const Spectrum& in, double* out) {
    auto* c = static_cast<fftw_complex*>(cplx_);
    const int nc = n_ / 2 + 1;
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < nc; ++j) {
            std::size_t k = static_cast<std::size_t>(i) * nc + j;
            double s = ((i + j) & 1) ? -1.0 : 1.0;
            c[k][0] = in[k].real() * s;
            c[k][1] = in[k].imag() * s;
        }
    }
    fftw_execute(static_cast<fftw_plan>(plan_inv_));
    std::copy(real_, real_ + static_cast<std::size_t>(n_) * n_, out);
}

Spectrum Fft2::forward(const GridField& f) {
    if (f.n() != n_) throw std::invalid_argument("grid size mismatch in forward FFT");
    Spectrum s(n_);
    forward(f.values().data(), s);
    return s;
}

GridField Fft2::inverse(const Spectrum& s, double t) {
    if (s.n() != n_) throw std::invalid_argument("grid size mismatch in inverse FFT");
    GridField f(n_, t);
    inverse(s, f.values().data());
    return f;
}

Spectrum differentiate(const Spectrum& s, int a1, int a2) {
    Spectrum out(s.n());
    const int n = s.n();
    const int nc = s.nc();
    const bool odd = ((a1 + a2) & 1) != 0;
    for (int i = 0; i < n; ++i) {
        int k1 = s.k1(i);
        for (int j = 0; j < nc; ++j) {
            std::size_t k = static_cast<std::size_t>(i) * nc + j;
            if (odd && (i == n / 2 || j == n / 2)) {
                out[k] = 0.0;
                continue;
            }
            cplx m = std::pow(cplx(0.0, kTwoPi * k1), a1) * std::pow(cplx(0.0, kTwoPi * j), a2);
            out[k] = m * s[k];
        }
    }
    return out;
}

GridField derivative(Fft2& fft, const GridField& f, int a1, int a2) {
    return fft.inverse(differentiate(fft.forward(f), a1, a2), f.t);
}

namespace {

// integral of exp(2 pi i k x) over [a, a + w)
cplx cell_integral(int k, double a, double w) {
    if (k == 0) return w;
    double ph0 = kTwoPi * k * a;
    double ph1 = kTwoPi * k * (a + w);
    cplx e0(std::cos(ph0), std::sin(ph0));
    cplx e1(std::cos(ph1), std::sin(ph1));
    return (e1 - e0) / cplx(0.0, kTwoPi * k);
}

}  // namespace

std::vector<double> cell_masses(const GridField& f, int m) {
    if (m < 1) throw std::invalid_argument("cell count must be positive");
    Fft2 fft(f.n());
    Spectrum s = fft.forward(f);
    const int n = f.n();
    const int nc = s.nc();
    const double w = 1.0 / m;

    // Ik[c][slot] for k2 (half spectrum) and k1 (signed)
    std::vector<cplx> I2(static_cast<std::size_t>(m) * nc), I1(static_cast<std::size_t>(m) * n);
    for (int c = 0; c < m; ++c) {
        double a = -0.5 + c * w;
        for (int j = 0; j < nc; ++j) I2[static_cast<std::size_t>(c) * nc + j] = cell_integral(j, a, w);
        for (int i = 0; i < n; ++i) I1[static_cast<std::size_t>(c) * n + i] = cell_integral(s.k1(i), a, w);
    }
    // T(i, c2) = sum_j wj c(i,j) I2(c2, j)
    std::vector<cplx> T(static_cast<std::size_t>(n) * m);
    for (int i = 0; i < n; ++i) {
        for (int c2 = 0; c2 < m; ++c2) {
            cplx acc = 0.0;
            for (int j = 0; j < nc; ++j) {
                double wj = (j == 0 || j == n / 2) ? 1.0 : 2.0;
                acc += wj * s[static_cast<std::size_t>(i) * nc + j] * I2[static_cast<std::size_t>(c2) * nc + j];
            }
            T[static_cast<std::size_t>(i) * m + c2] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(m) * m);
    for (int c1 = 0; c1 < m; ++c1) {
        for (int c2 = 0; c2 < m; ++c2) {
            cplx acc = 0.0;
            for (int i = 0; i < n; ++i)
                acc += I1[static_cast<std::size_t>(c1) * n + i] * T[static_cast<std::size_t>(i) * m + c2];
            out[static_cast<std::size_t>(c1) * m + c2] = acc.real();
        }
    }
    return out;
}

GridField resample(const GridField& f, int m) {
    Fft2 src(f.n());
    Spectrum s = src.forward(f);
    Spectrum d(m);
    const int n = f.n();
    for (int i = 0; i < m; ++i) {
        int k1 = d.k1(i);
        if (std::abs(k1) >= n / 2 || (i == m / 2 && m <= n)) continue;
        int si = k1 >= 0 ? k1 : k1 + n;
        for (int j = 0; j < d.nc(); ++j) {
            if (j >= n / 2 || (j == m / 2 && m <= n)) continue;
            d[static_cast<std::size_t>(i) * d.nc() + j] = s[static_cast<std::size_t>(si) * s.nc() + j];
        }
    }
    Fft2 dst(m);
    return dst.inverse(d, f.t);
}

double integrate(const GridField& f) { return f.mean(); }

}  // namespace vortex
