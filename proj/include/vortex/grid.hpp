#pragma once

#include <complex>
#include <vector>

#include "vortex/torus.hpp"

namespace vortex {

using cplx = std::complex<double>;

/// Real scalar field on the uniform n x n grid x_i = -1/2 + i/n.
/// Storage is row-major with x1 as the slow index: value(i, j) = values[i*n + j].
class GridField {
public:
    GridField() = default;
    explicit GridField(int n, double t = 0.0);

    int n() const { return n_; }
    double h() const { return 1.0 / n_; }
    double coord(int i) const { return -0.5 + i * h(); }
    double t = 0.0;

    double& operator()(int i, int j) { return v_[static_cast<std::size_t>(i) * n_ + j]; }
    double operator()(int i, int j) const { return v_[static_cast<std::size_t>(i) * n_ + j]; }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    double mean() const;
    double max() const;
    double min() const;
    double max_abs() const;
    /// Periodic bilinear interpolation at an arbitrary point.
    double sample(Vec2 p) const;

    template <class F>
    static GridField from_function(int n, F&& f, double t = 0.0) {
        GridField g(n, t);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) = f(Vec2{g.coord(i), g.coord(j)});
        return g;
    }

private:
    int n_ = 0;
    std::vector<double> v_;
};

struct VectorField {
    GridField c1;
    GridField c2;
    Vec2 sample(Vec2 p) const { return {c1.sample(p), c2.sample(p)}; }
};

/// Half-spectrum of a real n x n field in FFTW r2c layout: index i*(n/2+1) + j.
/// Coefficients are normalized so that f(x) = sum_k c_k exp(2 pi i k.x) with the
/// grid origin at -1/2 already accounted for.
class Spectrum {
public:
    Spectrum() = default;
    explicit Spectrum(int n) : n_(n), nc_(n / 2 + 1), c_(static_cast<std::size_t>(n) * (n / 2 + 1)) {}

    int n() const { return n_; }
    int nc() const { return nc_; }
    std::size_t size() const { return c_.size(); }
    cplx& operator[](std::size_t k) { return c_[k]; }
    const cplx& operator[](std::size_t k) const { return c_[k]; }
    cplx* data() { return c_.data(); }
    const cplx* data() const { return c_.data(); }
    /// Signed wavenumbers of slot (i, j).
    int k1(int i) const { return i <= n_ / 2 ? i : i - n_; }
    int k2(int j) const { return j; }

private:
    int n_ = 0;
    int nc_ = 0;
    std::vector<cplx> c_;
};

/// FFTW-backed transforms for one grid size. Not shareable across threads;
/// construct one per thread or solver.
class Fft2 {
public:
    explicit Fft2(int n);
    ~Fft2();
    Fft2(const Fft2&) = delete;
    Fft2& operator=(const Fft2&) = delete;

    int n() const { return n_; }
    Spectrum forward(const GridField& f);
    GridField inverse(const Spectrum& s, double t = 0.0);
    void forward(const double* in, Spectrum& out);
    void inverse(const Spectrum& in, double* out);

private:
    int n_;
    double* real_;
    void* cplx_;
    void* plan_fwd_;
    void* plan_inv_;
};

bool is_power_of_two(int n);

/// Apply the Fourier multiplier (2 pi i k1)^a1 (2 pi i k2)^a2; Nyquist modes are
/// zeroed for odd total order so results stay real.
Spectrum differentiate(const Spectrum& s, int a1, int a2);

/// d^{a1+a2} f / dx1^a1 dx2^a2 on the grid.
GridField derivative(Fft2& fft, const GridField& f, int a1, int a2);

/// Exact integrals of the trigonometric interpolant of f over the m x m cells
/// [-1/2 + c/m, -1/2 + (c+1)/m); row-major (c1 slow).
std::vector<double> cell_masses(const GridField& f, int m);

/// Trigonometric-interpolant resampling onto an m x m grid (m != n allowed).
GridField resample(const GridField& f, int m);

/// Grid quadrature of f: h^2 * sum of values.
double integrate(const GridField& f);

}  // namespace vortex
