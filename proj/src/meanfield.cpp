#include "vortex/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vortex/errors.hpp"
#include "vortex/kernel.hpp"

namespace vortex {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kFourPi2 = 4.0 * kPi * kPi;

double half_weight(int j, int n) { return (j == 0 || j == n / 2) ? 1.0 : 2.0; }

double k2norm(const Spectrum& s, int i, int j) {
    double a = s.k1(i), b = j;
    return a * a + b * b;
}

// sup over |alpha| = order of the grid values of d^alpha f
double derivative_sup(Fft2& fft, const Spectrum& s, int order, std::vector<double>& buf) {
    double best = 0.0;
    buf.resize(static_cast<std::size_t>(s.n()) * s.n());
    for (int a1 = 0; a1 <= order; ++a1) {
        Spectrum d = differentiate(s, a1, order - a1);
        fft.inverse(d, buf.data());
        for (double v : buf) best = std::max(best, std::abs(v));
    }
    return best;
}

double phi1(double z) { return std::abs(z) < 1e-8 ? 1.0 + 0.5 * z : std::expm1(z) / z; }

double phi2(double z) {
    if (std::abs(z) < 1e-2) return 0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z * (1.0 / 120.0 + z / 720.0)));
    return (std::expm1(z) - z) / (z * z);
}

// lam * int_0^dt |c(s)|^2 ds for c(s) = e^{-lam s} c0 + s phi1(-lam s) n0 + s^2 phi2(-lam s) (n1 - n0)/dt,
// by 8-point Gauss-Legendre on panels refined geometrically towards s = 0
double mode_dissipation(double lam, double dt, cplx c0, cplx n0, cplx n1) {
    static constexpr double x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
    static constexpr double w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    const cplx slope = (n1 - n0) / dt;
    auto sq = [&](double s) {
        double z = -lam * s;
        cplx c = std::exp(z) * c0 + s * phi1(z) * n0 + s * s * phi2(z) * slope;
        return std::norm(c);
    };
    double total = 0.0;
    double a = 0.0;
    double b = lam * dt <= 2.0 ? dt : 1.0 / lam;
    while (true) {
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double acc = 0.0;
        for (int q = 0; q < 4; ++q) acc += w[q] * (sq(mid - half * x[q]) + sq(mid + half * x[q]));
        total += half * acc;
        if (b >= dt) break;
        a = b;
        b = std::min(dt, 2.0 * b);
    }
    return lam * total;
}

NormReport norms_from_spectrum(Fft2& fft, const Spectrum& s, int max_order, double t) {
    NormReport r;
    r.t = t;
    r.mass = s[0].real();
    r.l2_norm = std::sqrt(spectral_energy(s));
    const int n = s.n();
    double g = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < s.nc(); ++j)
            g += half_weight(j, n) * kFourPi2 * k2norm(s, i, j) * std::norm(s[static_cast<std::size_t>(i) * s.nc() + j]);
    r.grad_l2 = std::sqrt(g);
    std::vector<double> buf(static_cast<std::size_t>(n) * n);
    fft.inverse(s, buf.data());
    r.sup_norm = *std::max_element(buf.begin(), buf.end());
    r.inf_value = *std::min_element(buf.begin(), buf.end());
    for (int m = 1; m <= max_order; ++m) r.derivative_sup.emplace_back(m, derivative_sup(fft, s, m, buf));
    return r;
}

}  // namespace

// ---------------------------------------------------------------- initial data

double InitialDensity::operator()(Vec2 x) const {
    const double c1 = std::cos(kTwoPi * x.x1);
    if (id == "uniform") return 1.0;
    if (id == "default") return 1.0 + amplitude * c1 * std::cos(kTwoPi * x.x2);
    if (id == "shear") return 1.0 + amplitude * c1;
    if (id == "twomode") return 1.0 + amplitude * c1 + (2.0 * amplitude / 3.0) * std::sin(kTwoPi * (x.x1 + x.x2));
    throw ConfigError("unknown initial density '" + id + "'");
}

GridField InitialDensity::grid(int n) const {
    return GridField::from_function(n, [this](Vec2 p) { return (*this)(p); });
}

double InitialDensity::lower_bound() const {
    if (id == "uniform") return 1.0;
    if (id == "twomode") return 1.0 - 5.0 * std::abs(amplitude) / 3.0;
    return 1.0 - std::abs(amplitude);
}

double InitialDensity::upper_bound() const { return 2.0 - lower_bound(); }

std::string InitialDensity::describe() const {
    std::ostringstream os;
    os << id;
    if (id != "uniform") os << ":" << amplitude;
    os << " (lambda=" << lambda << ")";
    return os.str();
}

void InitialDensity::validate() const {
    if (id != "uniform" && id != "default" && id != "shear" && id != "twomode")
        throw ConfigError("unknown initial density '" + id + "' (expected uniform, default, shear or twomode)");
    if (!(lambda > 1.0)) throw ConfigError("lambda must be > 1");
    if (lower_bound() < 1.0 / lambda || upper_bound() > lambda) {
        std::ostringstream os;
        os << "initial density " << describe() << " is not in C_lambda: range [" << lower_bound() << ", "
           << upper_bound() << "] vs [" << 1.0 / lambda << ", " << lambda << "]";
        throw ConfigError(os.str());
    }
}

InitialDensity InitialDensity::parse(const std::string& text, double lambda) {
    InitialDensity d;
    auto colon = text.find(':');
    d.id = text.substr(0, colon);
    d.lambda = lambda;
    if (d.id == "default") d.amplitude = 0.5;
    else if (d.id == "shear" || d.id == "twomode") d.amplitude = 0.3;
    else d.amplitude = 0.0;
    if (colon != std::string::npos) {
        try {
            d.amplitude = std::stod(text.substr(colon + 1));
        } catch (const std::exception&) {
            throw ConfigError("bad amplitude in initial density '" + text + "'");
        }
    }
    d.validate();
    return d;
}

// ---------------------------------------------------------------- norms

double NormReport::d_sup(int order) const {
    for (auto [m, v] : derivative_sup)
        if (m == order) return v;
    throw std::out_of_range("derivative order not reported");
}

double NormReport::running(int order) const {
    if (order < 1 || order > static_cast<int>(running_integrals.size()))
        throw std::out_of_range("running integral order not reported");
    return running_integrals[static_cast<std::size_t>(order - 1)];
}

double spectral_energy(const Spectrum& s, bool include_mean) {
    const int n = s.n();
    double e = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < s.nc(); ++j) {
            if (!include_mean && i == 0 && j == 0) continue;
            e += half_weight(j, n) * std::norm(s[static_cast<std::size_t>(i) * s.nc() + j]);
        }
    return e;
}

NormReport derivative_norms(const GridField& rho, int max_order) {
    if (max_order < 0 || max_order > 4) throw std::invalid_argument("derivative order must be in [0, 4]");
    Fft2 fft(rho.n());
    return norms_from_spectrum(fft, fft.forward(rho), max_order, rho.t);
}

Spectrum heat_flow(const Spectrum& s, double t) {
    Spectrum out(s.n());
    for (int i = 0; i < s.n(); ++i)
        for (int j = 0; j < s.nc(); ++j) {
            std::size_t k = static_cast<std::size_t>(i) * s.nc() + j;
            out[k] = s[k] * std::exp(-kFourPi2 * k2norm(s, i, j) * t);
        }
    return out;
}

VectorField velocity_field(const GridField& rho, double strength) {
    const int n = rho.n();
    Fft2 fft(n);
    Spectrum s = fft.forward(rho);
    Spectrum a(n), b(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < s.nc(); ++j) {
            std::size_t k = static_cast<std::size_t>(i) * s.nc() + j;
            if (i == n / 2 || j == n / 2) continue;
            auto m = spectral_symbol(s.k1(i), j);
            a[k] = strength * m[0] * s[k];
            b[k] = strength * m[1] * s[k];
        }
    return {fft.inverse(a, rho.t), fft.inverse(b, rho.t)};
}

// ---------------------------------------------------------------- transport

TransportOperator::TransportOperator(int n, double strength)
    : n_(n), kmax_((n - 1) / 3), strength_(strength), fft_(n), tmp_(n) {
    const std::size_t nr = static_cast<std::size_t>(n) * n;
    u1_.resize(nr);
    u2_.resize(nr);
    g1_.resize(nr);
    g2_.resize(nr);
}

bool TransportOperator::retained(int i, int j) const {
    int k1 = i <= n_ / 2 ? i : i - n_;
    return std::abs(k1) <= kmax_ && j <= kmax_;
}

double TransportOperator::apply(const Spectrum& src, const Spectrum& rho, Spectrum& out) {
    const int nc = n_ / 2 + 1;
    if (out.n() != n_) out = Spectrum(n_);
    if (strength_ == 0.0) {
        std::fill(out.data(), out.data() + out.size(), cplx(0.0));
        return 0.0;
    }
    auto fill = [&](auto f, std::vector<double>& dst) {
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < nc; ++j) {
                std::size_t k = static_cast<std::size_t>(i) * nc + j;
                tmp_[k] = retained(i, j) ? f(tmp_.k1(i), j, k) : cplx(0.0);
            }
        fft_.inverse(tmp_, dst.data());
    };
    fill([&](int k1, int k2, std::size_t k) { return strength_ * spectral_symbol(k1, k2)[0] * src[k]; }, u1_);
    fill([&](int k1, int k2, std::size_t k) { return strength_ * spectral_symbol(k1, k2)[1] * src[k]; }, u2_);
    fill([&](int k1, int, std::size_t k) { return cplx(0.0, kTwoPi * k1) * rho[k]; }, g1_);
    fill([&](int, int k2, std::size_t k) { return cplx(0.0, kTwoPi * k2) * rho[k]; }, g2_);
    double umax2 = 0.0;
    for (std::size_t q = 0; q < u1_.size(); ++q) {
        umax2 = std::max(umax2, u1_[q] * u1_[q] + u2_[q] * u2_[q]);
        g1_[q] = u1_[q] * g1_[q] + u2_[q] * g2_[q];
    }
    fft_.forward(g1_.data(), out);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < nc; ++j) {
            std::size_t k = static_cast<std::size_t>(i) * nc + j;
            out[k] = retained(i, j) ? -out[k] : cplx(0.0);
        }
    out[0] = 0.0;
    return std::sqrt(umax2);
}

// ---------------------------------------------------------------- solver

MeanFieldSolver::MeanFieldSolver(const GridField& rho0, MeanFieldOptions opt)
    : opt_(opt), t_(rho0.t), transport_(opt.n, opt.kernel_strength), fft_(std::make_unique<Fft2>(opt.n)) {
    if (rho0.n() != opt.n) throw ConfigError("initial grid size does not match solver grid");
    if (!(opt.dt > 0.0)) throw ConfigError("dt must be positive");
    if (opt.max_order < 0 || opt.max_order > 4) throw ConfigError("max_order must be in [0, 4]");
    rho_ = fft_->forward(rho0);
    // the initial data are band-limited; anything above the dealiasing band is dropped
    const int n = opt.n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < rho_.nc(); ++j)
            if (!transport_.retained(i, j)) rho_[static_cast<std::size_t>(i) * rho_.nc() + j] = 0.0;
    running_.assign(static_cast<std::size_t>(opt.max_order), 0.0);
    update_dsup();
}

GridField MeanFieldSolver::field() const { return fft_->inverse(rho_, t_); }

void MeanFieldSolver::update_dsup() {
    std::vector<double> buf;
    dsup_.assign(static_cast<std::size_t>(opt_.max_order), 0.0);
    for (int m = 1; m <= opt_.max_order; ++m) dsup_[static_cast<std::size_t>(m - 1)] = derivative_sup(*fft_, rho_, m, buf);
}

void MeanFieldSolver::step(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const int n = opt_.n;
    const int nc = rho_.nc();
    Spectrum n0(n), a(n), n1(n);
    double umax = transport_.apply(rho_, rho_, n0);
    if (dt * umax * n > opt_.cfl) {
        double suggested = 0.9 * opt_.cfl / (umax * n);
        std::ostringstream os;
        os << "step rejected: CFL dt*max|u|*n = " << dt * umax * n << " > " << opt_.cfl << "; suggested dt <= "
           << suggested;
        throw CflError(os.str(), suggested);
    }

    double e_before = spectral_energy(rho_, false);
    double grad2 = 0.0, inner = 0.0;
    std::vector<double> E(rho_.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < nc; ++j) {
            std::size_t k = static_cast<std::size_t>(i) * nc + j;
            double lam = kFourPi2 * k2norm(rho_, i, j);
            E[k] = std::exp(-lam * dt);
            double w = half_weight(j, n);
            grad2 += w * lam * std::norm(rho_[k]);
            inner += w * (std::conj(rho_[k]) * n0[k]).real();
            a[k] = E[k] * (rho_[k] + dt * n0[k]);
        }
    transport_.apply(a, a, n1);
    Spectrum next(n);
    for (std::size_t k = 0; k < next.size(); ++k) next[k] = E[k] * rho_[k] + 0.5 * dt * (E[k] * n0[k] + n1[k]);

    // dissipation over the step from the exponential-integrator dense output
    double heat_diss = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < nc; ++j) {
            std::size_t k = static_cast<std::size_t>(i) * nc + j;
            heat_diss += half_weight(j, n) * 0.5 * std::norm(rho_[k]) * (1.0 - E[k] * E[k]);
        }
    double diss = 0.0;
    if (heat_diss > 1e-250) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < nc; ++j) {
                std::size_t k = static_cast<std::size_t>(i) * nc + j;
                double lam = kFourPi2 * k2norm(rho_, i, j);
                if (lam == 0.0) continue;
                double amp = std::abs(rho_[k]) + dt * (std::abs(n0[k]) + std::abs(n1[k]));
                if (lam * dt * amp * amp < 1e-16 * heat_diss) continue;
                diss += half_weight(j, n) * mode_dissipation(lam, dt, rho_[k], n0[k], n1[k]);
            }
    }
    rho_ = std::move(next);
    double e_after = spectral_energy(rho_, false);
    if (heat_diss > 1e-250 && diss > 0.0) {
        energy_residual_ = std::max(energy_residual_, std::abs(0.5 * (e_after - e_before) + diss) / diss);
    }
    if (grad2 > 1e-250) energy_residual_inst_ = std::max(energy_residual_inst_, std::abs(inner) / grad2);

    std::vector<double> prev = dsup_;
    update_dsup();
    for (std::size_t m = 0; m < running_.size(); ++m)
        running_[m] += 0.5 * dt * (prev[m] * prev[m] + dsup_[m] * dsup_[m]);
    t_ += dt;
    ++steps_;
}

void MeanFieldSolver::advance_to(double t_target) {
    double remaining = t_target - t_;
    if (remaining < -1e-12) throw std::invalid_argument("cannot advance backwards in time");
    if (remaining <= 1e-14 * std::max(1.0, std::abs(t_target))) {
        t_ = std::max(t_, t_target);
        return;
    }
    long count = static_cast<long>(std::ceil(remaining / opt_.dt - 1e-9));
    double h = remaining / static_cast<double>(count);
    for (long s = 0; s < count; ++s) step(h);
    t_ = t_target;
}

NormReport MeanFieldSolver::report() const {
    NormReport r = norms_from_spectrum(*fft_, rho_, opt_.max_order, t_);
    r.running_integrals = running_;
    r.energy_residual = energy_residual_;
    r.energy_residual_inst = energy_residual_inst_;
    return r;
}

GridField step_imex(const GridField& rho, double dt, double kernel_strength) {
    MeanFieldOptions opt;
    opt.n = rho.n();
    opt.dt = dt;
    opt.max_order = 0;
    opt.kernel_strength = kernel_strength;
    Fft2 fft(rho.n());
    MeanFieldSolver solver(rho, opt);
    // keep components above the dealiasing band of the input untouched by transport
    Spectrum full = fft.forward(rho);
    Spectrum band = solver.spectrum();
    solver.step(dt);
    Spectrum out = solver.spectrum();
    for (int i = 0; i < full.n(); ++i)
        for (int j = 0; j < full.nc(); ++j) {
            std::size_t k = static_cast<std::size_t>(i) * full.nc() + j;
            cplx hi = full[k] - band[k];
            if (hi != cplx(0.0)) out[k] += hi * std::exp(-kFourPi2 * k2norm(full, i, j) * dt);
        }
    return fft.inverse(out, rho.t + dt);
}

std::vector<MeanFieldSnapshot> solve_meanfield(const InitialDensity& rho0, double T, double dt, int n,
                                               const std::vector<double>& report_times, int max_order,
                                               double kernel_strength) {
    rho0.validate();
    if (!(T > 0.0)) throw ConfigError("T must be positive");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!is_power_of_two(n) || n < 8) throw ConfigError("grid size must be a power of two >= 8");
    std::vector<double> times = report_times;
    if (times.empty()) times.push_back(T);
    std::sort(times.begin(), times.end());
    if (times.front() < 0.0 || times.back() > T * (1 + 1e-12)) throw ConfigError("report times must lie in [0, T]");

    MeanFieldOptions opt;
    opt.n = n;
    opt.dt = dt;
    opt.max_order = max_order;
    opt.kernel_strength = kernel_strength;
    MeanFieldSolver solver(rho0.grid(n), opt);
    const double lo = 1.0 / rho0.lambda - 1e-6;
    const double hi = rho0.lambda + 1e-6;
    std::vector<MeanFieldSnapshot> out;
    for (double t : times) {
        solver.advance_to(t);
        MeanFieldSnapshot snap{solver.field(), solver.report()};
        if (snap.norms.inf_value < lo || snap.norms.sup_norm > hi) {
            std::ostringstream os;
            os << "solver instability: density range [" << snap.norms.inf_value << ", " << snap.norms.sup_norm
               << "] left the band [" << lo << ", " << hi << "] at t = " << t << " (increase n or reduce dt)";
            throw SolverInstability(os.str());
        }
        out.push_back(std::move(snap));
    }
    return out;
}

double heat_kernel_torus(double t, Vec2 x, int lattice_radius) {
    if (!(t > 0.0)) throw std::domain_error("heat kernel needs t > 0");
    int R = lattice_radius;
    if (R <= 0) {
        double extra = std::max(0.0, -std::log(4.0 * kPi * t));
        R = static_cast<int>(std::ceil(std::sqrt(4.0 * t * (42.0 + extra)))) + 1;
    }
    Vec2 d = wrap(x);
    const double c = 1.0 / (4.0 * kPi * t);
    // separable: sum_k1 sum_k2 = (sum_k1 g(x1 - k1)) (sum_k2 g(x2 - k2))
    double s1 = 0.0, s2 = 0.0;
    for (int k = -R; k <= R; ++k) {
        double a = d.x1 - k, b = d.x2 - k;
        s1 += std::exp(-a * a / (4.0 * t));
        s2 += std::exp(-b * b / (4.0 * t));
    }
    return c * s1 * s2;
}

}  // namespace vortex
