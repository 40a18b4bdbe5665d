#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "vortex/grid.hpp"
#include "vortex/torus.hpp"

namespace vortex {

struct Mat2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;
    double max_abs() const;
};

/// Free-space Biot-Savart kernel (1/2pi) x^perp / |x|^2 at the minimal image of x.
/// Throws std::domain_error at x = 0.
Vec2 eval_free_kernel(Vec2 x);

/// Lattice sum of the free kernel over the disk |k| <= R, taken shell by shell in |k|^2,
/// together with the uniform neutralizing background of the same disk.  The background
/// term is what makes the partial sums converge to the periodic, mean-zero kernel
/// (curl = delta - 1) rather than to a field with a linear drift.
/// R = 0 returns the free kernel.  Throws std::domain_error at x = 0.
Vec2 eval_periodized_kernel(Vec2 x, int lattice_radius);

/// Periodic kernel minus the free kernel, K_0 = K - K~, on the closed cell [-1/2,1/2]^2
/// (x is not wrapped).  Smooth inside the cell; evaluated by the row-summed cotangent
/// series, which converges exponentially.
Vec2 eval_kernel_smooth_part(Vec2 x);

/// Periodic kernel via the cotangent series (x wrapped).  Throws at x = 0.
Vec2 eval_periodic_kernel_fast(Vec2 x);

/// Explicit matrix field with div V = K~ on the plane; throws std::domain_error on the axes.
Mat2 eval_V_free(Vec2 x);

/// Sup bound of the free V entries: |arctan| < pi/2 gives 1/4.
inline constexpr double kVFreeBound = 0.25;

/// Fourier multiplier taking rho_hat(k) to u_hat(k) for u = K * rho on the unit torus.
std::array<cplx, 2> spectral_symbol(int k1, int k2);

/// Node table on [-1/2,1/2]^2 with (n+1)^2 nodes storing a 2-vector field, bilinear
/// interpolation in between.  Nodes on the far edges duplicate the near edges for
/// periodic tables.
class KernelTable {
public:
    KernelTable() = default;
    KernelTable(int n, std::vector<double> nodes) : n_(n), inv_h_(n), nodes_(std::move(nodes)) {}

    int n() const { return n_; }
    const std::vector<double>& nodes() const { return nodes_; }

    /// d must lie in [-1/2, 1/2]^2.
    Vec2 interp(double d1, double d2) const {
        double u = (d1 + 0.5) * inv_h_;
        double w = (d2 + 0.5) * inv_h_;
        int i = static_cast<int>(u);
        int j = static_cast<int>(w);
        if (i > n_ - 1) i = n_ - 1;
        if (j > n_ - 1) j = n_ - 1;
        if (i < 0) i = 0;
        if (j < 0) j = 0;
        double fu = u - i;
        double fw = w - j;
        const double* p = nodes_.data() + 2 * (static_cast<std::size_t>(i) * (n_ + 1) + j);
        const double* q = p + 2 * (n_ + 1);
        double w00 = (1 - fu) * (1 - fw), w01 = (1 - fu) * fw, w10 = fu * (1 - fw), w11 = fu * fw;
        return {w00 * p[0] + w01 * p[2] + w10 * q[0] + w11 * q[2],
                w00 * p[1] + w01 * p[3] + w10 * q[1] + w11 * q[3]};
    }
    /// Node value at grid index (i, j), 0 <= i, j <= n.
    Vec2 node(int i, int j) const {
        const double* p = nodes_.data() + 2 * (static_cast<std::size_t>(i) * (n_ + 1) + j);
        return {p[0], p[1]};
    }

    /// Build a periodic table from n x n grid samples (x_i = -1/2 + i/n).
    static KernelTable from_periodic_grid(const GridField& c1, const GridField& c2);

private:
    int n_ = 0;
    double inv_h_ = 0.0;
    std::vector<double> nodes_;
};

struct KernelSpec {
    enum class Variant { FreeSpace, Periodized, Mollified, Spectral };

    Variant variant = Variant::Periodized;
    int lattice_radius = 80;
    double epsilon = 0.0;
    int grid_n = 0;
    std::shared_ptr<const KernelSpec> base;
    /// Multiplies the kernel: 1 normally, 0 switches the interaction off, -1 is the
    /// sign-flipped control.
    double strength = 1.0;
    std::shared_ptr<const KernelTable> table;

    /// Kernel value; singular variants throw at x = 0.
    Vec2 eval(Vec2 x) const;
    bool bounded() const { return variant == Variant::Mollified || variant == Variant::Spectral; }
    std::string describe() const;
};

KernelSpec free_space_kernel();
KernelSpec periodized_kernel(int lattice_radius);
KernelSpec spectral_kernel(int grid_n);
/// Mollified kernel K * zeta_eps, tabulated on a grid_n grid.  The base must be periodic
/// (Periodized or Spectral).  Throws if eps >= 1/4 or the bump spans fewer than 8 cells.
KernelSpec mollify_kernel(const KernelSpec& base, double epsilon, int grid_n);
/// Smallest power of two >= 64 with at least 8 cells across the bump diameter.
int resolution_for_epsilon(double epsilon);

/// The grid-normalized bump zeta_eps on an n x n grid centred at the origin node.
GridField mollifier_grid(double epsilon, int n);

/// Parse "raw", "free", "off", "spectral:N", "mollified:EPS" or "mollified:EPS:N";
/// prefix "flipped:" negates the kernel.
KernelSpec parse_kernel(const std::string& text);

/// Pair interaction used inside the particle drift.  Bounded variants go through a
/// table; singular ones evaluate the free kernel analytically plus a table of the smooth
/// remainder, with K(0) = 0.
class PairKernel {
public:
    enum class Mode { Zero, Table, Singular };

    PairKernel() = default;
    explicit PairKernel(const KernelSpec& spec, int smooth_table_n = 256);

    Mode mode() const { return mode_; }
    const KernelTable* table() const { return table_.get(); }
    double strength() const { return strength_; }

    /// d is a minimal-image displacement in [-1/2, 1/2)^2.
    /// Exactly odd: K(-d) = -K(d) bit for bit.
    Vec2 operator()(double d1, double d2) const {
        const double sg = (d1 < 0.0 || (d1 == 0.0 && d2 < 0.0)) ? -1.0 : 1.0;
        Vec2 v = eval_half(sg * d1, sg * d2);
        return {sg * v.x1, sg * v.x2};
    }

private:
    Vec2 eval_half(double d1, double d2) const {
        if (mode_ == Mode::Table) {
            Vec2 v = table_->interp(d1, d2);
            return {strength_ * v.x1, strength_ * v.x2};
        }
        if (mode_ == Mode::Zero) return {};
        double r2 = d1 * d1 + d2 * d2;
        if (r2 == 0.0) return {};
        constexpr double inv2pi = 0.15915494309189535;
        Vec2 v{-d2 * inv2pi / r2, d1 * inv2pi / r2};
        if (table_) {
            Vec2 s = table_->interp(d1, d2);
            v.x1 += s.x1;
            v.x2 += s.x2;
        }
        return {strength_ * v.x1, strength_ * v.x2};
    }

    Mode mode_ = Mode::Zero;
    double strength_ = 0.0;
    std::shared_ptr<const KernelTable> table_;
};

/// Matrix field V with div V = K used by the dissipation and moment estimators.
struct MatrixFieldV {
    enum class Kind { Free, PeriodicTable };
    Kind kind = Kind::Free;
    /// Sup bound of the entries actually produced by eval.
    double v_inf = kVFreeBound;
    /// Entries on an n x n grid (periodic kind only).
    std::array<GridField, 4> grid;

    Mat2 eval(Vec2 x) const;
};

MatrixFieldV free_V();
/// Bounded periodic V with div V = periodic kernel, built from its Fourier symbol on an
/// n x n grid: V11 and V22 are the periodic counterparts of the arctan entries, and the
/// off-diagonal entries carry the k1 = 0 and k2 = 0 modes that a diagonal field cannot.
MatrixFieldV periodic_V(int n);

}  // namespace vortex
