#pragma once

#include <cmath>
#include <vector>

namespace vortex {

/// Point or displacement on the 2D unit torus, coordinates in [-1/2, 1/2).
struct Vec2 {
    double x1 = 0.0;
    double x2 = 0.0;

    Vec2 operator+(Vec2 o) const { return {x1 + o.x1, x2 + o.x2}; }
    Vec2 operator-(Vec2 o) const { return {x1 - o.x1, x2 - o.x2}; }
    Vec2 operator-() const { return {-x1, -x2}; }
    Vec2 operator*(double s) const { return {x1 * s, x2 * s}; }
    Vec2& operator+=(Vec2 o) {
        x1 += o.x1;
        x2 += o.x2;
        return *this;
    }
    double dot(Vec2 o) const { return x1 * o.x1 + x2 * o.x2; }
    double norm2() const { return x1 * x1 + x2 * x2; }
    double norm() const { return std::sqrt(norm2()); }
};

/// Wrap a coordinate into [-1/2, 1/2).
inline double wrap1(double v) {
    double r = v - std::floor(v + 0.5);
    if (r >= 0.5) r -= 1.0;
    if (r < -0.5) r += 1.0;
    return r;
}

inline Vec2 wrap(Vec2 p) { return {wrap1(p.x1), wrap1(p.x2)}; }

/// Minimal-image displacement a - b.
inline Vec2 min_image(Vec2 a, Vec2 b) { return {wrap1(a.x1 - b.x1), wrap1(a.x2 - b.x2)}; }

inline bool is_wrapped(Vec2 p) {
    return p.x1 >= -0.5 && p.x1 < 0.5 && p.x2 >= -0.5 && p.x2 < 0.5;
}

/// Squared torus distance in any dimension; a and b point at `dim` coordinates.
inline double torus_dist2(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
        double t = wrap1(a[d] - b[d]);
        s += t * t;
    }
    return s;
}

inline double torus_dist(Vec2 a, Vec2 b) { return min_image(a, b).norm(); }

/// Throws std::invalid_argument if any position is outside [-1/2, 1/2).
void require_wrapped(const std::vector<Vec2>& pts);

}  // namespace vortex
