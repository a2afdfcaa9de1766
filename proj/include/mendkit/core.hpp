#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace mendkit {

// Tolerances shared across modules (normalized-space units).
inline constexpr double kBoundaryTol = 1e-6;   // surface band classified as outside
inline constexpr double kRayDegenerateTol = 1e-9;
inline constexpr double kLogEps = 1e-7;        // clamp inside BCE and -log penalties

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    double& operator[](int i) { return (&x)[i]; }
    double operator[](int i) const { return (&x)[i]; }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
    Vec3 normalized() const {
        double n = norm();
        if (n == 0.0) throw std::domain_error("cannot normalize zero vector");
        return *this / n;
    }
    Vec3 cwiseMin(const Vec3& o) const {
        return {std::fmin(x, o.x), std::fmin(y, o.y), std::fmin(z, o.z)};
    }
    Vec3 cwiseMax(const Vec3& o) const {
        return {std::fmax(x, o.x), std::fmax(y, o.y), std::fmax(z, o.z)};
    }
    double maxCoeff() const { return std::fmax(x, std::fmax(y, z)); }
    bool allFinite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

struct Aabb {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};

    void expand(const Vec3& p) { lo = lo.cwiseMin(p); hi = hi.cwiseMax(p); }
    void expand(const Aabb& b) { lo = lo.cwiseMin(b.lo); hi = hi.cwiseMax(b.hi); }
    Vec3 center() const { return (lo + hi) * 0.5; }
    Vec3 extent() const { return hi - lo; }
    bool empty() const { return lo.x > hi.x; }
    bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y &&
               p.z >= lo.z && p.z <= hi.z;
    }
    double dist2(const Vec3& p) const {
        double d = 0.0;
        for (int i = 0; i < 3; ++i) {
            double v = p[i];
            if (v < lo[i]) d += (lo[i] - v) * (lo[i] - v);
            else if (v > hi[i]) d += (v - hi[i]) * (v - hi[i]);
        }
        return d;
    }
};

// Unit quaternion (w, x, y, z).
struct Quat {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat normalized() const {
        double n = norm();
        return {w / n, x / n, y / n, z / n};
    }
    Quat conjugate() const { return {w, -x, -y, -z}; }
    // Rotate a vector by this quaternion.
    Vec3 rotate(const Vec3& v) const {
        Vec3 q{x, y, z};
        Vec3 t = 2.0 * q.cross(v);
        return v + w * t + q.cross(t);
    }
    Vec3 rotateInverse(const Vec3& v) const { return conjugate().rotate(v); }
};

struct SamplingCube {
    Vec3 center{0, 0, 0};
    double half_extent = 0.55;

    SamplingCube() = default;
    SamplingCube(const Vec3& c, double h) : center(c), half_extent(h) {
        if (!(half_extent > 0.0)) throw std::invalid_argument("half_extent must be > 0");
    }
    bool contains(const Vec3& p) const {
        return std::fabs(p.x - center.x) <= half_extent &&
               std::fabs(p.y - center.y) <= half_extent &&
               std::fabs(p.z - center.z) <= half_extent;
    }
    Vec3 lo() const { return center - Vec3{half_extent, half_extent, half_extent}; }
    Vec3 hi() const { return center + Vec3{half_extent, half_extent, half_extent}; }
};

using Rng = std::mt19937_64;

inline double uniformReal(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}
inline double normalReal(Rng& rng, double mean, double sigma) {
    return std::normal_distribution<double>(mean, sigma)(rng);
}
inline Vec3 uniformUnitVector(Rng& rng) {
    // Marsaglia rejection on the unit ball.
    for (;;) {
        Vec3 v{uniformReal(rng, -1, 1), uniformReal(rng, -1, 1), uniformReal(rng, -1, 1)};
        double n2 = v.norm2();
        if (n2 > 1e-12 && n2 <= 1.0) return v / std::sqrt(n2);
    }
}

// Stable seed derivation for independent substreams.
inline uint64_t deriveSeed(uint64_t base, uint64_t stream) {
    uint64_t h = base ^ (0x9e3779b97f4a7c15ULL + stream * 0xbf58476d1ce4e5b9ULL);
    h ^= h >> 30; h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27; h *= 0x94d049bb133111ebULL;
    h ^= h >> 31;
    return h;
}

}  // namespace mendkit
