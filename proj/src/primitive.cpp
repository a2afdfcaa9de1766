#include "mendkit/primitive.hpp"

#include <cmath>
#include <stdexcept>

namespace mendkit {

void PrimitiveSpec::validate() const {
    if (!(radii.x > 0 && radii.y > 0 && radii.z > 0))
        throw std::invalid_argument("primitive radii must be > 0");
    if (std::fabs(rotation.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("primitive rotation must be a unit quaternion");
    if (noise_amplitude < 0) throw std::invalid_argument("noise amplitude must be >= 0");
}

namespace {
double latticeValue(int64_t x, int64_t y, int64_t z, uint64_t seed) {
    uint64_t h = seed;
    h ^= static_cast<uint64_t>(x) * 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h ^= static_cast<uint64_t>(y) * 0x94d049bb133111ebULL;
    h = (h ^ (h >> 27)) * 0xff51afd7ed558ccdULL;
    h ^= static_cast<uint64_t>(z) * 0xc4ceb9fe1a85ec53ULL;
    h ^= h >> 33;
    // Map to [-1, 1].
    return static_cast<double>(h >> 11) * (2.0 / 9007199254740992.0) - 1.0;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double valueNoiseOctave(const Vec3& p, uint64_t seed) {
    double fx = std::floor(p.x), fy = std::floor(p.y), fz = std::floor(p.z);
    auto ix = static_cast<int64_t>(fx), iy = static_cast<int64_t>(fy), iz = static_cast<int64_t>(fz);
    double tx = smooth(p.x - fx), ty = smooth(p.y - fy), tz = smooth(p.z - fz);
    double c[2][2][2];
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
                c[dz][dy][dx] = latticeValue(ix + dx, iy + dy, iz + dz, seed);
    double x00 = c[0][0][0] + (c[0][0][1] - c[0][0][0]) * tx;
    double x10 = c[0][1][0] + (c[0][1][1] - c[0][1][0]) * tx;
    double x01 = c[1][0][0] + (c[1][0][1] - c[1][0][0]) * tx;
    double x11 = c[1][1][0] + (c[1][1][1] - c[1][1][0]) * tx;
    double y0 = x00 + (x10 - x00) * ty;
    double y1 = x01 + (x11 - x01) * ty;
    return y0 + (y1 - y0) * tz;
}
}  // namespace

double valueNoise3(const Vec3& p, uint64_t seed) {
    // 3 octaves, persistence 1/2, normalized back into [-1, 1].
    double sum = 0.0, amp = 1.0, freq = 1.0, norm = 0.0;
    for (int o = 0; o < 3; ++o) {
        sum += amp * valueNoiseOctave(p * freq, seed + o);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    return sum / norm;
}

double primitiveBaseExtent(const PrimitiveSpec& spec, const Vec3& d) {
    switch (spec.kind) {
        case PrimitiveKind::Sphere:
            return spec.radii.x;
        case PrimitiveKind::Ellipsoid: {
            double q = d.x * d.x / (spec.radii.x * spec.radii.x) +
                       d.y * d.y / (spec.radii.y * spec.radii.y) +
                       d.z * d.z / (spec.radii.z * spec.radii.z);
            return 1.0 / std::sqrt(q);
        }
        case PrimitiveKind::Box: {
            double ext = 1e300;
            for (int i = 0; i < 3; ++i) {
                double a = std::fabs(d[i]);
                if (a > 0) ext = std::fmin(ext, spec.radii[i] / a);
            }
            return ext;
        }
    }
    throw std::logic_error("unknown primitive kind");
}

double primitiveExtent(const PrimitiveSpec& spec, const Vec3& d) {
    double base = primitiveBaseExtent(spec, d);
    if (spec.noise_amplitude == 0.0) return base;
    // Noise sampled on the direction sphere at a scale matching the cut size.
    return std::fmax(1e-9, base + spec.noise_amplitude * valueNoise3(d * 3.0, spec.noise_seed));
}

int primitiveOccupancy(const PrimitiveSpec& spec, const Vec3& point) {
    Vec3 local = spec.rotation.rotateInverse(point - spec.center);
    double r = local.norm();
    if (r == 0.0) return 1;
    return r < primitiveExtent(spec, local / r) ? 1 : 0;
}

Vec3 samplePrimitiveSurface(const PrimitiveSpec& spec, Rng& rng) {
    Vec3 d = uniformUnitVector(rng);
    double ext = primitiveExtent(spec, d);
    return spec.center + spec.rotation.rotate(d * ext);
}

}  // namespace mendkit
