#pragma once

#include <cstdint>
#include <vector>

#include "mendkit/core.hpp"

namespace mendkit {

enum class PrimitiveKind : uint8_t { Sphere = 0, Box = 1, Ellipsoid = 2 };

// Randomized fracture tool: a star-shaped solid whose radial extent is the
// base primitive's extent plus a smooth value-noise perturbation, so cut
// surfaces carry synthetic roughness.
struct PrimitiveSpec {
    PrimitiveKind kind = PrimitiveKind::Sphere;
    Vec3 center{0, 0, 0};
    Vec3 radii{0.1, 0.1, 0.1};  // radius / half-extents / semi-axes
    Quat rotation;
    double noise_amplitude = 0.0;
    uint64_t noise_seed = 0;

    void validate() const;
};

// Smooth 3-octave value noise in [-1, 1].
double valueNoise3(const Vec3& p, uint64_t seed);

// Radial extent of the unperturbed primitive along unit direction d (local frame).
double primitiveBaseExtent(const PrimitiveSpec& spec, const Vec3& d);

// Perturbed radial extent along unit direction d (local frame).
double primitiveExtent(const PrimitiveSpec& spec, const Vec3& d);

// 1 iff the point is strictly inside the (noise-perturbed) primitive.
int primitiveOccupancy(const PrimitiveSpec& spec, const Vec3& point);

inline int primitiveUnionOccupancy(const std::vector<PrimitiveSpec>& specs, const Vec3& point) {
    for (const auto& s : specs)
        if (primitiveOccupancy(s, point)) return 1;
    return 0;
}

// A point exactly on the perturbed boundary, along a seeded random direction.
Vec3 samplePrimitiveSurface(const PrimitiveSpec& spec, Rng& rng);

}  // namespace mendkit
