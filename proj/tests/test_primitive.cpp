#include <doctest.h>

#include <cmath>

#include "mendkit/primitive.hpp"

using namespace mendkit;

namespace {
PrimitiveSpec sphereSpec(double r, const Vec3& c = {0, 0, 0}) {
    PrimitiveSpec s;
    s.kind = PrimitiveKind::Sphere;
    s.center = c;
    s.radii = {r, r, r};
    return s;
}

Quat randomRotation(Rng& rng) {
    Vec3 axis = uniformUnitVector(rng);
    double angle = uniformReal(rng, 0, 2 * M_PI);
    double s = std::sin(angle / 2);
    return Quat{std::cos(angle / 2), axis.x * s, axis.y * s, axis.z * s}.normalized();
}
}  // namespace

TEST_CASE("primitive_occupancy: sphere point cases") {
    PrimitiveSpec s = sphereSpec(0.2);
    CHECK(primitiveOccupancy(s, {0, 0, 0}) == 1);
    CHECK(primitiveOccupancy(s, {0.3, 0, 0}) == 0);
    CHECK(primitiveOccupancy(s, {0.19, 0, 0}) == 1);
    CHECK(primitiveOccupancy(s, {0.2, 0, 0}) == 0);  // boundary open
}

TEST_CASE("primitive_occupancy: noise-free match with closed-form tests on 1e5 points") {
    Rng seedRng(777);
    for (int kind = 0; kind < 3; ++kind) {
        PrimitiveSpec s;
        s.kind = static_cast<PrimitiveKind>(kind);
        s.center = {uniformReal(seedRng, -0.1, 0.1), uniformReal(seedRng, -0.1, 0.1),
                    uniformReal(seedRng, -0.1, 0.1)};
        s.radii = {uniformReal(seedRng, 0.1, 0.4), uniformReal(seedRng, 0.1, 0.4),
                   uniformReal(seedRng, 0.1, 0.4)};
        if (s.kind == PrimitiveKind::Sphere) s.radii = {s.radii.x, s.radii.x, s.radii.x};
        s.rotation = randomRotation(seedRng);
        s.noise_amplitude = 0.0;
        s.validate();

        Rng rng(1000 + kind);
        for (int i = 0; i < 100000 / 3; ++i) {
            Vec3 p{uniformReal(rng, -0.6, 0.6), uniformReal(rng, -0.6, 0.6),
                   uniformReal(rng, -0.6, 0.6)};
            Vec3 local = s.rotation.rotateInverse(p - s.center);
            int expected = 0;
            switch (s.kind) {
                case PrimitiveKind::Sphere:
                    expected = local.norm2() < s.radii.x * s.radii.x;
                    break;
                case PrimitiveKind::Ellipsoid: {
                    double q = local.x * local.x / (s.radii.x * s.radii.x) +
                               local.y * local.y / (s.radii.y * s.radii.y) +
                               local.z * local.z / (s.radii.z * s.radii.z);
                    expected = q < 1.0;
                    break;
                }
                case PrimitiveKind::Box:
                    expected = std::fabs(local.x) < s.radii.x && std::fabs(local.y) < s.radii.y &&
                               std::fabs(local.z) < s.radii.z;
                    break;
            }
            CHECK(primitiveOccupancy(s, p) == expected);
        }
    }
}

TEST_CASE("primitive surface samples sit on the perturbed boundary") {
    Rng rng(31337);
    PrimitiveSpec s;
    s.kind = PrimitiveKind::Ellipsoid;
    s.center = {0.05, -0.02, 0.1};
    s.radii = {0.3, 0.22, 0.26};
    s.rotation = randomRotation(rng);
    s.noise_amplitude = 0.02;
    s.noise_seed = 99;
    for (int i = 0; i < 300; ++i) {
        Vec3 p = samplePrimitiveSurface(s, rng);
        Vec3 local = s.rotation.rotateInverse(p - s.center);
        Vec3 d = local / local.norm();
        double ext = primitiveExtent(s, d);
        CHECK(std::fabs(local.norm() - ext) < 1e-12);
        // A nudge along the radial direction flips occupancy.
        Vec3 dirWorld = s.rotation.rotate(d);
        CHECK(primitiveOccupancy(s, p - dirWorld * 1e-6) == 1);
        CHECK(primitiveOccupancy(s, p + dirWorld * 1e-6) == 0);
    }
}

TEST_CASE("value noise is bounded and smooth") {
    Rng rng(4242);
    for (int i = 0; i < 2000; ++i) {
        Vec3 p{uniformReal(rng, -4, 4), uniformReal(rng, -4, 4), uniformReal(rng, -4, 4)};
        double n = valueNoise3(p, 5);
        CHECK(n >= -1.0);
        CHECK(n <= 1.0);
        double n2 = valueNoise3(p + Vec3{1e-4, 0, 0}, 5);
        CHECK(std::fabs(n - n2) < 1e-2);
    }
    // Deterministic in the seed.
    CHECK(valueNoise3({0.3, 0.4, 0.5}, 7) == valueNoise3({0.3, 0.4, 0.5}, 7));
    CHECK(valueNoise3({0.3, 0.4, 0.5}, 7) != valueNoise3({0.3, 0.4, 0.5}, 8));
}

TEST_CASE("primitive validation") {
    PrimitiveSpec s = sphereSpec(0.2);
    s.radii.y = -1;
    CHECK_THROWS(s.validate());
    s = sphereSpec(0.2);
    s.rotation = {2, 0, 0, 0};
    CHECK_THROWS(s.validate());
}
