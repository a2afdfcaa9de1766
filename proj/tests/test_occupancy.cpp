#include <doctest.h>

#include <cmath>

#include "mendkit/bvh.hpp"
#include "mendkit/toyshapes.hpp"

using namespace mendkit;

TEST_CASE("occupancy: interior and exterior of the unit cube") {
    TriMesh cube = boxMesh({0, 0, 0}, {0.5, 0.5, 0.5});
    MeshOccupancy occ(cube);
    CHECK(occ.occupancy({0, 0, 0}) == 1);
    CHECK(occ.occupancy({2, 0, 0}) == 0);
    CHECK(occ.occupancy({0.49, 0.49, 0.49}) == 1);
    CHECK(occ.occupancy({0.51, 0, 0}) == 0);
}

TEST_CASE("occupancy: boundary band classifies as outside") {
    TriMesh cube = boxMesh({0, 0, 0}, {0.5, 0.5, 0.5});
    MeshOccupancy occ(cube);
    CHECK(occ.occupancy({0.5, 0.1, 0.1}) == 0);         // exactly on a face
    CHECK(occ.occupancy({0.5 - 5e-7, 0.1, 0.1}) == 0);  // inside the band
    CHECK(occ.occupancy({0.5 - 5e-6, 0.1, 0.1}) == 1);  // just past the band
}

TEST_CASE("occupancy: non-watertight mesh is rejected with a hint") {
    TriMesh tri;
    tri.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    tri.triangles = {{0, 1, 2}};
    tri.watertight = computeWatertight(tri);
    CHECK_THROWS_WITH_AS(MeshOccupancy{tri}, doctest::Contains("voxel_remesh"),
                         std::runtime_error);
}

TEST_CASE("occupancy: 1e5 random points agree with the analytic box oracle") {
    Vec3 half{0.42, 0.27, 0.18};
    TriMesh box = boxMesh({0, 0, 0}, half);
    MeshOccupancy occ(box);
    Rng rng(20240601);
    size_t checked = 0;
    for (size_t i = 0; i < 100000; ++i) {
        Vec3 p{uniformReal(rng, -0.6, 0.6), uniformReal(rng, -0.6, 0.6),
               uniformReal(rng, -0.6, 0.6)};
        // Skip the boundary band where the open-set convention applies.
        double margin = std::fmin(
            std::fmin(std::fabs(std::fabs(p.x) - half.x), std::fabs(std::fabs(p.y) - half.y)),
            std::fabs(std::fabs(p.z) - half.z));
        if (margin <= kBoundaryTol) continue;
        ++checked;
        CHECK(occ.occupancy(p) == boxOccupancy(p, {0, 0, 0}, half));
    }
    CHECK(checked > 99000);
}

TEST_CASE("occupancy: property over random boxes and spheres") {
    Rng rng(5150);
    for (int shape = 0; shape < 4; ++shape) {
        Vec3 half{uniformReal(rng, 0.1, 0.45), uniformReal(rng, 0.1, 0.45),
                  uniformReal(rng, 0.1, 0.45)};
        TriMesh box = boxMesh({0, 0, 0}, half);
        MeshOccupancy bOcc(box);
        double radius = uniformReal(rng, 0.15, 0.45);
        TriMesh sphere = icosphere(radius, 4);
        MeshOccupancy sOcc(sphere);
        // The icosphere is inscribed; exclude a band wider than its sagitta.
        double band = 0.01 * radius;
        for (int i = 0; i < 4000; ++i) {
            Vec3 p{uniformReal(rng, -0.6, 0.6), uniformReal(rng, -0.6, 0.6),
                   uniformReal(rng, -0.6, 0.6)};
            double boxMargin = std::fmin(
                std::fmin(std::fabs(std::fabs(p.x) - half.x),
                          std::fabs(std::fabs(p.y) - half.y)),
                std::fabs(std::fabs(p.z) - half.z));
            if (boxMargin > kBoundaryTol)
                CHECK(bOcc.occupancy(p) == boxOccupancy(p, {0, 0, 0}, half));
            if (std::fabs(p.norm() - radius) > band)
                CHECK(sOcc.occupancy(p) == sphereOccupancy(p, {0, 0, 0}, radius));
        }
    }
}

TEST_CASE("generalized winding number: closed, open, and flat inputs") {
    TriMesh cube = boxMesh({0, 0, 0}, {0.5, 0.5, 0.5});
    CHECK(generalizedWindingNumber(cube, {0, 0, 0}) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(generalizedWindingNumber(cube, {2, 0, 0}) == doctest::Approx(0.0).epsilon(1e-9));

    TriMesh holed = cube;
    holed.triangles.resize(10);  // delete one face (two triangles)
    holed.watertight = computeWatertight(holed);
    CHECK_FALSE(holed.watertight);
    double inside = generalizedWindingNumber(holed, {0, 0, 0});
    CHECK(inside > 0.5);
    CHECK(inside < 1.0);

    TriMesh plane;
    plane.vertices = {{-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0}};
    plane.triangles = {{0, 1, 2}, {0, 2, 3}};
    CHECK(std::fabs(generalizedWindingNumber(plane, {0.2, 0.1, 0.4})) < 0.5);
}
