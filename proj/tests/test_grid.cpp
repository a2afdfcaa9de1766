#include <doctest.h>

#include <cmath>

#include "mendkit/grid.hpp"
#include "mendkit/metrics.hpp"
#include "mendkit/toyshapes.hpp"

using namespace mendkit;

namespace {
double signedVolume(const TriMesh& m) {
    double v = 0;
    for (size_t t = 0; t < m.triangles.size(); ++t) {
        Vec3 a = m.triVertex(t, 0), b = m.triVertex(t, 1), c = m.triVertex(t, 2);
        v += a.dot(b.cross(c)) / 6.0;
    }
    return v;
}
}  // namespace

TEST_CASE("evaluate_grid: constant zero field, purity, errors") {
    SamplingCube cube({0, 0, 0}, 0.55);
    FieldGrid grid = evaluateGrid([](const Vec3&) { return 0.0; }, cube, 16);
    for (double v : grid.values) CHECK(v == 0.0);
    CHECK(marchingCubes(grid, 0.5).triangles.empty());

    FieldGrid again = evaluateGrid([](const Vec3&) { return 0.0; }, cube, 16);
    CHECK(grid.values == again.values);

    CHECK_THROWS(evaluateGrid([](const Vec3&) { return 0.0; }, cube, 7));
    CHECK_THROWS(evaluateGrid([](const Vec3&) { return std::nan(""); }, cube, 16));
}

TEST_CASE("evaluate_grid: sphere interior count matches analytic volume") {
    SamplingCube cube({0, 0, 0}, 0.55);
    const double r = 0.3;
    const int res = 64;
    FieldGrid grid = evaluateGrid(
        [&](const Vec3& p) { return static_cast<double>(sphereOccupancy(p, {0, 0, 0}, r)); },
        cube, res);
    size_t interior = 0;
    for (double v : grid.values)
        if (v > 0.5) ++interior;
    double cell = 2.0 * cube.half_extent / (res - 1);
    double expected = (4.0 / 3.0) * M_PI * r * r * r / (cell * cell * cell);
    CHECK(std::fabs(static_cast<double>(interior) - expected) < 0.03 * expected);
}

TEST_CASE("evaluate_grid: worker count does not change the result") {
    SamplingCube cube({0, 0, 0}, 0.5);
    auto field = [](const Vec3& p) { return std::sin(7 * p.x) * std::cos(5 * p.y) + p.z; };
    FieldGrid g1 = evaluateGrid(field, cube, 33, 1);
    FieldGrid g2 = evaluateGrid(field, cube, 33, 4);
    CHECK(g1.values == g2.values);
}

TEST_CASE("marching_cubes: sphere is watertight with outward normals") {
    SamplingCube cube({0, 0, 0}, 0.55);
    TriMesh sphere = meshFromOccupancy(
        [](const Vec3& p) { return sphereOccupancy(p, {0, 0, 0}, 0.3); }, cube, 48);
    CHECK(sphere.watertight);
    double vol = signedVolume(sphere);
    CHECK(vol > 0.0);  // outward normals toward lower occupancy
    CHECK(vol == doctest::Approx(4.0 / 3.0 * M_PI * 0.027).epsilon(0.05));
    Aabb b = sphere.bounds();
    CHECK(b.lo.x >= cube.lo().x);
    CHECK(b.hi.x <= cube.hi().x);
}

TEST_CASE("marching_cubes: value complement flips orientation, same geometry") {
    SamplingCube cube({0, 0, 0}, 0.55);
    FieldGrid grid = evaluateGrid(
        [](const Vec3& p) { return static_cast<double>(sphereOccupancy(p, {0, 0, 0}, 0.3)); },
        cube, 32);
    FieldGrid flipped = grid;
    for (auto& v : flipped.values) v = 1.0 - v;
    TriMesh a = marchingCubes(grid, 0.5);
    TriMesh b = marchingCubes(flipped, 0.5);
    CHECK(a.triangles.size() == b.triangles.size());
    CHECK(signedVolume(a) == doctest::Approx(-signedVolume(b)).epsilon(1e-12));
}

TEST_CASE("marching_cubes: refinement reduces chamfer to the analytic sphere") {
    SamplingCube cube({0, 0, 0}, 0.55);
    const double r = 0.3;
    Rng rng(2029);
    std::vector<Vec3> analytic;
    for (int i = 0; i < 20000; ++i) analytic.push_back(uniformUnitVector(rng) * r);
    auto cdAt = [&](int res) {
        TriMesh mesh = meshFromOccupancy(
            [&](const Vec3& p) { return sphereOccupancy(p, {0, 0, 0}, r); }, cube, res);
        auto surf = sampleSurface(mesh, 20000, 5);
        std::vector<Vec3> pts;
        for (const auto& s : surf) pts.push_back(s.point);
        return chamferPoints(pts, analytic);
    };
    double c48 = cdAt(48), c96 = cdAt(96);
    CHECK(c96 < c48);
    CHECK(c96 < 2.0 / 96.0);
}

TEST_CASE("thresholded grids partition exactly") {
    SamplingCube cube({0, 0, 0}, 0.5);
    Rng rng(88);
    const int res = 24;
    FieldGrid f = evaluateGrid([&](const Vec3&) { return uniformReal(rng, 0, 1); }, cube, res);
    FieldGrid g = evaluateGrid([&](const Vec3&) { return uniformReal(rng, 0, 1); }, cube, res);
    size_t fractured = 0, restoration = 0, complete = 0;
    for (size_t i = 0; i < f.values.size(); ++i) {
        bool fc = f.values[i] >= 0.5, gc = g.values[i] >= 0.5;
        complete += fc;
        fractured += fc && gc;
        restoration += fc && !gc;
    }
    CHECK(fractured + restoration == complete);
}

TEST_CASE("seal_grid_boundary closes solid fields at the cube walls") {
    SamplingCube cube({0, 0, 0}, 0.5);
    FieldGrid grid = evaluateGrid([](const Vec3&) { return 1.0; }, cube, 24);
    CHECK(marchingCubes(grid, 0.5).triangles.empty());  // no crossings
    sealGridBoundary(grid);
    TriMesh box = marchingCubes(grid, 0.5);
    CHECK(box.watertight);
    Vec3 ext = box.bounds().extent();
    // The shell sits one lattice step inside the cube.
    CHECK(ext.x == doctest::Approx(1.0 - 2.0 / 23.0).epsilon(0.02));
}
