#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mendkit/binio.hpp"
#include "mendkit/mesh.hpp"
#include "mendkit/toyshapes.hpp"

using namespace mendkit;
namespace fs = std::filesystem;

namespace {
fs::path tmpDir() {
    fs::path dir = fs::temp_directory_path() / "mendkit_mesh_tests";
    fs::create_directories(dir);
    return dir;
}

void writeText(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}
}  // namespace

TEST_CASE("load_mesh: canonical unit cube") {
    TriMesh cube = boxMesh({0.5, 0.5, 0.5}, {0.5, 0.5, 0.5});
    fs::path path = tmpDir() / "cube.obj";
    saveMesh(cube, path);
    TriMesh loaded = loadMesh(path);
    CHECK(loaded.vertices.size() == 8);
    CHECK(loaded.triangles.size() == 12);
    CHECK(loaded.watertight);
}

TEST_CASE("load_mesh: unreferenced vertex is pruned, triangles kept") {
    fs::path path = tmpDir() / "unref.obj";
    writeText(path,
              "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 5 5 5\n"  // 4th vertex unused
              "f 1 2 3\n");
    TriMesh mesh = loadMesh(path);
    CHECK(mesh.vertices.size() == 3);
    CHECK(mesh.triangles.size() == 1);
}

TEST_CASE("load_mesh: single isolated triangle is not watertight") {
    fs::path path = tmpDir() / "tri.obj";
    writeText(path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    TriMesh mesh = loadMesh(path);
    CHECK_FALSE(mesh.watertight);
}

TEST_CASE("load_mesh: parse failure and empty mesh raise") {
    fs::path bad = tmpDir() / "bad.obj";
    writeText(bad, "v 0 0\nf 1 2 3\n");
    CHECK_THROWS(loadMesh(bad));
    fs::path empty = tmpDir() / "empty.obj";
    writeText(empty, "# nothing here\n");
    CHECK_THROWS(loadMesh(empty));
}

TEST_CASE("normalize_unit_cube: direct scaling of [0,2]^3") {
    TriMesh box = boxMesh({1, 1, 1}, {1, 1, 1});
    auto [out, tf] = normalizeUnitCube(box);
    Aabb b = out.bounds();
    CHECK(b.lo.x == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(b.hi.x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(b.hi.z == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tf.scale == doctest::Approx(0.5));
}

TEST_CASE("normalize_unit_cube: idempotent, transform round-trips") {
    TriMesh box = boxMesh({0.3, -0.1, 0.2}, {0.5, 0.2, 0.1});
    auto [once, tf1] = normalizeUnitCube(box);
    auto [twice, tf2] = normalizeUnitCube(once);
    CHECK(tf2.scale == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(tf2.translation.x) < 1e-12);
    for (size_t i = 0; i < once.vertices.size(); ++i) {
        Vec3 back = tf1.invert(once.vertices[i]);
        CHECK((back - box.vertices[i]).norm() < 1e-9);
        CHECK((twice.vertices[i] - once.vertices[i]).norm() < 1e-12);
    }
}

TEST_CASE("normalize_unit_cube: aspect preserved for [0,4]x[0,2]x[0,1]") {
    TriMesh box = boxMesh({2, 1, 0.5}, {2, 1, 0.5});
    auto [out, tf] = normalizeUnitCube(box);
    Vec3 ext = out.bounds().extent();
    CHECK(ext.x == doctest::Approx(1.0));
    CHECK(ext.y == doctest::Approx(0.5));
    CHECK(ext.z == doctest::Approx(0.25));
}

TEST_CASE("normalize_unit_cube: zero-extent mesh raises") {
    TriMesh degenerate;
    degenerate.vertices = {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
    degenerate.triangles = {{0, 1, 2}};
    CHECK_THROWS(normalizeUnitCube(TriMesh{}));
    Aabb b = degenerate.bounds();
    CHECK(b.extent().maxCoeff() == 0.0);
    CHECK_THROWS(normalizeUnitCube(degenerate));
}

TEST_CASE("surface_area: analytic values") {
    CHECK(surfaceArea(boxMesh({0, 0, 0}, {0.5, 0.5, 0.5})) == doctest::Approx(6.0));
    TriMesh tri;
    tri.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    tri.triangles = {{0, 1, 2}};
    CHECK(surfaceArea(tri) == doctest::Approx(0.5));
    CHECK_THROWS(surfaceArea(TriMesh{}));
}

TEST_CASE("surface_area: icosphere refinements approach 4*pi monotonically") {
    double target = 4.0 * M_PI;
    double prev = 0.0;
    for (int s = 0; s <= 3; ++s) {
        double area = surfaceArea(icosphere(1.0, s));
        CHECK(area > prev);  // inscribed polyhedra grow toward the sphere
        CHECK(area < target);
        prev = area;
    }
    CHECK(target - prev < 0.05);
}

TEST_CASE("connected_components") {
    TriMesh cube = boxMesh({0, 0, 0}, {0.5, 0.5, 0.5});
    CHECK(connectedComponents(cube) == 1);

    TriMesh two = cube;
    TriMesh other = boxMesh({3, 0, 0}, {0.5, 0.5, 0.5});
    uint32_t offset = static_cast<uint32_t>(two.vertices.size());
    for (const auto& v : other.vertices) two.vertices.push_back(v);
    for (const auto& t : other.triangles)
        two.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
    CHECK(connectedComponents(two) == 2);

    CHECK(connectedComponents(TriMesh{}) == 0);
}

TEST_CASE("sample_surface: single triangle contains all samples") {
    TriMesh tri;
    tri.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    tri.triangles = {{0, 1, 2}};
    auto samples = sampleSurface(tri, 3, 42);
    REQUIRE(samples.size() == 3);
    for (const auto& s : samples) {
        CHECK(s.triangle == 0);
        CHECK(s.point.x >= 0.0);
        CHECK(s.point.y >= 0.0);
        CHECK(s.point.x + s.point.y <= 1.0 + 1e-12);
        CHECK(s.point.z == 0.0);
    }
}

TEST_CASE("sample_surface: per-face counts within 3 sigma of n/6 on the cube") {
    TriMesh cube = boxMesh({0, 0, 0}, {0.5, 0.5, 0.5});
    const size_t n = 60000;
    auto samples = sampleSurface(cube, n, 7);
    // Triangles come in face pairs (2 per face, in order).
    std::array<size_t, 6> faceCounts{};
    for (const auto& s : samples) faceCounts[s.triangle / 2] += 1;
    double mean = static_cast<double>(n) / 6.0;
    double sigma = std::sqrt(static_cast<double>(n) * (1.0 / 6.0) * (5.0 / 6.0));
    for (size_t c : faceCounts)
        CHECK(std::fabs(static_cast<double>(c) - mean) < 3.0 * sigma);
}

TEST_CASE("sample_surface: fixed seed reproduces byte-identical samples") {
    TriMesh sphere = icosphere(0.4, 2);
    auto a = sampleSurface(sphere, 5000, 99);
    auto b = sampleSurface(sphere, 5000, 99);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].triangle == b[i].triangle);
        CHECK(a[i].point.x == b[i].point.x);
        CHECK(a[i].point.y == b[i].point.y);
        CHECK(a[i].point.z == b[i].point.z);
    }
    CHECK_THROWS(sampleSurface(sphere, 0, 1));
}

TEST_CASE("sample_surface: chi-squared test for area-proportional counts") {
    // Mixed-size triangles: a cube scaled anisotropically.
    TriMesh box = boxMesh({0, 0, 0}, {0.8, 0.3, 0.1});
    const size_t n = 120000;
    auto samples = sampleSurface(box, n, 1234);
    std::vector<size_t> counts(box.triangles.size(), 0);
    for (const auto& s : samples) counts[s.triangle] += 1;
    double total = surfaceArea(box);
    double chi2 = 0.0;
    for (size_t t = 0; t < counts.size(); ++t) {
        double expect = static_cast<double>(n) * box.triangleArea(t) / total;
        double d = static_cast<double>(counts[t]) - expect;
        chi2 += d * d / expect;
    }
    // Wilson-Hilferty critical value at p = 0.001 for dof = triangles - 1.
    double dof = static_cast<double>(counts.size() - 1);
    double z = 3.0902;  // Phi^-1(0.999)
    double crit = dof * std::pow(1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof)), 3.0);
    CHECK(chi2 < crit);
}

TEST_CASE("PLY round trip preserves geometry and topology") {
    TriMesh sphere = icosphere(0.35, 2);
    fs::path path = tmpDir() / "sphere.ply";
    saveMesh(sphere, path);
    TriMesh loaded = loadMesh(path);
    CHECK(loaded.vertices.size() == sphere.vertices.size());
    CHECK(loaded.triangles.size() == sphere.triangles.size());
    CHECK(loaded.watertight);
    for (size_t i = 0; i < loaded.vertices.size(); ++i)
        CHECK((loaded.vertices[i] - sphere.vertices[i]).norm() < 1e-6);  // f32 storage
}
