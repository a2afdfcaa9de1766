#include "mendkit/toyshapes.hpp"

#include <cmath>
#include <map>

namespace mendkit {

TriMesh boxMesh(const Vec3& c, const Vec3& h) {
    TriMesh mesh;
    for (int i = 0; i < 8; ++i)
        mesh.vertices.push_back({c.x + (i & 1 ? h.x : -h.x), c.y + (i & 2 ? h.y : -h.y),
                                 c.z + (i & 4 ? h.z : -h.z)});
    const int faces[12][3] = {
        {0, 2, 1}, {1, 2, 3},  // z-
        {4, 5, 6}, {5, 7, 6},  // z+
        {0, 1, 4}, {1, 5, 4},  // y-
        {2, 6, 3}, {3, 6, 7},  // y+
        {0, 4, 2}, {2, 4, 6},  // x-
        {1, 3, 5}, {3, 7, 5},  // x+
    };
    for (const auto& f : faces)
        mesh.triangles.push_back({static_cast<uint32_t>(f[0]), static_cast<uint32_t>(f[1]),
                                  static_cast<uint32_t>(f[2])});
    mesh.watertight = computeWatertight(mesh);
    return mesh;
}

TriMesh icosphere(double radius, int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
        {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : verts) v = v.normalized() * radius;
    std::vector<std::array<uint32_t, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<uint32_t, uint32_t>, uint32_t> midpoints;
        auto midpoint = [&](uint32_t a, uint32_t b) {
            auto key = std::minmax(a, b);
            auto it = midpoints.find(key);
            if (it != midpoints.end()) return it->second;
            Vec3 m = ((verts[a] + verts[b]) * 0.5).normalized() * radius;
            verts.push_back(m);
            uint32_t idx = static_cast<uint32_t>(verts.size() - 1);
            midpoints.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<uint32_t, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            uint32_t ab = midpoint(f[0], f[1]);
            uint32_t bc = midpoint(f[1], f[2]);
            uint32_t ca = midpoint(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    TriMesh mesh;
    mesh.vertices = std::move(verts);
    mesh.triangles = std::move(faces);
    mesh.watertight = computeWatertight(mesh);
    return mesh;
}

std::vector<ToyShape> toyShapeCorpus() {
    std::vector<ToyShape> shapes;
    shapes.push_back({"toy_sphere", [](const Vec3& p) {
                          return sphereOccupancy(p, {0, 0, 0}, 0.40);
                      }});
    shapes.push_back({"toy_box", [](const Vec3& p) {
                          return boxOccupancy(p, {0, 0, 0}, {0.42, 0.30, 0.24});
                      }});
    shapes.push_back({"toy_ellipsoid", [](const Vec3& p) {
                          double q = p.x * p.x / (0.45 * 0.45) + p.y * p.y / (0.26 * 0.26) +
                                     p.z * p.z / (0.34 * 0.34);
                          return q < 1.0 ? 1 : 0;
                      }});
    shapes.push_back({"toy_dumbbell", [](const Vec3& p) {
                          return sphereOccupancy(p, {-0.22, 0, 0}, 0.24) ||
                                 sphereOccupancy(p, {0.22, 0, 0}, 0.24) ||
                                 boxOccupancy(p, {0, 0, 0}, {0.24, 0.09, 0.09});
                      }});
    shapes.push_back({"toy_mushroom", [](const Vec3& p) {
                          return boxOccupancy(p, {0, 0, -0.20}, {0.12, 0.12, 0.26}) ||
                                 sphereOccupancy(p, {0, 0, 0.18}, 0.30);
                      }});
    return shapes;
}

TriMesh meshFromOccupancy(const std::function<int(const Vec3&)>& occ, const SamplingCube& cube,
                          int resolution) {
    FieldGrid grid = evaluateGrid(
        [&](const Vec3& p) { return static_cast<double>(occ(p)); }, cube, resolution);
    return marchingCubes(grid, 0.5);
}

}  // namespace mendkit
