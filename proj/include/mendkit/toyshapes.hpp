#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mendkit/grid.hpp"
#include "mendkit/mesh.hpp"

namespace mendkit {

// Analytic fixtures shared by the self-test suites and synthetic corpora.

// Axis-aligned box as 12 triangles with outward winding.
TriMesh boxMesh(const Vec3& center, const Vec3& halfExtents);

// Subdivided icosahedron with vertices exactly on the radius-r sphere.
TriMesh icosphere(double radius, int subdivisions);

inline int sphereOccupancy(const Vec3& p, const Vec3& c, double r) {
    return (p - c).norm2() < r * r ? 1 : 0;
}
inline int boxOccupancy(const Vec3& p, const Vec3& c, const Vec3& h) {
    Vec3 d = p - c;
    return (std::fabs(d.x) < h.x && std::fabs(d.y) < h.y && std::fabs(d.z) < h.z) ? 1 : 0;
}

struct ToyShape {
    std::string name;
    std::function<int(const Vec3&)> occupancy;  // analytic composed field
};

// Small corpus of distinct primitive compositions, all inside the unit cube.
std::vector<ToyShape> toyShapeCorpus();

// Watertight mesh of an analytic occupancy field via marching cubes.
TriMesh meshFromOccupancy(const std::function<int(const Vec3&)>& occ, const SamplingCube& cube,
                          int resolution);

}  // namespace mendkit
