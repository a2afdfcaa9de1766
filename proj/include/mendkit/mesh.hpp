#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mendkit/core.hpp"

namespace mendkit {

// Indexed triangle surface in normalized space. Immutable after load; all
// queries are read-only and safe to call from many threads.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<uint32_t, 3>> triangles;
    bool watertight = false;

    bool empty() const { return triangles.empty(); }
    Vec3 triVertex(size_t t, int corner) const { return vertices[triangles[t][corner]]; }
    double triangleArea(size_t t) const;
    Vec3 triangleNormal(size_t t) const;  // unit normal, CCW winding
    Aabb bounds() const;
};

// Similarity applied by normalization: p' = (p + translation) * scale.
struct SimilarityTransform {
    double scale = 1.0;
    Vec3 translation{0, 0, 0};

    Vec3 apply(const Vec3& p) const { return (p + translation) * scale; }
    Vec3 invert(const Vec3& p) const { return p / scale - translation; }
};

// Drops degenerate triangles and unreferenced vertices, then recomputes the
// watertight flag. Called by the loaders; exposed for meshes built in memory.
void cleanMesh(TriMesh& mesh);
bool computeWatertight(const TriMesh& mesh);

// OBJ (ASCII, vertices/faces only) and binary little-endian PLY.
TriMesh loadMesh(const std::filesystem::path& path);
void saveMesh(const TriMesh& mesh, const std::filesystem::path& path);

// Centers the bounding box at the origin and scales the longest axis to 1.
std::pair<TriMesh, SimilarityTransform> normalizeUnitCube(const TriMesh& mesh);

double surfaceArea(const TriMesh& mesh);

// Number of edge-adjacency components of the triangle graph.
int connectedComponents(const TriMesh& mesh);

struct SurfaceSample {
    Vec3 point;
    uint32_t triangle = 0;
};

// Area-weighted uniform samples with originating-triangle labels.
std::vector<SurfaceSample> sampleSurface(const TriMesh& mesh, size_t n, uint64_t seed);

}  // namespace mendkit
