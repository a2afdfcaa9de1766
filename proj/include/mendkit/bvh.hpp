#pragma once

#include <vector>

#include "mendkit/core.hpp"
#include "mendkit/mesh.hpp"

namespace mendkit {

// Axis-aligned BVH over mesh triangles. Supports ray-crossing counts (with
// degenerate-hit detection) and exact closest-point queries.
class TriangleBvh {
public:
    explicit TriangleBvh(const TriMesh& mesh);

    struct CrossingResult {
        int crossings = 0;
        bool degenerate = false;  // some hit was too close to an edge/vertex to trust
    };

    // Counts transversal crossings of the open ray origin + t*dir, t > 0.
    CrossingResult countCrossings(const Vec3& origin, const Vec3& dir) const;

    // Squared distance from p to the closest triangle, with early-out pruning.
    double closestDist2(const Vec3& p) const;

    const TriMesh& mesh() const { return *mesh_; }

private:
    struct Node {
        Aabb box;
        int left = -1, right = -1;  // internal children, or
        int begin = 0, end = 0;     // leaf triangle range in order_
    };
    int build(int begin, int end, std::vector<Aabb>& triBoxes, std::vector<Vec3>& centroids);

    const TriMesh* mesh_;
    std::vector<Node> nodes_;
    std::vector<uint32_t> order_;
};

// Point-in-shape occupancy by parity ray casting. Points within kBoundaryTol
// of the surface classify as outside (open-set convention). Requires a
// watertight mesh; immutable and safe for concurrent queries.
class MeshOccupancy {
public:
    explicit MeshOccupancy(const TriMesh& mesh);

    // 1 iff strictly interior.
    int occupancy(const Vec3& point) const;

    double distanceToSurface(const Vec3& point) const;
    const TriangleBvh& bvh() const { return bvh_; }

private:
    TriangleBvh bvh_;
};

// Generalized winding number of the mesh boundary at p (exact solid-angle
// sum). Approaches 1 inside a closed surface, 0 outside; tolerant of holes.
double generalizedWindingNumber(const TriMesh& mesh, const Vec3& p);

}  // namespace mendkit
