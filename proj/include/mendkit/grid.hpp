#pragma once

#include <functional>
#include <vector>

#include "mendkit/core.hpp"
#include "mendkit/mesh.hpp"

namespace mendkit {

namespace mc_tables {
extern const int kEdgeTable[256];
extern const int kTriTable[256][16];
}  // namespace mc_tables

// Scalar field sampled on a dense corner lattice of resolution^3 points
// spanning the cube.
struct FieldGrid {
    int resolution = 0;
    SamplingCube cube;
    std::vector<double> values;  // x-fastest, then y, then z

    double& at(int x, int y, int z) {
        return values[(static_cast<size_t>(z) * resolution + y) * resolution + x];
    }
    double at(int x, int y, int z) const {
        return values[(static_cast<size_t>(z) * resolution + y) * resolution + x];
    }
    Vec3 lattice(int x, int y, int z) const {
        double step = 2.0 * cube.half_extent / (resolution - 1);
        Vec3 lo = cube.lo();
        return {lo.x + x * step, lo.y + y * step, lo.z + z * step};
    }
};

using FieldFn = std::function<double(const Vec3&)>;

// Batched form used by learned fields: fills out[i] for points[i].
using FieldBatchFn = std::function<void(const std::vector<Vec3>&, std::vector<double>&)>;

// Evaluates the field at every lattice point; z-slabs run in parallel into a
// preallocated block so the result is independent of worker count.
FieldGrid evaluateGrid(const FieldFn& field, const SamplingCube& cube, int resolution,
                       int workers = 0);
FieldGrid evaluateGridBatch(const FieldBatchFn& field, const SamplingCube& cube, int resolution,
                            int workers = 0);

// Standard 256-case marching cubes at the given iso level. Vertices are
// deduplicated on shared cell edges, so the output is watertight wherever the
// surface does not exit the grid. Outward normals point toward lower values.
TriMesh marchingCubes(const FieldGrid& grid, double iso = 0.5);

// Zeroes the outermost lattice shell so solid fields close at the cube
// walls. Used for solid reconstructions; break-surface sheets stay open.
void sealGridBoundary(FieldGrid& grid);

}  // namespace mendkit
