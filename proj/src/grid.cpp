#include "mendkit/grid.hpp"

#include <cmath>
#include <thread>
#include <unordered_map>

namespace mendkit {

namespace {
int resolveWorkers(int workers) {
    if (workers > 0) return workers;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void checkResolution(int resolution) {
    if (resolution < 8) throw std::invalid_argument("grid resolution must be >= 8");
}
}  // namespace

FieldGrid evaluateGrid(const FieldFn& field, const SamplingCube& cube, int resolution,
                       int workers) {
    FieldBatchFn batch = [&](const std::vector<Vec3>& pts, std::vector<double>& out) {
        for (size_t i = 0; i < pts.size(); ++i) out[i] = field(pts[i]);
    };
    return evaluateGridBatch(batch, cube, resolution, workers);
}

FieldGrid evaluateGridBatch(const FieldBatchFn& field, const SamplingCube& cube, int resolution,
                            int workers) {
    checkResolution(resolution);
    FieldGrid grid;
    grid.resolution = resolution;
    grid.cube = cube;
    grid.values.resize(static_cast<size_t>(resolution) * resolution * resolution);

    const int R = resolution;
    auto evalSlab = [&](int z0, int z1) {
        std::vector<Vec3> pts;
        std::vector<double> vals;
        pts.reserve(static_cast<size_t>(R) * R);
        for (int z = z0; z < z1; ++z) {
            pts.clear();
            for (int y = 0; y < R; ++y)
                for (int x = 0; x < R; ++x) pts.push_back(grid.lattice(x, y, z));
            vals.assign(pts.size(), 0.0);
            field(pts, vals);
            size_t base = static_cast<size_t>(z) * R * R;
            for (size_t i = 0; i < vals.size(); ++i) {
                if (!std::isfinite(vals[i]))
                    throw std::runtime_error("evaluate_grid: non-finite field value");
                grid.values[base + i] = vals[i];
            }
        }
    };

    int nw = std::min(resolveWorkers(workers), R);
    if (nw <= 1) {
        evalSlab(0, R);
    } else {
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> errors(static_cast<size_t>(nw));
        int per = (R + nw - 1) / nw;
        for (int w = 0; w < nw; ++w) {
            int z0 = w * per, z1 = std::min(R, z0 + per);
            if (z0 >= z1) break;
            threads.emplace_back([&, w, z0, z1]() {
                try {
                    evalSlab(z0, z1);
                } catch (...) {
                    errors[static_cast<size_t>(w)] = std::current_exception();
                }
            });
        }
        for (auto& t : threads) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return grid;
}

namespace {

// Cell-local corner offsets (Bourke numbering).
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
// For each of the 12 cell edges: base lattice corner offset and axis.
constexpr int kEdgeBase[12][4] = {
    {0, 0, 0, 0}, {1, 0, 0, 1}, {0, 1, 0, 0}, {0, 0, 0, 1},
    {0, 0, 1, 0}, {1, 0, 1, 1}, {0, 1, 1, 0}, {0, 0, 1, 1},
    {0, 0, 0, 2}, {1, 0, 0, 2}, {1, 1, 0, 2}, {0, 1, 0, 2},
};
// Endpoint corner pair per edge, matching kEdgeBase direction (+axis).
constexpr int kEdgeCorners[12][2] = {{0, 1}, {1, 2}, {3, 2}, {0, 3}, {4, 5}, {5, 6},
                                     {7, 6}, {4, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

}  // namespace

void sealGridBoundary(FieldGrid& grid) {
    const int R = grid.resolution;
    for (int z = 0; z < R; ++z)
        for (int y = 0; y < R; ++y)
            for (int x = 0; x < R; ++x)
                if (x == 0 || y == 0 || z == 0 || x == R - 1 || y == R - 1 || z == R - 1)
                    grid.at(x, y, z) = 0.0;
}

TriMesh marchingCubes(const FieldGrid& grid, double iso) {
    const int R = grid.resolution;
    checkResolution(R);
    TriMesh mesh;
    std::unordered_map<uint64_t, uint32_t> edgeVertex;
    edgeVertex.reserve(static_cast<size_t>(R) * R * 8);

    auto latticeIndex = [R](int x, int y, int z) {
        return (static_cast<uint64_t>(z) * R + y) * R + x;
    };

    double vals[8];
    uint32_t verts[12];
    for (int z = 0; z + 1 < R; ++z) {
        for (int y = 0; y + 1 < R; ++y) {
            for (int x = 0; x + 1 < R; ++x) {
                int cubeIndex = 0;
                for (int c = 0; c < 8; ++c) {
                    vals[c] = grid.at(x + kCorner[c][0], y + kCorner[c][1], z + kCorner[c][2]);
                    if (vals[c] > iso) cubeIndex |= 1 << c;
                }
                int edges = mc_tables::kEdgeTable[cubeIndex];
                if (edges == 0) continue;

                for (int e = 0; e < 12; ++e) {
                    if (!(edges & (1 << e))) continue;
                    int bx = x + kEdgeBase[e][0], by = y + kEdgeBase[e][1], bz = z + kEdgeBase[e][2];
                    int axis = kEdgeBase[e][3];
                    uint64_t key = latticeIndex(bx, by, bz) * 3 + axis;
                    auto it = edgeVertex.find(key);
                    if (it != edgeVertex.end()) {
                        verts[e] = it->second;
                        continue;
                    }
                    double v0 = vals[kEdgeCorners[e][0]];
                    double v1 = vals[kEdgeCorners[e][1]];
                    double t = (iso - v0) / (v1 - v0);
                    t = std::fmin(1.0, std::fmax(0.0, t));
                    Vec3 p0 = grid.lattice(bx, by, bz);
                    Vec3 p1 = p0;
                    double step = 2.0 * grid.cube.half_extent / (R - 1);
                    p1[axis] += step;
                    Vec3 p = p0 + (p1 - p0) * t;
                    uint32_t idx = static_cast<uint32_t>(mesh.vertices.size());
                    mesh.vertices.push_back(p);
                    edgeVertex.emplace(key, idx);
                    verts[e] = idx;
                }

                const int* tri = mc_tables::kTriTable[cubeIndex];
                for (int i = 0; tri[i] != -1; i += 3) {
                    // Swap gives outward normals toward lower field values
                    // under the corner-above-iso indexing used here.
                    mesh.triangles.push_back({verts[tri[i]], verts[tri[i + 2]], verts[tri[i + 1]]});
                }
            }
        }
    }
    cleanMesh(mesh);
    return mesh;
}

}  // namespace mendkit
