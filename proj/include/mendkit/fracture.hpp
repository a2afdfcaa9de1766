#pragma once

#include <filesystem>
#include <vector>

#include "mendkit/bvh.hpp"
#include "mendkit/mesh.hpp"
#include "mendkit/primitive.hpp"

namespace mendkit {

struct FractureConfig {
    double target_min = 0.05;
    double target_max = 0.20;
    int retry_budget = 200;
    double noise_amplitude = 0.02;
    size_t area_samples = 100000;      // surface samples used to measure the cut
    size_t fracture_points = 8192;      // labeled points on primitive boundary inside C
    size_t nonfracture_points = 8192;   // labeled points on C's surface outside the cut
    int mc_resolution = 256;            // grid for fractured/restoration meshes
    SamplingCube cube{};                // extraction domain
};

struct FractureResult {
    std::vector<PrimitiveSpec> primitives;
    double removed_area_fraction = 0.0;
    TriMesh fractured_mesh;
    TriMesh restoration_mesh;
    std::vector<Vec3> fracture_surface_points;
    std::vector<Vec3> nonfracture_surface_points;
    uint64_t seed = 0;
};

// Occupancy-space subtraction of randomized primitives from a watertight,
// normalized complete shape. The cut is accepted when the fraction of
// area-weighted surface samples strictly inside the primitive union lands in
// [target_min, target_max].
FractureResult fracture(const TriMesh& complete, uint64_t seed, const FractureConfig& cfg = {});

// Occupancy fields composed from the complete shape and the primitive union.
int fracturedOccupancy(const MeshOccupancy& complete, const std::vector<PrimitiveSpec>& prims,
                       const Vec3& p);
int restorationOccupancy(const MeshOccupancy& complete, const std::vector<PrimitiveSpec>& prims,
                         const Vec3& p);

// Watertight fallback for open inputs: occupancy-grid rasterization
// (generalized winding number thresholded at 0.5) followed by marching cubes.
TriMesh voxelRemesh(const TriMesh& mesh, int resolution, int workers = 0);

// Artifact layout: fractured/restoration meshes, primitive metadata, and the
// two labeled point files (little-endian f32 with a u64 count header).
void saveFractureResult(const FractureResult& fr, const std::filesystem::path& dir);
FractureResult loadFractureResult(const std::filesystem::path& dir);

void savePointsF32(const std::vector<Vec3>& pts, const std::filesystem::path& path);
std::vector<Vec3> loadPointsF32(const std::filesystem::path& path);

}  // namespace mendkit
