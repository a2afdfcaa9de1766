#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "mendkit/bvh.hpp"
#include "mendkit/fracture.hpp"
#include "mendkit/mesh.hpp"
#include "mendkit/tps.hpp"

namespace mendkit {

// Per-point source tiers, stored as contiguous blocks in tier order so the
// tag never needs its own array in the sample file.
enum class SampleSource : uint8_t { Uniform = 0, NearSurfaceCoarse = 1, NearSurfaceFine = 2 };

struct SampleCounts {
    size_t uniform = 0;
    size_t near_coarse = 0;
    size_t near_fine = 0;
    size_t total() const { return uniform + near_coarse + near_fine; }
};

struct SamplingConfig {
    SampleCounts counts;
    double sigma_coarse = 0.025;
    double sigma_fine = 0.0025;
    SamplingCube cube{};
    double max_drop_rate = 0.05;
};

// Probe set with ground-truth occupancy bits for the complete shape, break
// set, fractured shape, and restoration. Bits are packed 8 per byte.
struct SampleSet {
    std::string shape_id;
    std::vector<float> points;  // 3N, inside the sampling cube
    std::vector<uint8_t> occ_c, occ_b, occ_f, occ_r;
    std::array<uint64_t, 3> source_counts{0, 0, 0};  // retained rows per tier
    double drop_rate = 0.0;
    uint64_t seed = 0;

    size_t size() const { return points.size() / 3; }
    Vec3 point(size_t i) const {
        return {points[3 * i], points[3 * i + 1], points[3 * i + 2]};
    }
    SampleSource source(size_t i) const {
        if (i < source_counts[0]) return SampleSource::Uniform;
        if (i < source_counts[0] + source_counts[1]) return SampleSource::NearSurfaceCoarse;
        return SampleSource::NearSurfaceFine;
    }

    static int bit(const std::vector<uint8_t>& bits, size_t i) {
        return (bits[i >> 3] >> (i & 7)) & 1;
    }
    static void setBit(std::vector<uint8_t>& bits, size_t i, int v) {
        if (v) bits[i >> 3] |= static_cast<uint8_t>(1u << (i & 7));
        else bits[i >> 3] &= static_cast<uint8_t>(~(1u << (i & 7)));
    }
};

// Draws the tiered point mix, probes ground truth (complete-shape occupancy
// by ray casting, break occupancy from the TPS side), composes the fractured
// and restoration bits, and drops points whose TPS side contradicts the
// primitive cut. Throws if the drop rate exceeds cfg.max_drop_rate.
SampleSet buildSampleSet(const TriMesh& complete, const FractureResult& fr, const TpsSurface& tps,
                         const SamplingConfig& cfg, uint64_t seed, int workers = 0);

// Deterministic k-of-N subsample without replacement (row indices).
std::vector<uint64_t> subsampleIndices(const SampleSet& set, size_t k, uint64_t seed);

// "DMSS" container: version, count, point block, four packed bit blocks.
void saveSampleSet(const SampleSet& set, const std::filesystem::path& path);
SampleSet loadSampleSet(const std::filesystem::path& path);

// Sidecar with seeds, counts, noise scales, the TPS, and the drop rate.
void saveSampleSetMeta(const SampleSet& set, const SamplingConfig& cfg, const TpsSurface& tps,
                       const std::filesystem::path& path);

}  // namespace mendkit
