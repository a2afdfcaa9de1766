#include "mendkit/fracture.hpp"

#include <cmath>
#include <thread>

#include <json.hpp>

#include "mendkit/binio.hpp"
#include "mendkit/grid.hpp"

namespace mendkit {

namespace fs = std::filesystem;
using nlohmann::json;

int fracturedOccupancy(const MeshOccupancy& complete, const std::vector<PrimitiveSpec>& prims,
                       const Vec3& p) {
    return complete.occupancy(p) && !primitiveUnionOccupancy(prims, p);
}

int restorationOccupancy(const MeshOccupancy& complete, const std::vector<PrimitiveSpec>& prims,
                         const Vec3& p) {
    return complete.occupancy(p) && primitiveUnionOccupancy(prims, p);
}

namespace {

PrimitiveSpec drawPrimitive(Rng& rng, const std::vector<SurfaceSample>& surf,
                            double noiseAmplitude) {
    PrimitiveSpec spec;
    int kind = static_cast<int>(uniformReal(rng, 0.0, 3.0));
    spec.kind = static_cast<PrimitiveKind>(std::min(kind, 2));
    double base = uniformReal(rng, 0.10, 0.38);
    switch (spec.kind) {
        case PrimitiveKind::Sphere:
            spec.radii = {base, base, base};
            break;
        case PrimitiveKind::Box:
        case PrimitiveKind::Ellipsoid:
            spec.radii = {base * uniformReal(rng, 0.6, 1.4), base * uniformReal(rng, 0.6, 1.4),
                          base * uniformReal(rng, 0.6, 1.4)};
            break;
    }
    // Anchor the tool on the surface so it bites into the shape.
    const Vec3 anchor = surf[static_cast<size_t>(uniformReal(rng, 0.0, 1.0) *
                                                 static_cast<double>(surf.size() - 1))].point;
    Vec3 offset = uniformUnitVector(rng) * uniformReal(rng, 0.0, 0.3 * base);
    spec.center = anchor + offset;
    Vec3 axis = uniformUnitVector(rng);
    double angle = uniformReal(rng, 0.0, 2.0 * M_PI);
    double s = std::sin(angle * 0.5);
    spec.rotation = Quat{std::cos(angle * 0.5), axis.x * s, axis.y * s, axis.z * s}.normalized();
    spec.noise_amplitude = noiseAmplitude;
    spec.noise_seed = rng();
    return spec;
}

// Fraction of the surface samples strictly inside the primitive union.
double unionSurfaceFraction(const std::vector<SurfaceSample>& surf,
                            const std::vector<PrimitiveSpec>& prims) {
    size_t inside = 0;
    for (const auto& s : surf)
        if (primitiveUnionOccupancy(prims, s.point)) ++inside;
    return static_cast<double>(inside) / static_cast<double>(surf.size());
}

TriMesh extractBitField(const std::function<int(const Vec3&)>& bitField, const SamplingCube& cube,
                        int resolution) {
    FieldBatchFn batch = [&](const std::vector<Vec3>& pts, std::vector<double>& out) {
        for (size_t i = 0; i < pts.size(); ++i) out[i] = static_cast<double>(bitField(pts[i]));
    };
    FieldGrid grid = evaluateGridBatch(batch, cube, resolution);
    return marchingCubes(grid, 0.5);
}

}  // namespace

FractureResult fracture(const TriMesh& complete, uint64_t seed, const FractureConfig& cfg) {
    if (!complete.watertight) throw std::runtime_error("fracture: complete mesh must be watertight");
    if (!(cfg.target_min > 0 && cfg.target_max > cfg.target_min && cfg.target_max < 1))
        throw std::invalid_argument("fracture: bad target range");

    MeshOccupancy occ(complete);
    auto surf = sampleSurface(complete, cfg.area_samples, deriveSeed(seed, 1));

    Rng rng(deriveSeed(seed, 2));
    std::vector<PrimitiveSpec> prims;
    double fraction = 0.0;
    bool accepted = false;
    for (int attempt = 0; attempt < cfg.retry_budget; ++attempt) {
        PrimitiveSpec cand = drawPrimitive(rng, surf, cfg.noise_amplitude);
        cand.validate();
        prims.push_back(cand);
        double f = unionSurfaceFraction(surf, prims);
        if (f > cfg.target_max || f <= fraction) {
            prims.pop_back();  // overshoot or no new bite
            continue;
        }
        fraction = f;
        if (fraction >= cfg.target_min) {
            accepted = true;
            break;
        }
    }
    if (!accepted)
        throw std::runtime_error("fracture: retry budget exhausted without hitting target fraction");

    FractureResult result;
    result.primitives = prims;
    result.removed_area_fraction = fraction;
    result.seed = seed;

    result.fractured_mesh = extractBitField(
        [&](const Vec3& p) { return fracturedOccupancy(occ, prims, p); }, cfg.cube,
        cfg.mc_resolution);
    result.restoration_mesh = extractBitField(
        [&](const Vec3& p) { return restorationOccupancy(occ, prims, p); }, cfg.cube,
        cfg.mc_resolution);

    // Labeled fracture-surface points: on the perturbed primitive boundary,
    // strictly inside the complete shape.
    {
        Rng prng(deriveSeed(seed, 3));
        size_t attempts = 0, cap = cfg.fracture_points * 200;
        while (result.fracture_surface_points.size() < cfg.fracture_points && attempts++ < cap) {
            const auto& spec =
                prims[prims.size() == 1
                          ? 0
                          : static_cast<size_t>(uniformReal(prng, 0.0,
                                                            static_cast<double>(prims.size())) )
                                % prims.size()];
            Vec3 p = samplePrimitiveSurface(spec, prng);
            // Reject points recaptured by another primitive of the union.
            if (prims.size() > 1) {
                bool insideOther = false;
                for (const auto& other : prims) {
                    if (&other == &spec) continue;
                    if (primitiveOccupancy(other, p)) { insideOther = true; break; }
                }
                if (insideOther) continue;
            }
            if (occ.occupancy(p)) result.fracture_surface_points.push_back(p);
        }
        if (result.fracture_surface_points.size() < 16)
            throw std::runtime_error("fracture: could not sample fracture surface points");
    }

    // Non-fracture points: fresh surface samples of C outside the cut.
    {
        auto fresh = sampleSurface(complete, cfg.nonfracture_points * 2, deriveSeed(seed, 4));
        for (const auto& s : fresh) {
            if (result.nonfracture_surface_points.size() >= cfg.nonfracture_points) break;
            if (!primitiveUnionOccupancy(prims, s.point))
                result.nonfracture_surface_points.push_back(s.point);
        }
    }
    return result;
}

TriMesh voxelRemesh(const TriMesh& mesh, int resolution, int workers) {
    if (resolution < 8) throw std::invalid_argument("voxel_remesh: resolution must be >= 8");
    if (mesh.empty()) throw std::runtime_error("voxel_remesh: empty mesh");

    Aabb box = mesh.bounds();
    double longest = box.extent().maxCoeff();
    if (!(longest > 0)) throw std::runtime_error("voxel_remesh: zero-extent mesh");
    // Pad so at least two lattice layers sit outside the shape and the
    // isosurface closes inside the grid.
    double half = 0.5 * longest * static_cast<double>(resolution - 1) /
                  static_cast<double>(resolution - 6);
    SamplingCube cube(box.center(), half);

    // Watertight inputs admit exact parity occupancy; open meshes fall back
    // to the generalized winding number. Both are thresholded at 0.5.
    FieldGrid grid;
    if (mesh.watertight) {
        MeshOccupancy occ(mesh);
        grid = evaluateGridBatch(
            [&](const std::vector<Vec3>& pts, std::vector<double>& out) {
                for (size_t i = 0; i < pts.size(); ++i)
                    out[i] = static_cast<double>(occ.occupancy(pts[i]));
            },
            cube, resolution, workers);
    } else {
        grid = evaluateGridBatch(
            [&](const std::vector<Vec3>& pts, std::vector<double>& out) {
                for (size_t i = 0; i < pts.size(); ++i)
                    out[i] = generalizedWindingNumber(mesh, pts[i]) > 0.5 ? 1.0 : 0.0;
            },
            cube, resolution, workers);
    }

    bool any = false;
    for (double v : grid.values)
        if (v > 0.5) { any = true; break; }
    if (!any) throw std::runtime_error("voxel_remesh: no closed region");

    TriMesh out = marchingCubes(grid, 0.5);
    if (out.empty()) throw std::runtime_error("voxel_remesh: no closed region");
    return out;
}

void savePointsF32(const std::vector<Vec3>& pts, const fs::path& path) {
    BinWriter w;
    w.put<uint64_t>(pts.size());
    for (const auto& p : pts) {
        w.put<float>(static_cast<float>(p.x));
        w.put<float>(static_cast<float>(p.y));
        w.put<float>(static_cast<float>(p.z));
    }
    atomicWriteFile(path, w.bytes());
}

std::vector<Vec3> loadPointsF32(const fs::path& path) {
    auto bytes = readFileBytes(path);
    BinReader r(bytes);
    auto n = r.get<uint64_t>();
    if (r.remaining() != n * 12) throw std::runtime_error("point file size mismatch: " + path.string());
    std::vector<Vec3> pts(n);
    for (auto& p : pts) {
        p.x = r.get<float>();
        p.y = r.get<float>();
        p.z = r.get<float>();
    }
    return pts;
}

namespace {
json primitiveToJson(const PrimitiveSpec& s) {
    json j;
    j["kind"] = static_cast<int>(s.kind);
    j["center"] = {s.center.x, s.center.y, s.center.z};
    j["radii"] = {s.radii.x, s.radii.y, s.radii.z};
    j["rotation"] = {s.rotation.w, s.rotation.x, s.rotation.y, s.rotation.z};
    j["noise_amplitude"] = s.noise_amplitude;
    j["noise_seed"] = s.noise_seed;
    return j;
}

PrimitiveSpec primitiveFromJson(const json& j) {
    PrimitiveSpec s;
    s.kind = static_cast<PrimitiveKind>(j.at("kind").get<int>());
    auto c = j.at("center");
    s.center = {c[0], c[1], c[2]};
    auto r = j.at("radii");
    s.radii = {r[0], r[1], r[2]};
    auto q = j.at("rotation");
    s.rotation = {q[0], q[1], q[2], q[3]};
    s.noise_amplitude = j.at("noise_amplitude");
    s.noise_seed = j.at("noise_seed");
    return s;
}
}  // namespace

void saveFractureResult(const FractureResult& fr, const fs::path& dir) {
    fs::create_directories(dir);
    saveMesh(fr.fractured_mesh, dir / "fractured.ply");
    saveMesh(fr.restoration_mesh, dir / "restoration.ply");
    savePointsF32(fr.fracture_surface_points, dir / "fracture_points.bin");
    savePointsF32(fr.nonfracture_surface_points, dir / "nonfracture_points.bin");
    json meta;
    meta["removed_area_fraction"] = fr.removed_area_fraction;
    meta["seed"] = fr.seed;
    meta["primitives"] = json::array();
    for (const auto& p : fr.primitives) meta["primitives"].push_back(primitiveToJson(p));
    atomicWriteFile(dir / "fracture.json", meta.dump(2) + "\n");
}

FractureResult loadFractureResult(const fs::path& dir) {
    FractureResult fr;
    fr.fractured_mesh = loadMesh(dir / "fractured.ply");
    fr.restoration_mesh = loadMesh(dir / "restoration.ply");
    fr.fracture_surface_points = loadPointsF32(dir / "fracture_points.bin");
    fr.nonfracture_surface_points = loadPointsF32(dir / "nonfracture_points.bin");
    json meta = json::parse(readFileText(dir / "fracture.json"));
    fr.removed_area_fraction = meta.at("removed_area_fraction");
    fr.seed = meta.at("seed");
    for (const auto& p : meta.at("primitives")) fr.primitives.push_back(primitiveFromJson(p));
    return fr;
}

}  // namespace mendkit
