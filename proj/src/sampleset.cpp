#include "mendkit/sampleset.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "mendkit/binio.hpp"

namespace mendkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr char kMagic[4] = {'D', 'M', 'S', 'S'};
constexpr uint16_t kVersion = 1;

int resolveWorkers(int workers) {
    if (workers > 0) return workers;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}
}  // namespace

SampleSet buildSampleSet(const TriMesh& complete, const FractureResult& fr, const TpsSurface& tps,
                         const SamplingConfig& cfg, uint64_t seed, int workers) {
    if (cfg.counts.total() == 0) throw std::invalid_argument("empty sample request");
    if (!complete.watertight) throw std::runtime_error("build_sample_set: complete mesh not watertight");

    MeshOccupancy occ(complete);

    // Draw the point mix. Near-surface tiers sample the fractured mesh so the
    // break region is densely probed; normal-direction noise is truncated at
    // 3 sigma and points are redrawn until they land inside the cube.
    std::vector<Vec3> pts;
    pts.reserve(cfg.counts.total());
    std::vector<uint32_t> nearTris;  // triangle source for near-surface draws
    {
        Rng rng(deriveSeed(seed, 10));
        for (size_t i = 0; i < cfg.counts.uniform; ++i) {
            Vec3 p{uniformReal(rng, -1, 1), uniformReal(rng, -1, 1), uniformReal(rng, -1, 1)};
            pts.push_back(cfg.cube.center + p * cfg.cube.half_extent);
        }
    }
    auto drawNear = [&](size_t count, double sigma, uint64_t stream) {
        if (count == 0) return;
        Rng rng(deriveSeed(seed, stream));
        auto surf = sampleSurface(fr.fractured_mesh, count, deriveSeed(seed, stream + 1));
        for (size_t i = 0; i < count; ++i) {
            Vec3 base = surf[i].point;
            Vec3 n = fr.fractured_mesh.triangleNormal(surf[i].triangle);
            for (;;) {
                double off = normalReal(rng, 0.0, sigma);
                if (std::fabs(off) > 3.0 * sigma) continue;
                Vec3 p = base + n * off;
                if (cfg.cube.contains(p)) {
                    pts.push_back(p);
                    break;
                }
            }
        }
    };
    drawNear(cfg.counts.near_coarse, cfg.sigma_coarse, 20);
    drawNear(cfg.counts.near_fine, cfg.sigma_fine, 30);

    const size_t total = pts.size();
    std::vector<uint8_t> bitC(total), bitB(total), bitP(total);
    {
        // Read-only queries over preallocated rows: deterministic for any
        // worker count.
        int nw = resolveWorkers(workers);
        auto run = [&](size_t begin, size_t end) {
            for (size_t i = begin; i < end; ++i) {
                bitC[i] = static_cast<uint8_t>(occ.occupancy(pts[i]));
                bitB[i] = static_cast<uint8_t>(breakOccupancy(tps, pts[i]));
                bitP[i] = static_cast<uint8_t>(primitiveUnionOccupancy(fr.primitives, pts[i]));
            }
        };
        if (nw <= 1 || total < 4096) {
            run(0, total);
        } else {
            std::vector<std::thread> threads;
            std::vector<std::exception_ptr> errors(static_cast<size_t>(nw));
            size_t per = (total + nw - 1) / nw;
            for (int w = 0; w < nw; ++w) {
                size_t b = w * per, e = std::min(total, b + per);
                if (b >= e) break;
                threads.emplace_back([&, w, b, e]() {
                    try {
                        run(b, e);
                    } catch (...) {
                        errors[static_cast<size_t>(w)] = std::current_exception();
                    }
                });
            }
            for (auto& t : threads) t.join();
            for (auto& err : errors)
                if (err) std::rethrow_exception(err);
        }
    }

    // A retained point must tell the same fractured/restoration story through
    // the TPS side as through the primitive cut; mismatches are dropped, not
    // relabeled.
    SampleSet set;
    set.shape_id = "";
    set.seed = seed;
    size_t tierStart[4] = {0, cfg.counts.uniform, cfg.counts.uniform + cfg.counts.near_coarse,
                           total};
    size_t kept = 0;
    std::vector<float> outPts;
    outPts.reserve(total * 3);
    std::vector<uint8_t> keepC, keepB;
    keepC.reserve(total);
    keepB.reserve(total);
    for (int tier = 0; tier < 3; ++tier) {
        size_t tierKept = 0;
        for (size_t i = tierStart[tier]; i < tierStart[tier + 1]; ++i) {
            bool consistent = !bitC[i] || (bitB[i] == (bitP[i] ? 0 : 1));
            if (!consistent) continue;
            outPts.push_back(static_cast<float>(pts[i].x));
            outPts.push_back(static_cast<float>(pts[i].y));
            outPts.push_back(static_cast<float>(pts[i].z));
            keepC.push_back(bitC[i]);
            keepB.push_back(bitB[i]);
            ++tierKept;
        }
        set.source_counts[tier] = tierKept;
        kept += tierKept;
    }
    set.drop_rate = total == 0 ? 0.0 : 1.0 - static_cast<double>(kept) / static_cast<double>(total);
    if (set.drop_rate > cfg.max_drop_rate) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "sample drop rate %.2f%% exceeds %.2f%% (TPS/cut disagreement; "
                      "%zu of %zu points dropped)",
                      100.0 * set.drop_rate, 100.0 * cfg.max_drop_rate, total - kept, total);
        throw std::runtime_error(msg);
    }

    set.points = std::move(outPts);
    size_t bytes = (kept + 7) / 8;
    set.occ_c.assign(bytes, 0);
    set.occ_b.assign(bytes, 0);
    set.occ_f.assign(bytes, 0);
    set.occ_r.assign(bytes, 0);
    for (size_t i = 0; i < kept; ++i) {
        int c = keepC[i], b = keepB[i];
        SampleSet::setBit(set.occ_c, i, c);
        SampleSet::setBit(set.occ_b, i, b);
        SampleSet::setBit(set.occ_f, i, c & b);
        SampleSet::setBit(set.occ_r, i, c & (b ? 0 : 1));
    }
    return set;
}

std::vector<uint64_t> subsampleIndices(const SampleSet& set, size_t k, uint64_t seed) {
    const size_t n = set.size();
    if (k > n) throw std::invalid_argument("subsample: k > N");
    std::vector<uint64_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0ull);
    Rng rng(seed);
    // Partial Fisher-Yates: first k entries are the draw.
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + static_cast<size_t>(rng() % (n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

void saveSampleSet(const SampleSet& set, const fs::path& path) {
    BinWriter w;
    w.putBytes(kMagic, 4);
    w.put<uint16_t>(kVersion);
    w.put<uint64_t>(set.size());
    w.putBytes(set.points.data(), set.points.size() * sizeof(float));
    for (const auto* bits : {&set.occ_c, &set.occ_b, &set.occ_f, &set.occ_r})
        w.putBytes(bits->data(), bits->size());
    atomicWriteFile(path, w.bytes());
}

SampleSet loadSampleSet(const fs::path& path) {
    auto bytes = readFileBytes(path);
    BinReader r(bytes);
    char magic[4];
    r.getBytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a sample-set file: " + path.string());
    auto version = r.get<uint16_t>();
    if (version != kVersion) throw std::runtime_error("sample-set version mismatch");
    auto n = r.get<uint64_t>();
    SampleSet set;
    set.points.resize(n * 3);
    r.getBytes(set.points.data(), set.points.size() * sizeof(float));
    size_t bitBytes = (n + 7) / 8;
    for (auto* bits : {&set.occ_c, &set.occ_b, &set.occ_f, &set.occ_r}) {
        bits->resize(bitBytes);
        r.getBytes(bits->data(), bitBytes);
    }
    set.source_counts = {n, 0, 0};  // refined by the sidecar when present
    set.shape_id = path.stem().string();
    return set;
}

void saveSampleSetMeta(const SampleSet& set, const SamplingConfig& cfg, const TpsSurface& tps,
                       const fs::path& path) {
    json j;
    j["shape_id"] = set.shape_id;
    j["seed"] = set.seed;
    j["counts"] = {set.source_counts[0], set.source_counts[1], set.source_counts[2]};
    j["requested_counts"] = {cfg.counts.uniform, cfg.counts.near_coarse, cfg.counts.near_fine};
    j["sigma_coarse"] = cfg.sigma_coarse;
    j["sigma_fine"] = cfg.sigma_fine;
    j["cube_center"] = {cfg.cube.center.x, cfg.cube.center.y, cfg.cube.center.z};
    j["cube_half_extent"] = cfg.cube.half_extent;
    j["drop_rate"] = set.drop_rate;
    j["tps"] = json::parse(tpsToJson(tps));
    atomicWriteFile(path, j.dump(2) + "\n");
}

}  // namespace mendkit
