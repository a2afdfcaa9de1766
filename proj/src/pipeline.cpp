#include "mendkit/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mendkit/binio.hpp"
#include "mendkit/hash.hpp"
#include "mendkit/reconstruct.hpp"

namespace mendkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Section reader that rejects unknown keys.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {}

    template <typename T>
    void read(const char* key, T& out) {
        if (j_.contains(key)) out = j_.at(key).get<T>();
        seen_.insert(key);
    }
    void readPath(const char* key, fs::path& out) {
        std::string s = out.string();
        read(key, s);
        out = s;
    }
    void markSeen(const char* key) { seen_.insert(key); }
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw std::runtime_error("config: unknown key '" + it.key() + "' in section '" +
                                         name_ + "'");
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

json sectionOrEmpty(const json& j, const char* key) {
    return j.contains(key) ? j.at(key) : json::object();
}

}  // namespace

RunConfig RunConfig::fromJsonText(const std::string& text) {
    json j = json::parse(text);
    RunConfig cfg;

    Section top(j, "top");
    top.read("seed", cfg.seed);
    top.read("workers", cfg.workers);
    std::string out = cfg.output_root.string();
    top.read("output_root", out);
    cfg.output_root = out;
    for (const char* k : {"data", "fracture", "sampling", "model", "train", "infer",
                          "reconstruct", "eval"})
        top.markSeen(k);
    top.finish();

    {
        Section s(sectionOrEmpty(j, "data"), "data");
        s.readPath("mesh_dir", cfg.mesh_dir);
        s.read("remesh", cfg.remesh);
        s.read("remesh_resolution", cfg.remesh_resolution);
        s.finish();
    }
    {
        Section s(sectionOrEmpty(j, "fracture"), "fracture");
        s.read("multiplicity", cfg.fracture_multiplicity);
        s.read("target_min", cfg.fracture.target_min);
        s.read("target_max", cfg.fracture.target_max);
        s.read("retry_budget", cfg.fracture.retry_budget);
        s.read("noise_amplitude", cfg.fracture.noise_amplitude);
        s.read("area_samples", cfg.fracture.area_samples);
        s.read("fracture_points", cfg.fracture.fracture_points);
        s.read("nonfracture_points", cfg.fracture.nonfracture_points);
        s.read("mc_resolution", cfg.fracture.mc_resolution);
        s.finish();
    }
    {
        Section s(sectionOrEmpty(j, "sampling"), "sampling");
        s.read("uniform", cfg.sampling.counts.uniform);
        s.read("near_coarse", cfg.sampling.counts.near_coarse);
        s.read("near_fine", cfg.sampling.counts.near_fine);
        s.read("sigma_coarse", cfg.sampling.sigma_coarse);
        s.read("sigma_fine", cfg.sampling.sigma_fine);
        s.read("max_drop_rate", cfg.sampling.max_drop_rate);
        double half = cfg.sampling.cube.half_extent;
        s.read("cube_half_extent", half);
        cfg.sampling.cube = SamplingCube({0, 0, 0}, half);
        s.finish();
    }
    {
        Section s(sectionOrEmpty(j, "model"), "model");
        s.read("latent_complete", cfg.fcfg.latent_dim);
        s.read("latent_break", cfg.gcfg.latent_dim);
        int width = cfg.fcfg.hidden_width, depth = cfg.fcfg.depth, skip = cfg.fcfg.skip_layer;
        s.read("width", width);
        s.read("depth", depth);
        s.read("skip_layer", skip);
        cfg.fcfg.hidden_width = cfg.gcfg.hidden_width = width;
        cfg.fcfg.depth = cfg.gcfg.depth = depth;
        cfg.fcfg.skip_layer = cfg.gcfg.skip_layer = skip;
        s.finish();
        cfg.fcfg.validate();
        cfg.gcfg.validate();
    }
    {
        Section s(sectionOrEmpty(j, "train"), "train");
        s.read("epochs", cfg.train.epochs);
        s.read("steps_per_epoch", cfg.train.steps_per_epoch);
        s.read("batch_shapes", cfg.train.batch_shapes);
        s.read("points_per_shape", cfg.train.points_per_shape);
        s.read("lr_weights", cfg.train.lr_weights);
        s.read("lr_codes", cfg.train.lr_codes);
        s.read("lambda_reg", cfg.train.lambda_reg);
        s.read("code_init_sigma", cfg.train.code_init_sigma);
        s.read("use_f32", cfg.train.use_f32);
        s.read("checkpoint_every", cfg.train.checkpoint_every);
        s.read("stop_when_lf_below", cfg.train.stop_when_lf_below);
        s.finish();
    }
    {
        Section s(sectionOrEmpty(j, "infer"), "infer");
        std::string mode = penaltyModeName(cfg.infer.mode);
        s.read("penalty_mode", mode);
        cfg.infer.mode = parsePenaltyMode(mode);
        s.read("lambda_ner", cfg.infer.lambda_ner);
        s.read("lambda_prox", cfg.infer.lambda_prox);
        s.read("lambda_reg", cfg.infer.lambda_reg);
        s.read("iterations", cfg.infer.iterations);
        s.read("restarts", cfg.infer.restarts);
        s.read("lr", cfg.infer.lr);
        s.read("init_sigma", cfg.infer.init_sigma);
        s.read("points_per_iter", cfg.infer.points_per_iter);
        s.finish();
    }
    {
        Section s(sectionOrEmpty(j, "reconstruct"), "reconstruct");
        s.read("resolution", cfg.reconstruct_resolution);
        s.finish();
    }
    {
        Section s(sectionOrEmpty(j, "eval"), "eval");
        s.read("eta", cfg.eval_eta);
        s.read("samples", cfg.eval_samples);
        s.finish();
    }

    // Stage seeds and worker counts descend from the globals.
    cfg.train.seed = deriveSeed(cfg.seed, 1);
    cfg.train.workers = cfg.workers;
    cfg.infer.seed = deriveSeed(cfg.seed, 2);
    cfg.infer.workers = cfg.workers;
    cfg.fracture.cube = cfg.sampling.cube;
    return cfg;
}

RunConfig RunConfig::fromFile(const fs::path& path) {
    return fromJsonText(readFileText(path));
}

std::string RunConfig::resolvedJson() const {
    json j;
    j["seed"] = seed;
    j["workers"] = workers;
    j["output_root"] = output_root.string();
    j["data"] = {{"mesh_dir", mesh_dir.string()},
                 {"remesh", remesh},
                 {"remesh_resolution", remesh_resolution}};
    j["fracture"] = {{"multiplicity", fracture_multiplicity},
                     {"target_min", fracture.target_min},
                     {"target_max", fracture.target_max},
                     {"retry_budget", fracture.retry_budget},
                     {"noise_amplitude", fracture.noise_amplitude},
                     {"area_samples", fracture.area_samples},
                     {"fracture_points", fracture.fracture_points},
                     {"nonfracture_points", fracture.nonfracture_points},
                     {"mc_resolution", fracture.mc_resolution}};
    j["sampling"] = {{"uniform", sampling.counts.uniform},
                     {"near_coarse", sampling.counts.near_coarse},
                     {"near_fine", sampling.counts.near_fine},
                     {"sigma_coarse", sampling.sigma_coarse},
                     {"sigma_fine", sampling.sigma_fine},
                     {"max_drop_rate", sampling.max_drop_rate},
                     {"cube_half_extent", sampling.cube.half_extent}};
    j["model"] = {{"latent_complete", fcfg.latent_dim},
                  {"latent_break", gcfg.latent_dim},
                  {"width", fcfg.hidden_width},
                  {"depth", fcfg.depth},
                  {"skip_layer", fcfg.skip_layer}};
    j["train"] = {{"epochs", train.epochs},
                  {"steps_per_epoch", train.steps_per_epoch},
                  {"batch_shapes", train.batch_shapes},
                  {"points_per_shape", train.points_per_shape},
                  {"lr_weights", train.lr_weights},
                  {"lr_codes", train.lr_codes},
                  {"lambda_reg", train.lambda_reg},
                  {"code_init_sigma", train.code_init_sigma},
                  {"use_f32", train.use_f32},
                  {"checkpoint_every", train.checkpoint_every},
                  {"stop_when_lf_below", train.stop_when_lf_below}};
    j["infer"] = {{"penalty_mode", penaltyModeName(infer.mode)},
                  {"lambda_ner", infer.lambda_ner},
                  {"lambda_prox", infer.lambda_prox},
                  {"lambda_reg", infer.lambda_reg},
                  {"iterations", infer.iterations},
                  {"restarts", infer.restarts},
                  {"lr", infer.lr},
                  {"init_sigma", infer.init_sigma},
                  {"points_per_iter", infer.points_per_iter}};
    j["reconstruct"] = {{"resolution", reconstruct_resolution}};
    j["eval"] = {{"eta", eval_eta}, {"samples", eval_samples}};
    return j.dump(2) + "\n";
}

uint64_t RunConfig::contentHash() const { return fnv1a64(resolvedJson()); }

namespace {

void writeStageConfig(const RunConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    atomicWriteFile(dir / "resolved_config.json", cfg.resolvedJson());
    atomicWriteFile(dir / "config_hash", toHex(cfg.contentHash()) + "\n");
}

bool stageUpToDate(const RunConfig& cfg, const fs::path& dir, const char* doneFile) {
    fs::path hashFile = dir / "config_hash";
    if (!fs::exists(hashFile) || !fs::exists(dir / doneFile)) return false;
    std::string stored = readFileText(hashFile);
    while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
    return stored == toHex(cfg.contentHash());
}

void warnOnStaleUpstream(const RunConfig& cfg, const fs::path& upstream) {
    fs::path hashFile = upstream / "config_hash";
    if (!fs::exists(hashFile)) return;
    std::string stored = readFileText(hashFile);
    while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
    if (stored != toHex(cfg.contentHash()))
        std::fprintf(stderr, "[warn] %s was produced with a different config (stale hash)\n",
                     upstream.string().c_str());
}

void saveManifest(const std::vector<ShapeEntry>& entries, const fs::path& dir) {
    json j = json::array();
    for (const auto& e : entries)
        j.push_back({{"shape_id", e.shape_id},
                     {"class", e.shape_class},
                     {"source", e.source_file},
                     {"status", e.status},
                     {"removed_area_fraction", e.removed_area_fraction}});
    atomicWriteFile(dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace

std::vector<ShapeEntry> loadManifest(const fs::path& stageDir) {
    json j = json::parse(readFileText(stageDir / "manifest.json"));
    std::vector<ShapeEntry> entries;
    for (const auto& e : j)
        entries.push_back({e.at("shape_id"), e.at("class"), e.at("source"), e.at("status"),
                           e.at("removed_area_fraction")});
    return entries;
}

int cmdFracture(const RunConfig& cfg) {
    if (cfg.mesh_dir.empty() || !fs::exists(cfg.mesh_dir))
        throw std::runtime_error("fracture: mesh_dir does not exist: " + cfg.mesh_dir.string());
    fs::path stage = cfg.stageDir("fracture");
    if (stageUpToDate(cfg, stage, "manifest.json")) {
        std::fprintf(stderr, "[fracture] up-to-date, skipping\n");
        return 0;
    }

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(cfg.mesh_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        if (ext == ".obj" || ext == ".ply") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("fracture: no meshes in " + cfg.mesh_dir.string());

    std::vector<ShapeEntry> manifest;
    int failures = 0;
    for (size_t fi = 0; fi < files.size(); ++fi) {
        const fs::path& file = files[fi];
        fs::path rel = fs::relative(file, cfg.mesh_dir);
        std::string cls = rel.has_parent_path() ? rel.parent_path().begin()->string() : "all";
        for (int k = 0; k < cfg.fracture_multiplicity; ++k) {
            ShapeEntry entry;
            entry.shape_class = cls;
            entry.source_file = file.string();
            entry.shape_id = cls + "_" + file.stem().string() + "_f" + std::to_string(k);
            try {
                TriMesh mesh = loadMesh(file);
                if (!mesh.watertight) {
                    if (cfg.remesh) {
                        mesh = voxelRemesh(mesh, cfg.remesh_resolution, cfg.workers);
                    } else {
                        entry.status = "skipped: not watertight (rerun with --remesh)";
                        manifest.push_back(entry);
                        ++failures;
                        continue;
                    }
                }
                auto [normalized, tf] = normalizeUnitCube(mesh);
                FractureResult fr =
                    fracture(normalized, deriveSeed(cfg.seed, fnv1a64(entry.shape_id)),
                             cfg.fracture);
                fs::path dir = stage / entry.shape_id;
                saveFractureResult(fr, dir);
                saveMesh(normalized, dir / "complete.ply");
                json tfj = {{"scale", tf.scale},
                            {"translation", {tf.translation.x, tf.translation.y,
                                             tf.translation.z}}};
                atomicWriteFile(dir / "normalization.json", tfj.dump(2) + "\n");
                entry.status = "ok";
                entry.removed_area_fraction = fr.removed_area_fraction;
            } catch (const std::exception& e) {
                entry.status = std::string("failed: ") + e.what();
                ++failures;
            }
            manifest.push_back(entry);
            std::fprintf(stderr, "[fracture] %s: %s\n", entry.shape_id.c_str(),
                         entry.status.c_str());
        }
    }
    std::sort(manifest.begin(), manifest.end(),
              [](const ShapeEntry& a, const ShapeEntry& b) { return a.shape_id < b.shape_id; });
    writeStageConfig(cfg, stage);
    saveManifest(manifest, stage);
    return failures;
}

namespace {

// Interior samples of the fractured shape used to orient the break surface.
std::vector<Vec3> fracturedInteriorSamples(const MeshOccupancy& occ,
                                           const std::vector<PrimitiveSpec>& prims,
                                           const SamplingCube& cube, size_t want, uint64_t seed) {
    std::vector<Vec3> out;
    Rng rng(seed);
    size_t attempts = 0, cap = want * 400;
    while (out.size() < want && attempts++ < cap) {
        Vec3 p{uniformReal(rng, -1, 1), uniformReal(rng, -1, 1), uniformReal(rng, -1, 1)};
        p = cube.center + p * cube.half_extent;
        if (occ.occupancy(p) && !primitiveUnionOccupancy(prims, p)) out.push_back(p);
    }
    if (out.size() < 16)
        throw std::runtime_error("could not draw fractured interior samples for orientation");
    return out;
}

}  // namespace

int cmdSample(const RunConfig& cfg) {
    fs::path upstream = cfg.stageDir("fracture");
    if (!fs::exists(upstream / "manifest.json"))
        throw std::runtime_error("sample: missing fracture stage (run `mendkit fracture` first)");
    warnOnStaleUpstream(cfg, upstream);
    fs::path stage = cfg.stageDir("sample");
    if (stageUpToDate(cfg, stage, "manifest.json")) {
        std::fprintf(stderr, "[sample] up-to-date, skipping\n");
        return 0;
    }

    auto manifest = loadManifest(upstream);
    std::vector<ShapeEntry> outManifest;
    int failures = 0;
    for (const auto& entry : manifest) {
        if (entry.status != "ok") continue;
        ShapeEntry out = entry;
        try {
            fs::path dir = upstream / entry.shape_id;
            TriMesh complete = loadMesh(dir / "complete.ply");
            FractureResult fr = loadFractureResult(dir);
            MeshOccupancy occ(complete);
            auto orientSamples = fracturedInteriorSamples(
                occ, fr.primitives, cfg.sampling.cube, 2048,
                deriveSeed(cfg.seed, fnv1a64(entry.shape_id + "/orient")));
            TpsSurface tps = fitBreakSurface(fr.fracture_surface_points, orientSamples);

            SampleSet set = buildSampleSet(complete, fr, tps, cfg.sampling,
                                           deriveSeed(cfg.seed, fnv1a64(entry.shape_id + "/s")),
                                           cfg.workers);
            set.shape_id = entry.shape_id;
            saveSampleSet(set, stage / (entry.shape_id + ".dmss"));
            saveSampleSetMeta(set, cfg.sampling, tps, stage / (entry.shape_id + ".meta.json"));
            out.status = "ok";
            std::fprintf(stderr, "[sample] %s: %zu points, drop rate %.3f%%\n",
                         entry.shape_id.c_str(), set.size(), 100.0 * set.drop_rate);
        } catch (const std::exception& e) {
            out.status = std::string("failed: ") + e.what();
            ++failures;
            std::fprintf(stderr, "[sample] %s: %s\n", entry.shape_id.c_str(), out.status.c_str());
        }
        outManifest.push_back(out);
    }
    if (outManifest.empty()) throw std::runtime_error("sample: no fractured shapes to sample");
    writeStageConfig(cfg, stage);
    saveManifest(outManifest, stage);
    return failures;
}

namespace {
std::vector<SampleSet> loadCorpus(const fs::path& sampleStage, std::vector<std::string>* ids) {
    auto manifest = loadManifest(sampleStage);
    std::vector<SampleSet> corpus;
    for (const auto& e : manifest) {
        if (e.status != "ok") continue;
        SampleSet set = loadSampleSet(sampleStage / (e.shape_id + ".dmss"));
        set.shape_id = e.shape_id;
        corpus.push_back(std::move(set));
        if (ids) ids->push_back(e.shape_id);
    }
    if (corpus.empty()) throw std::runtime_error("no sample sets found in " + sampleStage.string());
    return corpus;
}
}  // namespace

int cmdTrain(const RunConfig& cfg) {
    fs::path upstream = cfg.stageDir("sample");
    if (!fs::exists(upstream / "manifest.json"))
        throw std::runtime_error("train: missing sample stage (run `mendkit sample` first)");
    warnOnStaleUpstream(cfg, upstream);
    fs::path stage = cfg.stageDir("train");
    if (stageUpToDate(cfg, stage, "checkpoint.dmck")) {
        std::fprintf(stderr, "[train] up-to-date, skipping\n");
        return 0;
    }

    std::vector<std::string> ids;
    auto corpus = loadCorpus(upstream, &ids);
    TrainResult result = train(corpus, cfg.fcfg, cfg.gcfg, cfg.train, &stage);

    json idx = json::array();
    for (size_t i = 0; i < ids.size(); ++i) idx.push_back({{"row", i}, {"shape_id", ids[i]}});
    atomicWriteFile(stage / "shape_index.json", idx.dump(2) + "\n");
    writeStageConfig(cfg, stage);
    std::fprintf(stderr, "[train] %zu shapes, %zu epochs, final loss %.4f\n", corpus.size(),
                 result.log.size(), result.log.empty() ? 0.0 : result.log.back().mean_total);
    return 0;
}

int cmdInfer(const RunConfig& cfg, const std::vector<PenaltyMode>& modes) {
    fs::path sampleStage = cfg.stageDir("sample");
    fs::path trainStage = cfg.stageDir("train");
    if (!fs::exists(trainStage / "checkpoint.dmck"))
        throw std::runtime_error("infer: missing checkpoint (run `mendkit train` first)");
    warnOnStaleUpstream(cfg, trainStage);

    AutodecoderModel model = loadCheckpoint(trainStage / "checkpoint.dmck", nullptr,
                                            cfg.fcfg.latent_dim, cfg.gcfg.latent_dim);
    std::vector<std::string> ids;
    auto corpus = loadCorpus(sampleStage, &ids);

    int failures = 0;
    for (PenaltyMode mode : modes) {
        InferConfig icfg = cfg.infer;
        icfg.mode = mode;
        fs::path stage = cfg.stageDir("infer") / penaltyModeName(mode);
        fs::create_directories(stage);
        for (size_t i = 0; i < corpus.size(); ++i) {
            try {
                auto obs = FracturedObservation::fromSampleSet(corpus[i]);
                icfg.seed = deriveSeed(cfg.infer.seed, fnv1a64(ids[i]));
                InferResult result = inferCodes(model, obs, icfg);
                atomicWriteFile(stage / (ids[i] + ".json"),
                                inferResultJson(result, icfg, ids[i]));
                std::fprintf(stderr, "[infer %s] %s: loss %.4f (restart %d)\n",
                             penaltyModeName(mode).c_str(), ids[i].c_str(), result.final_loss,
                             result.best_restart);
            } catch (const std::exception& e) {
                ++failures;
                std::fprintf(stderr, "[infer %s] %s: failed: %s\n",
                             penaltyModeName(mode).c_str(), ids[i].c_str(), e.what());
            }
        }
        writeStageConfig(cfg, stage);
    }
    return failures;
}

namespace {
Vec jsonToVec(const json& arr) {
    Vec v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i];
    return v;
}
}  // namespace

int cmdReconstruct(const RunConfig& cfg, const std::vector<PenaltyMode>& modes) {
    fs::path trainStage = cfg.stageDir("train");
    AutodecoderModel model = loadCheckpoint(trainStage / "checkpoint.dmck", nullptr,
                                            cfg.fcfg.latent_dim, cfg.gcfg.latent_dim);
    int failures = 0;
    for (PenaltyMode mode : modes) {
        fs::path inferStage = cfg.stageDir("infer") / penaltyModeName(mode);
        if (!fs::exists(inferStage))
            throw std::runtime_error("reconstruct: missing inference results for mode " +
                                     penaltyModeName(mode));
        fs::path stage = cfg.stageDir("reconstruct") / penaltyModeName(mode);
        fs::create_directories(stage);
        std::vector<fs::path> results;
        for (const auto& e : fs::directory_iterator(inferStage))
            if (e.path().extension() == ".json" &&
                e.path().filename() != "resolved_config.json")
                results.push_back(e.path());
        std::sort(results.begin(), results.end());
        for (const auto& rf : results) {
            std::string id = rf.stem().string();
            try {
                json j = json::parse(readFileText(rf));
                Vec zc = jsonToVec(j.at("z_c"));
                Vec zb = jsonToVec(j.at("z_b"));
                TriMesh restoration =
                    reconstructRestoration(model, zc, zb, cfg.sampling.cube,
                                           cfg.reconstruct_resolution, cfg.workers);
                json meta = {{"shape_id", id},
                             {"non_empty", !restoration.empty()},
                             {"triangles", restoration.triangles.size()}};
                atomicWriteFile(stage / (id + ".status.json"), meta.dump(2) + "\n");
                if (!restoration.empty()) saveMesh(restoration, stage / (id + ".ply"));
                std::fprintf(stderr, "[reconstruct %s] %s: %zu triangles\n",
                             penaltyModeName(mode).c_str(), id.c_str(),
                             restoration.triangles.size());
            } catch (const std::exception& e) {
                ++failures;
                std::fprintf(stderr, "[reconstruct %s] %s: failed: %s\n",
                             penaltyModeName(mode).c_str(), id.c_str(), e.what());
            }
        }
        writeStageConfig(cfg, stage);
    }
    return failures;
}

int cmdEval(const RunConfig& cfg, const std::vector<PenaltyMode>& modes) {
    fs::path fractureStage = cfg.stageDir("fracture");
    auto manifest = loadManifest(fractureStage);
    json comparison = json::object();
    int failures = 0;

    for (PenaltyMode mode : modes) {
        fs::path predStage = cfg.stageDir("reconstruct") / penaltyModeName(mode);
        if (!fs::exists(predStage))
            throw std::runtime_error("eval: missing reconstructions for mode " +
                                     penaltyModeName(mode));
        fs::path stage = cfg.stageDir("eval") / penaltyModeName(mode);
        fs::create_directories(stage);

        EvalReport report;
        report.config_hash = toHex(cfg.contentHash());
        std::vector<std::string> missing;
        for (const auto& entry : manifest) {
            if (entry.status != "ok") continue;
            fs::path statusFile = predStage / (entry.shape_id + ".status.json");
            if (!fs::exists(statusFile)) {
                missing.push_back(entry.shape_id);
                continue;
            }
            EvalRow row;
            row.shape_id = entry.shape_id;
            row.shape_class = entry.shape_class;
            row.eta = cfg.eval_eta;
            row.n = cfg.eval_samples;
            row.seed = deriveSeed(cfg.seed, fnv1a64(entry.shape_id + "/eval"));
            json status = json::parse(readFileText(statusFile));
            row.non_empty = status.at("non_empty").get<bool>();
            if (row.non_empty) {
                try {
                    TriMesh pred = loadMesh(predStage / (entry.shape_id + ".ply"));
                    TriMesh gt = loadMesh(fractureStage / entry.shape_id / "restoration.ply");
                    auto nonfracture =
                        loadPointsF32(fractureStage / entry.shape_id / "nonfracture_points.bin");
                    row.cd = chamfer(pred, gt, cfg.eval_samples, row.seed);
                    row.nfre = nfre(pred, gt, nonfracture, cfg.eval_eta, cfg.eval_samples,
                                    row.seed);
                } catch (const std::exception& e) {
                    ++failures;
                    std::fprintf(stderr, "[eval %s] %s: failed: %s\n",
                                 penaltyModeName(mode).c_str(), entry.shape_id.c_str(), e.what());
                    continue;
                }
            }
            report.rows.push_back(row);
        }
        report.aggregate();
        atomicWriteFile(stage / "report.json", report.toJson());
        atomicWriteFile(stage / "report.txt", report.toTable());
        if (!missing.empty()) {
            json mj = missing;
            atomicWriteFile(stage / "missing.json", mj.dump(2) + "\n");
            std::fprintf(stderr, "[eval %s] %zu shapes missing predictions\n",
                         penaltyModeName(mode).c_str(), missing.size());
        }
        writeStageConfig(cfg, stage);
        comparison[penaltyModeName(mode)] = {{"ne_percent", report.ne_percent},
                                             {"mean_cd", report.mean_cd},
                                             {"mean_nfre", report.mean_nfre}};
        std::fprintf(stderr, "[eval %s] NE%%=%.2f mean CD=%.6g mean NFRE=%.6g\n",
                     penaltyModeName(mode).c_str(), report.ne_percent, report.mean_cd,
                     report.mean_nfre);
    }

    if (modes.size() > 1) {
        fs::path cmpDir = cfg.stageDir("eval");
        atomicWriteFile(cmpDir / "comparison.json", comparison.dump(2) + "\n");
        std::ostringstream table;
        table << "mode          NE%       mean CD     mean NFRE\n";
        for (auto it = comparison.begin(); it != comparison.end(); ++it) {
            char line[160];
            std::snprintf(line, sizeof line, "%-12s %-8.2f %-11.6g %-11.6g\n", it.key().c_str(),
                          it.value()["ne_percent"].get<double>(),
                          it.value()["mean_cd"].get<double>(),
                          it.value()["mean_nfre"].get<double>());
            table << line;
        }
        atomicWriteFile(cmpDir / "comparison.txt", table.str());
    }
    return failures;
}

std::vector<SuiteReport> runSelftestSuites(uint64_t seed) {
    std::vector<SuiteReport> reports;
    reports.push_back(suiteTnormPartition(200000, 1e-12, deriveSeed(seed, 1)));
    reports.push_back(suiteGradcheck(3, 64, 3, MlpConfig{16, 32, 3, 1}, MlpConfig{8, 32, 3, 1},
                                     1e-5, 1e-4, deriveSeed(seed, 2)));
    reports.push_back(suiteTpsInterpolation(50, 1e-8, deriveSeed(seed, 3)));
    reports.push_back(suiteMarchingCubes(48, 64, 20000, deriveSeed(seed, 4)));
    reports.push_back(suiteMetricOracles(4, 1500, deriveSeed(seed, 5)));
    return reports;
}

std::vector<SuiteReport> runGradcheckSuites(uint64_t seed) {
    std::vector<SuiteReport> reports;
    reports.push_back(suiteGradcheck(5, 100, 4, MlpConfig{128, 128, 4, 2},
                                     MlpConfig{32, 128, 4, 2}, 1e-5, 1e-4, deriveSeed(seed, 2)));
    return reports;
}

}  // namespace mendkit
