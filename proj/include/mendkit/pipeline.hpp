#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mendkit/fracture.hpp"
#include "mendkit/infer.hpp"
#include "mendkit/metrics.hpp"
#include "mendkit/sampleset.hpp"
#include "mendkit/selftest.hpp"
#include "mendkit/train.hpp"

namespace mendkit {

// Resolved run configuration: one section per pipeline stage. Unknown keys in
// the source document are rejected; the resolved document plus content hash
// is written next to every stage's outputs.
struct RunConfig {
    std::filesystem::path mesh_dir;
    std::filesystem::path output_root = "out";
    uint64_t seed = 17;
    int workers = 0;
    bool remesh = false;
    int remesh_resolution = 128;

    int fracture_multiplicity = 1;
    FractureConfig fracture;

    SamplingConfig sampling;

    MlpConfig fcfg{128, 128, 4, 2};
    MlpConfig gcfg{32, 128, 4, 2};

    TrainConfig train;
    InferConfig infer;

    int reconstruct_resolution = 128;

    double eval_eta = 0.02;
    size_t eval_samples = 30000;

    static RunConfig fromJsonText(const std::string& text);
    static RunConfig fromFile(const std::filesystem::path& path);
    std::string resolvedJson() const;
    uint64_t contentHash() const;

    std::filesystem::path stageDir(const std::string& stage) const {
        return output_root / stage;
    }
};

// Per-stage entry points. Each returns the number of per-shape failures
// (scheduled work that was skipped or failed); fatal configuration problems
// throw instead.
int cmdFracture(const RunConfig& cfg);
int cmdSample(const RunConfig& cfg);
int cmdTrain(const RunConfig& cfg);
int cmdInfer(const RunConfig& cfg, const std::vector<PenaltyMode>& modes);
int cmdReconstruct(const RunConfig& cfg, const std::vector<PenaltyMode>& modes);
int cmdEval(const RunConfig& cfg, const std::vector<PenaltyMode>& modes);

std::vector<SuiteReport> runSelftestSuites(uint64_t seed);
std::vector<SuiteReport> runGradcheckSuites(uint64_t seed);

// Manifest row for one fractured shape instance.
struct ShapeEntry {
    std::string shape_id;
    std::string shape_class;
    std::string source_file;
    std::string status;  // "ok" or a skip/failure reason
    double removed_area_fraction = 0.0;
};
std::vector<ShapeEntry> loadManifest(const std::filesystem::path& stageDir);

}  // namespace mendkit
