#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "mendkit/net.hpp"
#include "mendkit/sampleset.hpp"

namespace mendkit {

struct TrainConfig {
    int epochs = 100;
    int steps_per_epoch = 0;  // 0: ceil(corpus / batch_shapes)
    int batch_shapes = 16;
    int points_per_shape = 4096;
    double lr_weights = 5e-4;
    double lr_codes = 1e-3;
    double lambda_reg = 1e-4;
    double code_init_sigma = 0.01;
    uint64_t seed = 1;
    bool use_f32 = false;  // 64-bit math by default; 32-bit trades determinism for speed
    int workers = 0;
    int checkpoint_every = 0;  // epochs between snapshots; 0 = final only
    double divergence_factor = 10.0;
    double stop_when_lf_below = 0.0;  // early stop on smoothed L_F; 0 disables

    void validate() const;
    uint64_t contentHash() const;
};

struct LossTerms {
    double l_f = 0, l_c = 0, l_b = 0, l_r = 0, l_reg = 0;
    double weighted(double lambdaReg) const { return l_f + l_c + l_b + l_r + lambdaReg * l_reg; }
};

// Batch rows of one shape's sample set gathered into dense arrays.
struct ShapeBatch {
    Mat xyz;               // B x 3
    Mat y_f, y_c, y_b, y_r;  // B x 1 in {0,1}
};
ShapeBatch gatherBatch(const SampleSet& set, const std::vector<uint64_t>& rows);

// The four reconstruction terms plus the code regularizer for one shape batch.
LossTerms lossTerms(const AutodecoderModel& model, const Vec& z_c, const Vec& z_b,
                    const ShapeBatch& batch);

struct EpochRecord {
    int epoch = 0;
    LossTerms mean_terms;
    double mean_total = 0;
    double lr_weights = 0, lr_codes = 0;
    double wall_seconds = 0;
};

struct TrainResult {
    AutodecoderModel model;
    AdamState adam;
    std::vector<EpochRecord> log;
};

// Joint optimization of network weights and per-shape latent codes with
// adaptive-moment gradient descent. Deterministic for a fixed seed in 64-bit
// mode regardless of worker count (fixed batch partition, ordered reduction).
TrainResult train(const std::vector<SampleSet>& corpus, const MlpConfig& fcfg,
                  const MlpConfig& gcfg, const TrainConfig& cfg,
                  const std::filesystem::path* out_dir = nullptr);

// One Adam update; per-matrix moments, shared step count t (1-based).
void adamUpdate(Mat& param, Mat& m, Mat& v, const Mat& grad, double lr, int64_t t);

std::string epochRecordJson(const EpochRecord& rec);

}  // namespace mendkit
