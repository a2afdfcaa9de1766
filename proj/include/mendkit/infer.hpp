#pragma once

#include <string>
#include <vector>

#include "mendkit/net.hpp"
#include "mendkit/sampleset.hpp"

namespace mendkit {

// Penalty combinations selectable at inference.
enum class PenaltyMode : uint8_t {
    None, Ner, Prox, Nerp, Proxp, NerProx, NerProxp, NerpProx
};
PenaltyMode parsePenaltyMode(const std::string& name);
std::string penaltyModeName(PenaltyMode mode);

struct InferConfig {
    PenaltyMode mode = PenaltyMode::NerProx;
    double lambda_ner = 1e-5;
    double lambda_prox = 5e-3;
    double lambda_reg = 1e-4;
    int iterations = 800;
    int restarts = 2;
    double lr = 5e-3;
    double init_sigma = 0.01;
    size_t points_per_iter = 8192;
    uint64_t seed = 7;
    int workers = 0;

    void validate() const;
};

// The only shape evidence inference may read: probe points and their
// fractured-shape occupancy bits. Ground-truth complete/break/restoration
// bits never cross this boundary.
struct FracturedObservation {
    std::string shape_id;
    std::vector<float> points;  // 3N
    std::vector<uint8_t> occ_f;  // packed bits

    size_t size() const { return points.size() / 3; }
    static FracturedObservation fromSampleSet(const SampleSet& set);
};

// Penalty values on raw occupancy vectors. Per-point values are clamped to
// [kLogEps, 1] before any log or mean, which keeps the mean-form penalties
// and their per-point variants Jensen-ordered for every input.
double penaltyNerValues(const std::vector<double>& restorationOcc);
double penaltyNerpValues(const std::vector<double>& restorationOcc);
double penaltyProxValues(const std::vector<double>& completeOcc, const std::vector<uint8_t>& occF);
double penaltyProxpValues(const std::vector<double>& completeOcc, const std::vector<uint8_t>& occF);

// Model-facing forms; points are probed with the frozen networks.
double penaltyNer(const AutodecoderModel& model, const Vec& z_c, const Vec& z_b, const Mat& xyz);
double penaltyNerp(const AutodecoderModel& model, const Vec& z_c, const Vec& z_b, const Mat& xyz);
double penaltyProx(const AutodecoderModel& model, const Vec& z_c, const Mat& xyz,
                   const std::vector<uint8_t>& occF);
double penaltyProxp(const AutodecoderModel& model, const Vec& z_c, const Mat& xyz,
                    const std::vector<uint8_t>& occF);

struct InferTraceRow {
    int iteration = 0;
    double l_f = 0, l_reg = 0, l_ner = 0, l_prox = 0, l_nerp = 0, l_proxp = 0;
    double total = 0;
};

struct InferResult {
    Vec z_c, z_b;
    double final_loss = 0.0;
    int best_restart = 0;
    std::vector<std::vector<InferTraceRow>> traces;  // per restart
    // Smallest (nerp - ner) over every batch both penalties were evaluated
    // on; Jensen ordering makes this >= 0 up to rounding.
    double min_jensen_gap = 1e300;
};

// Estimates latent codes for a novel fractured shape by gradient descent on
// the augmented inference loss; network weights stay frozen. Runs `restarts`
// seeded initializations in parallel and returns the lowest final loss.
InferResult inferCodes(const AutodecoderModel& model, const FracturedObservation& obs,
                       const InferConfig& cfg);

std::string inferResultJson(const InferResult& result, const InferConfig& cfg,
                            const std::string& shape_id);

}  // namespace mendkit
