#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mendkit/autodiff.hpp"
#include "mendkit/core.hpp"

namespace mendkit {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Occupancy MLP: input is the latent code concatenated with the 3D point,
// rectifier hidden layers with one latent+coordinate re-concatenation, and a
// logistic output unit.
struct MlpConfig {
    int latent_dim = 128;
    int hidden_width = 512;
    int depth = 8;       // hidden layers; a final linear layer produces the logit
    int skip_layer = 4;  // 0 disables; otherwise in (0, depth)

    int inputDim() const { return latent_dim + 3; }
    void validate() const;
    // Input width of hidden layer `k` (0-based).
    int layerInputDim(int k) const;
};

struct MlpParams {
    std::vector<Mat> weights;  // depth hidden + 1 output
    std::vector<Mat> biases;   // 1 x out each

    size_t parameterCount() const;
    bool allFinite() const;
};

MlpParams initMlp(const MlpConfig& cfg, uint64_t seed);
MlpParams zeroMlp(const MlpConfig& cfg);

// Batch forward pass without a tape; identical op order to the taped pass.
Vec mlpForward(const MlpConfig& cfg, const MlpParams& params, const Vec& z, const Mat& xyz);

// Single-point occupancy in (0,1); throws on dimension mismatch or
// non-finite output.
double forwardOccupancy(const MlpConfig& cfg, const MlpParams& params, const Vec& z,
                        const Vec3& x);

// Sign pattern of every rectifier preactivation over the batch. Two
// parameter states with equal signatures are connected by a region where the
// network is smooth, which is what central differences require.
std::vector<uint8_t> mlpActivationSignature(const MlpConfig& cfg, const MlpParams& params,
                                            const Vec& z, const Mat& xyz);

// Taped forward: leaves for every parameter and the code. `xyz` enters as a
// constant leaf. Returns node ids needed by loss graphs.
struct TapedMlp {
    std::vector<int> weight_leaves;
    std::vector<int> bias_leaves;
    int code_leaf = -1;
    int output = -1;  // B x 1 occupancy
};
template <typename S>
TapedMlp mlpForwardTaped(ad::Tape<S>& tape, const MlpConfig& cfg, const MlpParams& params,
                         const Vec& z, const Mat& xyz);

// Product T-norm composition of occupancy values.
double composeFracture(double oc, double ob);
double composeRestoration(double oc, double ob);

// Numerically safe binary cross-entropy, probabilities clamped to
// [kLogEps, 1 - kLogEps].
double bce(double p, int y);

// Both occupancy networks plus the training latent-code tables.
struct AutodecoderModel {
    MlpConfig fcfg;  // complete-shape network
    MlpConfig gcfg;  // break-surface network
    MlpParams theta;
    MlpParams phi;
    Mat z_c_table;  // shapes x p
    Mat z_b_table;  // shapes x q
    uint64_t train_config_hash = 0;

    int p() const { return fcfg.latent_dim; }
    int q() const { return gcfg.latent_dim; }
    int shapeCount() const { return static_cast<int>(z_c_table.rows()); }
    void validate() const;
};

AutodecoderModel makeModel(const MlpConfig& fcfg, const MlpConfig& gcfg, int shapes,
                           double codeInitSigma, uint64_t seed);

// Adam moments; code tables keep per-row step counts so rows absent from a
// step stay untouched (including their bias correction).
struct AdamState {
    std::vector<Mat> m, v;  // one pair per parameter matrix, f then g, W then b
    int64_t step = 0;
    Mat code_c_m, code_c_v, code_b_m, code_b_v;
    Eigen::VectorX<int64_t> code_c_steps, code_b_steps;

    static AdamState forModel(const AutodecoderModel& model);
    bool empty() const { return m.empty(); }
};

// "DMCK" checkpoint: configs, parameter blobs (64-bit), latent tables,
// optimizer state, training-config hash, CRC-32 trailer.
void saveCheckpoint(const AutodecoderModel& model, const AdamState* adam,
                    const std::filesystem::path& path);
AutodecoderModel loadCheckpoint(const std::filesystem::path& path, AdamState* adam = nullptr,
                                std::optional<int> expect_p = std::nullopt,
                                std::optional<int> expect_q = std::nullopt);

}  // namespace mendkit
