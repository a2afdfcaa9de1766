#include "mendkit/train.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <thread>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mendkit/binio.hpp"
#include "mendkit/hash.hpp"

namespace mendkit {

namespace fs = std::filesystem;
using nlohmann::json;

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (batch_shapes < 1 || points_per_shape < 1)
        throw std::invalid_argument("train: batch sizes must be >= 1");
    if (!(lr_weights > 0) || !(lr_codes > 0))
        throw std::invalid_argument("train: learning rates must be > 0");
    if (lambda_reg < 0) throw std::invalid_argument("train: lambda_reg must be >= 0");
}

uint64_t TrainConfig::contentHash() const {
    std::ostringstream ss;
    ss << epochs << '|' << steps_per_epoch << '|' << batch_shapes << '|' << points_per_shape
       << '|' << lr_weights << '|' << lr_codes << '|' << lambda_reg << '|' << code_init_sigma
       << '|' << seed << '|' << use_f32 << '|' << stop_when_lf_below;
    return fnv1a64(ss.str());
}

ShapeBatch gatherBatch(const SampleSet& set, const std::vector<uint64_t>& rows) {
    ShapeBatch b;
    const auto n = static_cast<Eigen::Index>(rows.size());
    b.xyz.resize(n, 3);
    b.y_f.resize(n, 1);
    b.y_c.resize(n, 1);
    b.y_b.resize(n, 1);
    b.y_r.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        size_t r = rows[static_cast<size_t>(i)];
        b.xyz(i, 0) = set.points[3 * r];
        b.xyz(i, 1) = set.points[3 * r + 1];
        b.xyz(i, 2) = set.points[3 * r + 2];
        b.y_f(i, 0) = SampleSet::bit(set.occ_f, r);
        b.y_c(i, 0) = SampleSet::bit(set.occ_c, r);
        b.y_b(i, 0) = SampleSet::bit(set.occ_b, r);
        b.y_r(i, 0) = SampleSet::bit(set.occ_r, r);
    }
    return b;
}

namespace {

struct ShapeGrads {
    std::vector<Mat> params;  // f.W.., f.b.., g.W.., g.b.. (AdamState order)
    Mat z_c, z_b;             // 1 x p, 1 x q
    LossTerms terms;
};

template <typename S>
ShapeGrads shapeGradients(const AutodecoderModel& model, const Vec& zc, const Vec& zb,
                          const ShapeBatch& batch, double lambdaReg) {
    ad::Tape<S> tape;
    auto f = mlpForwardTaped<S>(tape, model.fcfg, model.theta, zc, batch.xyz);
    auto g = mlpForwardTaped<S>(tape, model.gcfg, model.phi, zb, batch.xyz);
    int fracturePred = tape.mul(f.output, g.output);
    int restorationPred = tape.mul(f.output, tape.oneMinus(g.output));

    int lF = tape.mean(tape.bceVs(fracturePred, batch.y_f.template cast<S>()));
    int lC = tape.mean(tape.bceVs(f.output, batch.y_c.template cast<S>()));
    int lB = tape.mean(tape.bceVs(g.output, batch.y_b.template cast<S>()));
    int lR = tape.mean(tape.bceVs(restorationPred, batch.y_r.template cast<S>()));
    int lReg = tape.add(tape.l1(f.code_leaf), tape.l1(g.code_leaf));
    int total = tape.add(tape.add(tape.add(lF, lC), tape.add(lB, lR)),
                         tape.scale(lReg, S(lambdaReg)));

    ShapeGrads out;
    out.terms.l_f = tape.val(lF)(0, 0);
    out.terms.l_c = tape.val(lC)(0, 0);
    out.terms.l_b = tape.val(lB)(0, 0);
    out.terms.l_r = tape.val(lR)(0, 0);
    out.terms.l_reg = tape.val(lReg)(0, 0);
    for (double term : {out.terms.l_f, out.terms.l_c, out.terms.l_b, out.terms.l_r,
                        out.terms.l_reg})
        if (!std::isfinite(term))
            throw std::runtime_error("training step: non-finite loss term");

    tape.backward(total);

    auto collect = [&](const TapedMlp& net) {
        for (int w : net.weight_leaves) out.params.push_back(tape.grad(w).template cast<double>());
        for (int b : net.bias_leaves) out.params.push_back(tape.grad(b).template cast<double>());
    };
    collect(f);
    collect(g);
    out.z_c = tape.grad(f.code_leaf).template cast<double>();
    out.z_b = tape.grad(g.code_leaf).template cast<double>();
    return out;
}

int resolveWorkers(int workers) {
    if (workers > 0) return workers;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

LossTerms lossTerms(const AutodecoderModel& model, const Vec& z_c, const Vec& z_b,
                    const ShapeBatch& batch) {
    if (batch.xyz.rows() == 0) throw std::invalid_argument("loss_terms: empty batch");
    return shapeGradients<double>(model, z_c, z_b, batch, 0.0).terms;
}

void adamUpdate(Mat& param, Mat& m, Mat& v, const Mat& grad, double lr, int64_t t) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v.array().matrix() + (1.0 - b2) * grad.cwiseProduct(grad);
    double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

TrainResult train(const std::vector<SampleSet>& corpus, const MlpConfig& fcfg,
                  const MlpConfig& gcfg, const TrainConfig& cfg, const fs::path* out_dir) {
    cfg.validate();
    if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
    for (const auto& set : corpus)
        if (set.size() == 0) throw std::invalid_argument("train: empty sample set in corpus");

    const int nShapes = static_cast<int>(corpus.size());
    const int batchShapes = std::min(cfg.batch_shapes, nShapes);
    const int stepsPerEpoch = cfg.steps_per_epoch > 0
                                  ? cfg.steps_per_epoch
                                  : (nShapes + batchShapes - 1) / batchShapes;

    TrainResult result;
    result.model = makeModel(fcfg, gcfg, nShapes, cfg.code_init_sigma, deriveSeed(cfg.seed, 100));
    result.model.train_config_hash = cfg.contentHash();
    result.adam = AdamState::forModel(result.model);

    std::ofstream logStream;
    if (out_dir) {
        fs::create_directories(*out_dir);
        logStream.open(*out_dir / "train_log.jsonl", std::ios::trunc);
    }

    const int nw = resolveWorkers(cfg.workers);
    double initialLoss = 0.0;
    int divergentEpochs = 0;
    std::vector<double> lfWindow;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto epochStart = std::chrono::steady_clock::now();
        LossTerms epochTerms;
        double epochTotal = 0.0;
        for (int step = 0; step < stepsPerEpoch; ++step) {
            uint64_t stepSeed = deriveSeed(cfg.seed, (static_cast<uint64_t>(epoch) << 20) |
                                                         static_cast<uint64_t>(step));
            // Shape selection: all shapes when they fit, else a seeded draw
            // without replacement.
            std::vector<int> shapeIdx(nShapes);
            std::iota(shapeIdx.begin(), shapeIdx.end(), 0);
            if (batchShapes < nShapes) {
                Rng rng(deriveSeed(stepSeed, 1));
                for (int i = 0; i < batchShapes; ++i) {
                    int j = i + static_cast<int>(rng() % static_cast<uint64_t>(nShapes - i));
                    std::swap(shapeIdx[i], shapeIdx[j]);
                }
                shapeIdx.resize(batchShapes);
            }

            // Per-shape gradients, computed in parallel, reduced in shape
            // order so results are worker-count invariant.
            std::vector<ShapeGrads> grads(shapeIdx.size());
            std::vector<std::future<void>> jobs;
            std::atomic<size_t> next{0};
            auto worker = [&]() {
                for (;;) {
                    size_t k = next.fetch_add(1);
                    if (k >= shapeIdx.size()) return;
                    int s = shapeIdx[k];
                    const SampleSet& set = corpus[s];
                    size_t take = std::min<size_t>(cfg.points_per_shape, set.size());
                    auto rows = subsampleIndices(set, take, deriveSeed(stepSeed, 1000 + s));
                    ShapeBatch batch = gatherBatch(set, rows);
                    Vec zc = result.model.z_c_table.row(s).transpose();
                    Vec zb = result.model.z_b_table.row(s).transpose();
                    grads[k] = cfg.use_f32
                                   ? shapeGradients<float>(result.model, zc, zb, batch,
                                                           cfg.lambda_reg)
                                   : shapeGradients<double>(result.model, zc, zb, batch,
                                                            cfg.lambda_reg);
                }
            };
            int poolSize = std::min<int>(nw, static_cast<int>(shapeIdx.size()));
            for (int w = 1; w < poolSize; ++w)
                jobs.push_back(std::async(std::launch::async, worker));
            worker();
            for (auto& j : jobs) j.get();

            // Ordered reduction over the batch.
            const double invB = 1.0 / static_cast<double>(shapeIdx.size());
            std::vector<Mat> weightGrad;
            for (size_t k = 0; k < grads.size(); ++k) {
                if (k == 0) {
                    weightGrad = grads[k].params;
                } else {
                    for (size_t i = 0; i < weightGrad.size(); ++i)
                        weightGrad[i] += grads[k].params[i];
                }
                epochTerms.l_f += grads[k].terms.l_f;
                epochTerms.l_c += grads[k].terms.l_c;
                epochTerms.l_b += grads[k].terms.l_b;
                epochTerms.l_r += grads[k].terms.l_r;
                epochTerms.l_reg += grads[k].terms.l_reg;
                epochTotal += grads[k].terms.weighted(cfg.lambda_reg);
            }
            for (auto& g : weightGrad) g *= invB;

            // Weight update.
            ++result.adam.step;
            size_t slot = 0;
            auto updateGroup = [&](MlpParams& p) {
                for (auto& w : p.weights) {
                    adamUpdate(w, result.adam.m[slot], result.adam.v[slot], weightGrad[slot],
                               cfg.lr_weights, result.adam.step);
                    ++slot;
                }
                for (auto& b : p.biases) {
                    adamUpdate(b, result.adam.m[slot], result.adam.v[slot], weightGrad[slot],
                               cfg.lr_weights, result.adam.step);
                    ++slot;
                }
            };
            updateGroup(result.model.theta);
            updateGroup(result.model.phi);

            // Code rows touched this step keep their own step counts.
            for (size_t k = 0; k < grads.size(); ++k) {
                int s = shapeIdx[k];
                int64_t t = ++result.adam.code_c_steps(s);
                Mat rowC = result.model.z_c_table.row(s);
                Mat mC = result.adam.code_c_m.row(s), vC = result.adam.code_c_v.row(s);
                adamUpdate(rowC, mC, vC, grads[k].z_c, cfg.lr_codes, t);
                result.model.z_c_table.row(s) = rowC;
                result.adam.code_c_m.row(s) = mC;
                result.adam.code_c_v.row(s) = vC;

                t = ++result.adam.code_b_steps(s);
                Mat rowB = result.model.z_b_table.row(s);
                Mat mB = result.adam.code_b_m.row(s), vB = result.adam.code_b_v.row(s);
                adamUpdate(rowB, mB, vB, grads[k].z_b, cfg.lr_codes, t);
                result.model.z_b_table.row(s) = rowB;
                result.adam.code_b_m.row(s) = mB;
                result.adam.code_b_v.row(s) = vB;
            }
        }

        const double denom = static_cast<double>(stepsPerEpoch) *
                             static_cast<double>(std::min(batchShapes, nShapes));
        epochTerms.l_f /= denom;
        epochTerms.l_c /= denom;
        epochTerms.l_b /= denom;
        epochTerms.l_r /= denom;
        epochTerms.l_reg /= denom;
        epochTotal /= denom;

        EpochRecord rec;
        rec.epoch = epoch;
        rec.mean_terms = epochTerms;
        rec.mean_total = epochTotal;
        rec.lr_weights = cfg.lr_weights;
        rec.lr_codes = cfg.lr_codes;
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - epochStart).count();
        result.log.push_back(rec);
        if (logStream) logStream << epochRecordJson(rec) << "\n" << std::flush;

        if (epoch == 0) initialLoss = epochTotal;
        if (epochTotal > cfg.divergence_factor * initialLoss) {
            if (++divergentEpochs >= 3)
                throw std::runtime_error("training diverged: loss " + std::to_string(epochTotal) +
                                         " vs initial " + std::to_string(initialLoss));
        } else {
            divergentEpochs = 0;
        }

        if (out_dir && cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0)
            saveCheckpoint(result.model, &result.adam, *out_dir / "checkpoint.dmck");

        if (cfg.stop_when_lf_below > 0.0) {
            lfWindow.push_back(epochTerms.l_f);
            if (lfWindow.size() > 25) lfWindow.erase(lfWindow.begin());
            if (lfWindow.size() == 25) {
                double mean = std::accumulate(lfWindow.begin(), lfWindow.end(), 0.0) / 25.0;
                if (mean < cfg.stop_when_lf_below) break;
            }
        }
    }

    if (out_dir) saveCheckpoint(result.model, &result.adam, *out_dir / "checkpoint.dmck");
    return result;
}

std::string epochRecordJson(const EpochRecord& rec) {
    json j;
    j["epoch"] = rec.epoch;
    j["loss"] = rec.mean_total;
    j["l_f"] = rec.mean_terms.l_f;
    j["l_c"] = rec.mean_terms.l_c;
    j["l_b"] = rec.mean_terms.l_b;
    j["l_r"] = rec.mean_terms.l_r;
    j["l_reg"] = rec.mean_terms.l_reg;
    j["lr_weights"] = rec.lr_weights;
    j["lr_codes"] = rec.lr_codes;
    j["wall_seconds"] = rec.wall_seconds;
    return j.dump();
}

}  // namespace mendkit
