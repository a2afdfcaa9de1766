#include "mendkit/infer.hpp"

#include "mendkit/train.hpp"

#include <atomic>
#include <cmath>
#include <future>
#include <thread>
#include <map>
#include <numeric>

#include <json.hpp>

namespace mendkit {

using nlohmann::json;

PenaltyMode parsePenaltyMode(const std::string& name) {
    static const std::map<std::string, PenaltyMode> table = {
        {"none", PenaltyMode::None},         {"ner", PenaltyMode::Ner},
        {"prox", PenaltyMode::Prox},         {"nerp", PenaltyMode::Nerp},
        {"proxp", PenaltyMode::Proxp},       {"ner+prox", PenaltyMode::NerProx},
        {"ner+proxp", PenaltyMode::NerProxp}, {"nerp+prox", PenaltyMode::NerpProx},
    };
    auto it = table.find(name);
    if (it == table.end()) throw std::invalid_argument("unknown penalty mode: " + name);
    return it->second;
}

std::string penaltyModeName(PenaltyMode mode) {
    switch (mode) {
        case PenaltyMode::None: return "none";
        case PenaltyMode::Ner: return "ner";
        case PenaltyMode::Prox: return "prox";
        case PenaltyMode::Nerp: return "nerp";
        case PenaltyMode::Proxp: return "proxp";
        case PenaltyMode::NerProx: return "ner+prox";
        case PenaltyMode::NerProxp: return "ner+proxp";
        case PenaltyMode::NerpProx: return "nerp+prox";
    }
    throw std::logic_error("unknown penalty mode");
}

void InferConfig::validate() const {
    if (lambda_ner < 0 || lambda_prox < 0 || lambda_reg < 0)
        throw std::invalid_argument("infer: lambda weights must be >= 0");
    if (iterations < 0) throw std::invalid_argument("infer: iterations must be >= 0");
    if (restarts < 1) throw std::invalid_argument("infer: restarts must be >= 1");
    if (!(lr > 0)) throw std::invalid_argument("infer: learning rate must be > 0");
    if (points_per_iter < 1) throw std::invalid_argument("infer: points_per_iter must be >= 1");
}

FracturedObservation FracturedObservation::fromSampleSet(const SampleSet& set) {
    FracturedObservation obs;
    obs.shape_id = set.shape_id;
    obs.points = set.points;
    obs.occ_f = set.occ_f;
    return obs;
}

namespace {
inline double clampUnit(double v) { return std::fmin(std::fmax(v, kLogEps), 1.0); }
}  // namespace

double penaltyNerValues(const std::vector<double>& restorationOcc) {
    if (restorationOcc.empty()) throw std::invalid_argument("penalty_ner: empty input");
    double sum = 0.0;
    for (double v : restorationOcc) sum += clampUnit(v);
    return -std::log(sum / static_cast<double>(restorationOcc.size()));
}

double penaltyNerpValues(const std::vector<double>& restorationOcc) {
    if (restorationOcc.empty()) throw std::invalid_argument("penalty_nerp: empty input");
    double sum = 0.0;
    for (double v : restorationOcc) sum += std::log(clampUnit(v));
    return -sum / static_cast<double>(restorationOcc.size());
}

double penaltyProxValues(const std::vector<double>& completeOcc,
                         const std::vector<uint8_t>& occF) {
    if (completeOcc.empty() || completeOcc.size() != occF.size())
        throw std::invalid_argument("penalty_prox: size mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < completeOcc.size(); ++i) {
        double d = completeOcc[i] - static_cast<double>(occF[i]);
        sum += d * d;
    }
    return -std::log(clampUnit(1.0 - sum / static_cast<double>(completeOcc.size())));
}

double penaltyProxpValues(const std::vector<double>& completeOcc,
                          const std::vector<uint8_t>& occF) {
    if (completeOcc.empty() || completeOcc.size() != occF.size())
        throw std::invalid_argument("penalty_proxp: size mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < completeOcc.size(); ++i) sum += bce(completeOcc[i], occF[i]);
    return sum / static_cast<double>(completeOcc.size());
}

namespace {
std::vector<double> restorationValues(const AutodecoderModel& model, const Vec& zc, const Vec& zb,
                                      const Mat& xyz) {
    Vec f = mlpForward(model.fcfg, model.theta, zc, xyz);
    Vec g = mlpForward(model.gcfg, model.phi, zb, xyz);
    std::vector<double> out(static_cast<size_t>(xyz.rows()));
    for (Eigen::Index i = 0; i < xyz.rows(); ++i) out[i] = f(i) * (1.0 - g(i));
    return out;
}
std::vector<double> completeValues(const AutodecoderModel& model, const Vec& zc, const Mat& xyz) {
    Vec f = mlpForward(model.fcfg, model.theta, zc, xyz);
    return std::vector<double>(f.data(), f.data() + f.size());
}
}  // namespace

double penaltyNer(const AutodecoderModel& model, const Vec& z_c, const Vec& z_b, const Mat& xyz) {
    return penaltyNerValues(restorationValues(model, z_c, z_b, xyz));
}
double penaltyNerp(const AutodecoderModel& model, const Vec& z_c, const Vec& z_b, const Mat& xyz) {
    return penaltyNerpValues(restorationValues(model, z_c, z_b, xyz));
}
double penaltyProx(const AutodecoderModel& model, const Vec& z_c, const Mat& xyz,
                   const std::vector<uint8_t>& occF) {
    return penaltyProxValues(completeValues(model, z_c, xyz), occF);
}
double penaltyProxp(const AutodecoderModel& model, const Vec& z_c, const Mat& xyz,
                    const std::vector<uint8_t>& occF) {
    return penaltyProxpValues(completeValues(model, z_c, xyz), occF);
}

namespace {

struct ModeFlags {
    bool ner = false, prox = false, nerp = false, proxp = false;
};

ModeFlags flagsFor(PenaltyMode mode) {
    switch (mode) {
        case PenaltyMode::None: return {};
        case PenaltyMode::Ner: return {.ner = true};
        case PenaltyMode::Prox: return {.prox = true};
        case PenaltyMode::Nerp: return {.nerp = true};
        case PenaltyMode::Proxp: return {.proxp = true};
        case PenaltyMode::NerProx: return {.ner = true, .prox = true};
        case PenaltyMode::NerProxp: return {.ner = true, .proxp = true};
        case PenaltyMode::NerpProx: return {.prox = true, .nerp = true};
    }
    throw std::logic_error("unknown penalty mode");
}

struct IterEval {
    InferTraceRow row;
    Mat grad_zc, grad_zb;  // 1 x p / 1 x q (empty when gradients not requested)
    double jensen_gap = 0.0;
};

// One evaluation of the augmented inference loss on a batch, optionally with
// code gradients. Both ner and nerp values are recorded on every batch for
// the Jensen audit even when the mode uses only one of them.
IterEval evalAugmented(const AutodecoderModel& model, const Vec& zc, const Vec& zb,
                       const Mat& xyz, const Mat& yF, const InferConfig& cfg, bool wantGrad) {
    ModeFlags use = flagsFor(cfg.mode);
    ad::TapeD tape;
    auto f = mlpForwardTaped<double>(tape, model.fcfg, model.theta, zc, xyz);
    auto g = mlpForwardTaped<double>(tape, model.gcfg, model.phi, zb, xyz);
    int fracturePred = tape.mul(f.output, g.output);
    int restorationPred = tape.mul(f.output, tape.oneMinus(g.output));

    int lF = tape.mean(tape.bceVs(fracturePred, yF));
    int lReg = tape.add(tape.l1(f.code_leaf), tape.l1(g.code_leaf));
    int total = tape.add(lF, tape.scale(lReg, cfg.lambda_reg));

    int restClamped = tape.clampEps1(restorationPred);
    int lNer = tape.scale(tape.logE(tape.mean(restClamped)), -1.0);
    int lNerp = tape.scale(tape.mean(tape.logE(restClamped)), -1.0);
    int lProx = -1, lProxp = -1;
    {
        int sq = tape.square(tape.sub(f.output, tape.leaf(yF)));
        lProx = tape.scale(tape.logE(tape.clampEps1(tape.oneMinus(tape.mean(sq)))), -1.0);
        lProxp = tape.mean(tape.bceVs(f.output, yF));
    }
    if (use.ner) total = tape.add(total, tape.scale(lNer, cfg.lambda_ner));
    if (use.nerp) total = tape.add(total, tape.scale(lNerp, cfg.lambda_ner));
    if (use.prox) total = tape.add(total, tape.scale(lProx, cfg.lambda_prox));
    if (use.proxp) total = tape.add(total, tape.scale(lProxp, cfg.lambda_prox));

    IterEval out;
    out.row.l_f = tape.val(lF)(0, 0);
    out.row.l_reg = tape.val(lReg)(0, 0);
    out.row.l_ner = tape.val(lNer)(0, 0);
    out.row.l_nerp = tape.val(lNerp)(0, 0);
    out.row.l_prox = tape.val(lProx)(0, 0);
    out.row.l_proxp = tape.val(lProxp)(0, 0);
    out.row.total = tape.val(total)(0, 0);
    out.jensen_gap = out.row.l_nerp - out.row.l_ner;
    if (wantGrad) {
        tape.backward(total);
        out.grad_zc = tape.grad(f.code_leaf);
        out.grad_zb = tape.grad(g.code_leaf);
    }
    return out;
}

struct RestartOutcome {
    Vec zc, zb;
    double final_loss = 0.0;
    std::vector<InferTraceRow> trace;
    double min_gap = 1e300;
    bool finite = true;
};

RestartOutcome runRestart(const AutodecoderModel& model, const FracturedObservation& obs,
                          const InferConfig& cfg, int restart) {
    const size_t N = obs.size();
    RestartOutcome out;
    Rng rng(deriveSeed(cfg.seed, 500 + static_cast<uint64_t>(restart)));
    out.zc = Vec(model.p());
    out.zb = Vec(model.q());
    for (Eigen::Index i = 0; i < out.zc.size(); ++i)
        out.zc(i) = normalReal(rng, 0.0, cfg.init_sigma);
    for (Eigen::Index i = 0; i < out.zb.size(); ++i)
        out.zb(i) = normalReal(rng, 0.0, cfg.init_sigma);

    Mat mC = Mat::Zero(1, model.p()), vC = mC, mB = Mat::Zero(1, model.q()), vB = mB;

    auto gather = [&](const std::vector<uint64_t>& rows, Mat& xyz, Mat& yF) {
        const auto n = static_cast<Eigen::Index>(rows.size());
        xyz.resize(n, 3);
        yF.resize(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            size_t r = rows[static_cast<size_t>(i)];
            xyz(i, 0) = obs.points[3 * r];
            xyz(i, 1) = obs.points[3 * r + 1];
            xyz(i, 2) = obs.points[3 * r + 2];
            yF(i, 0) = (obs.occ_f[r >> 3] >> (r & 7)) & 1;
        }
    };

    try {
        const size_t batchSize = std::min(cfg.points_per_iter, N);
        for (int iter = 0; iter < cfg.iterations; ++iter) {
            // Fresh shuffle each iteration, deterministic under the seed.
            std::vector<uint64_t> rows(N);
            std::iota(rows.begin(), rows.end(), 0ull);
            for (size_t i = 0; i < batchSize; ++i) {
                size_t j = i + static_cast<size_t>(rng() % (N - i));
                std::swap(rows[i], rows[j]);
            }
            rows.resize(batchSize);
            Mat xyz, yF;
            gather(rows, xyz, yF);

            IterEval ev = evalAugmented(model, out.zc, out.zb, xyz, yF, cfg, true);
            ev.row.iteration = iter;
            out.trace.push_back(ev.row);
            out.min_gap = std::fmin(out.min_gap, ev.jensen_gap);

            Mat zcRow = out.zc.transpose(), zbRow = out.zb.transpose();
            adamUpdate(zcRow, mC, vC, ev.grad_zc, cfg.lr, iter + 1);
            adamUpdate(zbRow, mB, vB, ev.grad_zb, cfg.lr, iter + 1);
            out.zc = zcRow.transpose();
            out.zb = zbRow.transpose();
        }

        // Final loss on the full observation for restart comparison.
        std::vector<uint64_t> all(N);
        std::iota(all.begin(), all.end(), 0ull);
        Mat xyz, yF;
        gather(all, xyz, yF);
        IterEval fin = evalAugmented(model, out.zc, out.zb, xyz, yF, cfg, false);
        fin.row.iteration = cfg.iterations;
        out.trace.push_back(fin.row);
        out.min_gap = std::fmin(out.min_gap, fin.jensen_gap);
        out.final_loss = fin.row.total;
        out.finite = std::isfinite(out.final_loss);
    } catch (const std::runtime_error&) {
        out.finite = false;
    }
    return out;
}

}  // namespace

InferResult inferCodes(const AutodecoderModel& model, const FracturedObservation& obs,
                       const InferConfig& cfg) {
    cfg.validate();
    if (obs.size() == 0) throw std::invalid_argument("infer: empty observation");

    std::vector<RestartOutcome> outcomes(cfg.restarts);
    std::vector<std::future<void>> jobs;
    int nw = cfg.workers > 0 ? cfg.workers
                             : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            int r = next.fetch_add(1);
            if (r >= cfg.restarts) return;
            outcomes[r] = runRestart(model, obs, cfg, r);
        }
    };
    for (int w = 1; w < std::min(nw, cfg.restarts); ++w)
        jobs.push_back(std::async(std::launch::async, worker));
    worker();
    for (auto& j : jobs) j.get();

    int best = -1;
    for (int r = 0; r < cfg.restarts; ++r) {
        if (!outcomes[r].finite) continue;
        if (best < 0 || outcomes[r].final_loss < outcomes[best].final_loss) best = r;
    }
    if (best < 0) throw std::runtime_error("infer: all restarts produced non-finite losses");

    InferResult result;
    result.z_c = outcomes[best].zc;
    result.z_b = outcomes[best].zb;
    result.final_loss = outcomes[best].final_loss;
    result.best_restart = best;
    for (auto& o : outcomes) {
        result.traces.push_back(std::move(o.trace));
        result.min_jensen_gap = std::fmin(result.min_jensen_gap, o.min_gap);
    }
    return result;
}

std::string inferResultJson(const InferResult& result, const InferConfig& cfg,
                            const std::string& shape_id) {
    json j;
    j["shape_id"] = shape_id;
    j["mode"] = penaltyModeName(cfg.mode);
    j["lambda_ner"] = cfg.lambda_ner;
    j["lambda_prox"] = cfg.lambda_prox;
    j["lambda_reg"] = cfg.lambda_reg;
    j["seed"] = cfg.seed;
    j["iterations"] = cfg.iterations;
    j["restarts"] = cfg.restarts;
    j["best_restart"] = result.best_restart;
    j["final_loss"] = result.final_loss;
    j["min_jensen_gap"] = result.min_jensen_gap;
    j["z_c"] = std::vector<double>(result.z_c.data(), result.z_c.data() + result.z_c.size());
    j["z_b"] = std::vector<double>(result.z_b.data(), result.z_b.data() + result.z_b.size());
    j["traces"] = json::array();
    for (const auto& trace : result.traces) {
        json t = json::array();
        for (const auto& row : trace) {
            json r;
            r["iter"] = row.iteration;
            r["l_f"] = row.l_f;
            r["l_reg"] = row.l_reg;
            r["l_ner"] = row.l_ner;
            r["l_prox"] = row.l_prox;
            r["l_nerp"] = row.l_nerp;
            r["l_proxp"] = row.l_proxp;
            r["total"] = row.total;
            t.push_back(r);
        }
        j["traces"].push_back(t);
    }
    return j.dump(2) + "\n";
}

}  // namespace mendkit
