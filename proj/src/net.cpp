#include "mendkit/net.hpp"

#include <cmath>
#include <cstring>

#include "mendkit/binio.hpp"
#include "mendkit/hash.hpp"

namespace mendkit {

namespace fs = std::filesystem;

void MlpConfig::validate() const {
    if (latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
    if (hidden_width < 1) throw std::invalid_argument("hidden_width must be >= 1");
    if (depth < 2) throw std::invalid_argument("depth must be >= 2");
    if (skip_layer != 0 && !(skip_layer > 0 && skip_layer < depth))
        throw std::invalid_argument("skip_layer must lie in (0, depth) or be 0");
}

int MlpConfig::layerInputDim(int k) const {
    if (k == 0) return inputDim();
    return hidden_width + (k == skip_layer ? inputDim() : 0);
}

size_t MlpParams::parameterCount() const {
    size_t n = 0;
    for (const auto& w : weights) n += static_cast<size_t>(w.size());
    for (const auto& b : biases) n += static_cast<size_t>(b.size());
    return n;
}

bool MlpParams::allFinite() const {
    for (const auto& w : weights)
        if (!w.allFinite()) return false;
    for (const auto& b : biases)
        if (!b.allFinite()) return false;
    return true;
}

MlpParams initMlp(const MlpConfig& cfg, uint64_t seed) {
    cfg.validate();
    MlpParams p;
    Rng rng(seed);
    auto makeLayer = [&](int in, int out) {
        double s = std::sqrt(2.0 / in);
        Mat w(in, out);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = normalReal(rng, 0.0, s);
        p.weights.push_back(std::move(w));
        p.biases.push_back(Mat::Zero(1, out));
    };
    for (int k = 0; k < cfg.depth; ++k) makeLayer(cfg.layerInputDim(k), cfg.hidden_width);
    makeLayer(cfg.hidden_width, 1);
    return p;
}

MlpParams zeroMlp(const MlpConfig& cfg) {
    cfg.validate();
    MlpParams p;
    for (int k = 0; k < cfg.depth; ++k) {
        p.weights.push_back(Mat::Zero(cfg.layerInputDim(k), cfg.hidden_width));
        p.biases.push_back(Mat::Zero(1, cfg.hidden_width));
    }
    p.weights.push_back(Mat::Zero(cfg.hidden_width, 1));
    p.biases.push_back(Mat::Zero(1, 1));
    return p;
}

namespace {
void checkDims(const MlpConfig& cfg, const MlpParams& params, Eigen::Index zdim) {
    if (zdim != cfg.latent_dim) throw std::invalid_argument("latent code dimension mismatch");
    if (params.weights.size() != static_cast<size_t>(cfg.depth) + 1)
        throw std::invalid_argument("parameter layer count mismatch");
    for (int k = 0; k < cfg.depth; ++k)
        if (params.weights[k].rows() != cfg.layerInputDim(k) ||
            params.weights[k].cols() != cfg.hidden_width)
            throw std::invalid_argument("parameter shape mismatch");
}
}  // namespace

Vec mlpForward(const MlpConfig& cfg, const MlpParams& params, const Vec& z, const Mat& xyz) {
    checkDims(cfg, params, z.size());
    const Eigen::Index B = xyz.rows();
    Mat input(B, cfg.inputDim());
    input.leftCols(cfg.latent_dim) = z.transpose().replicate(B, 1);
    input.rightCols(3) = xyz;

    Mat h = input;
    for (int k = 0; k < cfg.depth; ++k) {
        if (k == cfg.skip_layer && k != 0) {
            Mat cat(B, h.cols() + input.cols());
            cat.leftCols(h.cols()) = h;
            cat.rightCols(input.cols()) = input;
            h = std::move(cat);
        }
        h = (h * params.weights[k]).rowwise() + params.biases[k].row(0);
        h = h.cwiseMax(0.0);
    }
    Vec logit = (h * params.weights[cfg.depth]).col(0).array() + params.biases[cfg.depth](0, 0);
    return logit.unaryExpr([](double a) {
        if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
        double e = std::exp(a);
        return e / (1.0 + e);
    });
}

double forwardOccupancy(const MlpConfig& cfg, const MlpParams& params, const Vec& z,
                        const Vec3& x) {
    Mat xyz(1, 3);
    xyz << x.x, x.y, x.z;
    double out = mlpForward(cfg, params, z, xyz)(0);
    if (!std::isfinite(out)) throw std::runtime_error("forward: non-finite output");
    return out;
}

std::vector<uint8_t> mlpActivationSignature(const MlpConfig& cfg, const MlpParams& params,
                                            const Vec& z, const Mat& xyz) {
    checkDims(cfg, params, z.size());
    const Eigen::Index B = xyz.rows();
    Mat input(B, cfg.inputDim());
    input.leftCols(cfg.latent_dim) = z.transpose().replicate(B, 1);
    input.rightCols(3) = xyz;

    std::vector<uint8_t> signature;
    signature.reserve(static_cast<size_t>(B) * cfg.hidden_width * cfg.depth);
    Mat h = input;
    for (int k = 0; k < cfg.depth; ++k) {
        if (k == cfg.skip_layer && k != 0) {
            Mat cat(B, h.cols() + input.cols());
            cat.leftCols(h.cols()) = h;
            cat.rightCols(input.cols()) = input;
            h = std::move(cat);
        }
        h = (h * params.weights[k]).rowwise() + params.biases[k].row(0);
        for (Eigen::Index j = 0; j < h.cols(); ++j)
            for (Eigen::Index i = 0; i < h.rows(); ++i)
                signature.push_back(h(i, j) > 0.0 ? 1 : 0);
        h = h.cwiseMax(0.0);
    }
    return signature;
}

template <typename S>
TapedMlp mlpForwardTaped(ad::Tape<S>& tape, const MlpConfig& cfg, const MlpParams& params,
                         const Vec& z, const Mat& xyz) {
    checkDims(cfg, params, z.size());
    TapedMlp out;
    const Eigen::Index B = xyz.rows();

    out.code_leaf = tape.leaf(z.transpose().template cast<S>());
    int zRows = tape.broadcastRows(out.code_leaf, B);
    int xLeaf = tape.leaf(xyz.template cast<S>());
    int input = tape.concatCols(zRows, xLeaf);

    int h = input;
    for (int k = 0; k <= cfg.depth; ++k) {
        if (k == cfg.skip_layer && k != 0) h = tape.concatCols(h, input);
        int w = tape.leaf(params.weights[k].template cast<S>());
        int b = tape.leaf(params.biases[k].template cast<S>());
        out.weight_leaves.push_back(w);
        out.bias_leaves.push_back(b);
        h = tape.addRow(tape.matmul(h, w), b);
        h = (k < cfg.depth) ? tape.relu(h) : tape.logistic(h);
    }
    out.output = h;
    return out;
}

template TapedMlp mlpForwardTaped<double>(ad::Tape<double>&, const MlpConfig&, const MlpParams&,
                                          const Vec&, const Mat&);
template TapedMlp mlpForwardTaped<float>(ad::Tape<float>&, const MlpConfig&, const MlpParams&,
                                         const Vec&, const Mat&);

namespace {
void checkUnit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
        throw std::domain_error(std::string(name) + ": occupancy outside [0,1]");
}
}  // namespace

double composeFracture(double oc, double ob) {
    checkUnit(oc, "compose_fracture");
    checkUnit(ob, "compose_fracture");
    return oc * ob;
}

double composeRestoration(double oc, double ob) {
    checkUnit(oc, "compose_restoration");
    checkUnit(ob, "compose_restoration");
    return oc * (1.0 - ob);
}

double bce(double p, int y) {
    double ph = std::fmin(std::fmax(p, kLogEps), 1.0 - kLogEps);
    return -(y ? std::log(ph) : std::log(1.0 - ph));
}

void AutodecoderModel::validate() const {
    fcfg.validate();
    gcfg.validate();
    if (z_c_table.rows() != z_b_table.rows())
        throw std::invalid_argument("latent table row counts differ");
    if (z_c_table.cols() != fcfg.latent_dim || z_b_table.cols() != gcfg.latent_dim)
        throw std::invalid_argument("latent table width mismatch");
    if (!theta.allFinite() || !phi.allFinite() || !z_c_table.allFinite() ||
        !z_b_table.allFinite())
        throw std::runtime_error("model contains non-finite parameters");
}

AutodecoderModel makeModel(const MlpConfig& fcfg, const MlpConfig& gcfg, int shapes,
                           double codeInitSigma, uint64_t seed) {
    AutodecoderModel model;
    model.fcfg = fcfg;
    model.gcfg = gcfg;
    model.theta = initMlp(fcfg, deriveSeed(seed, 1));
    model.phi = initMlp(gcfg, deriveSeed(seed, 2));
    Rng rng(deriveSeed(seed, 3));
    model.z_c_table = Mat(shapes, fcfg.latent_dim);
    model.z_b_table = Mat(shapes, gcfg.latent_dim);
    for (Eigen::Index i = 0; i < model.z_c_table.rows(); ++i) {
        for (Eigen::Index j = 0; j < model.z_c_table.cols(); ++j)
            model.z_c_table(i, j) = normalReal(rng, 0.0, codeInitSigma);
        for (Eigen::Index j = 0; j < model.z_b_table.cols(); ++j)
            model.z_b_table(i, j) = normalReal(rng, 0.0, codeInitSigma);
    }
    return model;
}

AdamState AdamState::forModel(const AutodecoderModel& model) {
    AdamState s;
    auto addGroup = [&](const MlpParams& p) {
        for (const auto& w : p.weights) {
            s.m.push_back(Mat::Zero(w.rows(), w.cols()));
            s.v.push_back(Mat::Zero(w.rows(), w.cols()));
        }
        for (const auto& b : p.biases) {
            s.m.push_back(Mat::Zero(b.rows(), b.cols()));
            s.v.push_back(Mat::Zero(b.rows(), b.cols()));
        }
    };
    addGroup(model.theta);
    addGroup(model.phi);
    s.code_c_m = Mat::Zero(model.z_c_table.rows(), model.z_c_table.cols());
    s.code_c_v = s.code_c_m;
    s.code_b_m = Mat::Zero(model.z_b_table.rows(), model.z_b_table.cols());
    s.code_b_v = s.code_b_m;
    s.code_c_steps = Eigen::VectorX<int64_t>::Zero(model.z_c_table.rows());
    s.code_b_steps = Eigen::VectorX<int64_t>::Zero(model.z_b_table.rows());
    return s;
}

// ---------------------------------------------------------------------------
// Checkpoint IO
// ---------------------------------------------------------------------------

namespace {
constexpr char kMagic[4] = {'D', 'M', 'C', 'K'};
constexpr uint16_t kVersion = 1;

void putMat(BinWriter& w, const Mat& m) {
    w.put<uint64_t>(static_cast<uint64_t>(m.rows()));
    w.put<uint64_t>(static_cast<uint64_t>(m.cols()));
    w.putBytes(m.data(), sizeof(double) * static_cast<size_t>(m.size()));
}
Mat getMat(BinReader& r) {
    auto rows = r.get<uint64_t>();
    auto cols = r.get<uint64_t>();
    Mat m(rows, cols);
    r.getBytes(m.data(), sizeof(double) * static_cast<size_t>(m.size()));
    return m;
}
void putConfig(BinWriter& w, const MlpConfig& c) {
    w.put<uint32_t>(c.latent_dim);
    w.put<uint32_t>(c.hidden_width);
    w.put<uint32_t>(c.depth);
    w.put<uint32_t>(c.skip_layer);
}
MlpConfig getConfig(BinReader& r) {
    MlpConfig c;
    c.latent_dim = static_cast<int>(r.get<uint32_t>());
    c.hidden_width = static_cast<int>(r.get<uint32_t>());
    c.depth = static_cast<int>(r.get<uint32_t>());
    c.skip_layer = static_cast<int>(r.get<uint32_t>());
    return c;
}
void putParams(BinWriter& w, const MlpParams& p) {
    w.put<uint32_t>(static_cast<uint32_t>(p.weights.size()));
    for (const auto& m : p.weights) putMat(w, m);
    for (const auto& m : p.biases) putMat(w, m);
}
MlpParams getParams(BinReader& r) {
    MlpParams p;
    auto layers = r.get<uint32_t>();
    for (uint32_t i = 0; i < layers; ++i) p.weights.push_back(getMat(r));
    for (uint32_t i = 0; i < layers; ++i) p.biases.push_back(getMat(r));
    return p;
}
}  // namespace

void saveCheckpoint(const AutodecoderModel& model, const AdamState* adam, const fs::path& path) {
    BinWriter w;
    w.putBytes(kMagic, 4);
    w.put<uint16_t>(kVersion);
    putConfig(w, model.fcfg);
    putConfig(w, model.gcfg);
    w.put<uint32_t>(static_cast<uint32_t>(model.p()));
    w.put<uint32_t>(static_cast<uint32_t>(model.q()));
    putParams(w, model.theta);
    putParams(w, model.phi);
    putMat(w, model.z_c_table);
    putMat(w, model.z_b_table);
    w.put<uint8_t>(adam ? 1 : 0);
    if (adam) {
        w.put<uint32_t>(static_cast<uint32_t>(adam->m.size()));
        for (const auto& m : adam->m) putMat(w, m);
        for (const auto& m : adam->v) putMat(w, m);
        w.put<int64_t>(adam->step);
        putMat(w, adam->code_c_m);
        putMat(w, adam->code_c_v);
        putMat(w, adam->code_b_m);
        putMat(w, adam->code_b_v);
        w.put<uint64_t>(static_cast<uint64_t>(adam->code_c_steps.size()));
        w.putBytes(adam->code_c_steps.data(), sizeof(int64_t) * adam->code_c_steps.size());
        w.put<uint64_t>(static_cast<uint64_t>(adam->code_b_steps.size()));
        w.putBytes(adam->code_b_steps.data(), sizeof(int64_t) * adam->code_b_steps.size());
    }
    w.put<uint64_t>(model.train_config_hash);
    uint32_t crc = crc32(w.bytes().data(), w.bytes().size());
    w.put<uint32_t>(crc);
    atomicWriteFile(path, w.bytes());
}

AutodecoderModel loadCheckpoint(const fs::path& path, AdamState* adam,
                                std::optional<int> expect_p, std::optional<int> expect_q) {
    auto bytes = readFileBytes(path);
    if (bytes.size() < 8) throw std::runtime_error("checkpoint truncated: " + path.string());
    uint32_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
    if (crc32(bytes.data(), bytes.size() - 4) != stored)
        throw std::runtime_error("checkpoint checksum mismatch: " + path.string());

    BinReader r(bytes.data(), bytes.size() - 4);
    char magic[4];
    r.getBytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a checkpoint file: " + path.string());
    if (r.get<uint16_t>() != kVersion) throw std::runtime_error("checkpoint version mismatch");

    AutodecoderModel model;
    model.fcfg = getConfig(r);
    model.gcfg = getConfig(r);
    auto p = r.get<uint32_t>(), q = r.get<uint32_t>();
    if (expect_p && static_cast<int>(p) != *expect_p)
        throw std::runtime_error("checkpoint latent size p=" + std::to_string(p) +
                                 " does not match requested " + std::to_string(*expect_p));
    if (expect_q && static_cast<int>(q) != *expect_q)
        throw std::runtime_error("checkpoint latent size q=" + std::to_string(q) +
                                 " does not match requested " + std::to_string(*expect_q));
    model.theta = getParams(r);
    model.phi = getParams(r);
    model.z_c_table = getMat(r);
    model.z_b_table = getMat(r);
    auto hasAdam = r.get<uint8_t>();
    if (hasAdam) {
        AdamState s;
        auto n = r.get<uint32_t>();
        for (uint32_t i = 0; i < n; ++i) s.m.push_back(getMat(r));
        for (uint32_t i = 0; i < n; ++i) s.v.push_back(getMat(r));
        s.step = r.get<int64_t>();
        s.code_c_m = getMat(r);
        s.code_c_v = getMat(r);
        s.code_b_m = getMat(r);
        s.code_b_v = getMat(r);
        s.code_c_steps.resize(static_cast<Eigen::Index>(r.get<uint64_t>()));
        r.getBytes(s.code_c_steps.data(), sizeof(int64_t) * s.code_c_steps.size());
        s.code_b_steps.resize(static_cast<Eigen::Index>(r.get<uint64_t>()));
        r.getBytes(s.code_b_steps.data(), sizeof(int64_t) * s.code_b_steps.size());
        if (adam) *adam = std::move(s);
    } else if (adam) {
        *adam = AdamState{};
    }
    model.train_config_hash = r.get<uint64_t>();
    model.validate();
    return model;
}

}  // namespace mendkit
