#include "mendkit/metrics.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mendkit {

namespace {
std::vector<Vec3> samplePoints(const TriMesh& mesh, size_t n, uint64_t seed) {
    auto samples = sampleSurface(mesh, n, seed);
    std::vector<Vec3> pts;
    pts.reserve(samples.size());
    for (const auto& s : samples) pts.push_back(s.point);
    return pts;
}

double meanNearestSq(const std::vector<Vec3>& from, const KdTree3& to) {
    double sum = 0.0;
    for (const auto& p : from) sum += to.nearest(p).dist2;
    return sum / static_cast<double>(from.size());
}
}  // namespace

double chamferPoints(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer: empty point set");
    KdTree3 ta(a), tb(b);
    return 0.5 * (meanNearestSq(a, tb) + meanNearestSq(b, ta));
}

double chamfer(const TriMesh& a, const TriMesh& b, size_t n, uint64_t seed) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer: empty mesh");
    return chamferPoints(samplePoints(a, n, seed), samplePoints(b, n, seed));
}

double nfrePoints(const std::vector<Vec3>& predSamples, const std::vector<Vec3>& gtSamples,
                  const std::vector<Vec3>& nonfractureSurface, double eta) {
    if (predSamples.empty()) throw std::invalid_argument("nfre: empty prediction samples");
    KdTree3 tNonfrac(nonfractureSurface), tGt(gtSamples);
    double eta2 = eta * eta;
    size_t count = 0;
    for (const auto& p : predSamples) {
        if (tNonfrac.nearest(p).dist2 < eta2 && tGt.nearest(p).dist2 > eta2) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(predSamples.size());
}

double nfre(const TriMesh& pred, const TriMesh& gtRestoration,
            const std::vector<Vec3>& nonfractureSurface, double eta, size_t n, uint64_t seed) {
    if (pred.empty()) throw std::invalid_argument("nfre: empty prediction");
    if (gtRestoration.empty()) throw std::invalid_argument("nfre: empty ground truth");
    if (nonfractureSurface.empty()) throw std::invalid_argument("nfre: no non-fracture labels");
    return nfrePoints(samplePoints(pred, n, seed), samplePoints(gtRestoration, n, seed),
                      nonfractureSurface, eta);
}

void EvalReport::aggregate() {
    size_t nonEmptyCount = 0;
    std::map<std::string, std::pair<double, size_t>> cdAcc, nfreAcc;
    for (const auto& r : rows) {
        if (!r.non_empty) continue;
        ++nonEmptyCount;
        cdAcc[r.shape_class].first += r.cd;
        cdAcc[r.shape_class].second += 1;
        nfreAcc[r.shape_class].first += r.nfre;
        nfreAcc[r.shape_class].second += 1;
    }
    ne_percent = rows.empty() ? 0.0
                              : 100.0 * static_cast<double>(nonEmptyCount) /
                                    static_cast<double>(rows.size());
    class_cd.clear();
    class_nfre.clear();
    double cdSum = 0.0, nfreSum = 0.0;
    for (const auto& [cls, acc] : cdAcc) {
        class_cd[cls] = acc.first / static_cast<double>(acc.second);
        cdSum += class_cd[cls];
    }
    for (const auto& [cls, acc] : nfreAcc) {
        class_nfre[cls] = acc.first / static_cast<double>(acc.second);
        nfreSum += class_nfre[cls];
    }
    // Equal class weights counter class imbalance.
    mean_cd = class_cd.empty() ? 0.0 : cdSum / static_cast<double>(class_cd.size());
    mean_nfre = class_nfre.empty() ? 0.0 : nfreSum / static_cast<double>(class_nfre.size());
}

std::string EvalReport::toJson() const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["ne_percent"] = ne_percent;
    j["mean_cd"] = mean_cd;
    j["mean_nfre"] = mean_nfre;
    j["class_cd"] = class_cd;
    j["class_nfre"] = class_nfre;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json row;
        row["shape_id"] = r.shape_id;
        row["class"] = r.shape_class;
        row["non_empty"] = r.non_empty;
        row["cd"] = r.cd;
        row["nfre"] = r.nfre;
        row["eta"] = r.eta;
        row["n"] = r.n;
        row["seed"] = r.seed;
        j["rows"].push_back(row);
    }
    return j.dump(2) + "\n";
}

std::string EvalReport::toTable() const {
    std::ostringstream out;
    out.precision(6);
    out << "shape_id                          class       NE     CD           NFRE\n";
    for (const auto& r : rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-33s %-10s %-5s %-12.6g %-12.6g\n", r.shape_id.c_str(),
                      r.shape_class.c_str(), r.non_empty ? "yes" : "no",
                      r.non_empty ? r.cd : 0.0, r.non_empty ? r.nfre : 0.0);
        out << buf;
    }
    char agg[160];
    std::snprintf(agg, sizeof agg, "NE%%=%.2f  mean CD=%.6g  mean NFRE=%.6g  (config %s)\n",
                  ne_percent, mean_cd, mean_nfre, config_hash.c_str());
    out << agg;
    return out.str();
}

}  // namespace mendkit
