#include "mendkit/tps.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>
#include <json.hpp>

namespace mendkit {

using nlohmann::json;

namespace {
// U(r) = r^2 log r, written on squared radii; U(0) = 0 by continuity.
double tpsKernel(double r2) {
    if (r2 <= 0.0) return 0.0;
    return 0.5 * r2 * std::log(r2);
}
}  // namespace

double TpsSurface::height(double uu, double vv) const {
    double h = affine[0] + affine[1] * uu + affine[2] * vv;
    for (size_t i = 0; i < weights.size(); ++i) {
        double du = uu - control_u[i], dv = vv - control_v[i];
        h += weights[i] * tpsKernel(du * du + dv * dv);
    }
    return h;
}

PlaneFrame fitPlane(const std::vector<Vec3>& points) {
    if (points.size() < 3) throw std::invalid_argument("fit_plane: need at least 3 points");
    Vec3 centroid{0, 0, 0};
    for (const auto& p : points) centroid += p;
    centroid = centroid / static_cast<double>(points.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : points) {
        Eigen::Vector3d d(p.x - centroid.x, p.y - centroid.y, p.z - centroid.z);
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(points.size());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    if (eig.info() != Eigen::Success) throw std::runtime_error("fit_plane: eigensolver failed");
    Eigen::Vector3d evals = eig.eigenvalues();  // ascending
    // Collinear or coincident input has no spread in a second direction.
    if (evals(1) <= 1e-12 * std::max(evals(2), 1e-300) || evals(2) <= 0.0)
        throw std::runtime_error("fit_plane: rank-deficient (collinear) input");

    Eigen::Vector3d en = eig.eigenvectors().col(0);
    Eigen::Vector3d eu = eig.eigenvectors().col(2);
    PlaneFrame frame;
    frame.origin = centroid;
    frame.n = Vec3{en(0), en(1), en(2)}.normalized();
    frame.u = Vec3{eu(0), eu(1), eu(2)}.normalized();
    frame.v = frame.n.cross(frame.u).normalized();
    frame.u = frame.v.cross(frame.n);  // exact right-handed orthonormal frame
    return frame;
}

TpsSurface fitTps(const std::vector<Vec3>& points, const PlaneFrame& frame, double ridge) {
    if (points.size() < 4) throw std::invalid_argument("fit_tps: need at least 4 points");
    if (ridge < 0) throw std::invalid_argument("fit_tps: ridge must be >= 0");

    struct Ctl { double u, v, hsum; int count; };
    std::map<std::pair<int64_t, int64_t>, Ctl> merged;
    constexpr double kDupTol = 1e-7;
    for (const auto& p : points) {
        Vec3 d = p - frame.origin;
        double uu = d.dot(frame.u), vv = d.dot(frame.v), hh = d.dot(frame.n);
        auto key = std::make_pair(static_cast<int64_t>(std::llround(uu / kDupTol)),
                                  static_cast<int64_t>(std::llround(vv / kDupTol)));
        auto [it, inserted] = merged.try_emplace(key, Ctl{uu, vv, hh, 1});
        if (!inserted) {
            it->second.hsum += hh;
            ++it->second.count;
        }
    }
    const size_t m = merged.size();
    if (m < 4) throw std::runtime_error("fit_tps: fewer than 4 distinct domain points");

    TpsSurface tps;
    tps.frame = frame;
    tps.ridge = ridge;
    tps.control_u.reserve(m);
    tps.control_v.reserve(m);
    Eigen::VectorXd heights(m);
    size_t idx = 0;
    for (const auto& [key, c] : merged) {
        tps.control_u.push_back(c.u);
        tps.control_v.push_back(c.v);
        heights(static_cast<Eigen::Index>(idx++)) = c.hsum / c.count;
    }

    const auto mi = static_cast<Eigen::Index>(m);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(mi + 3, mi + 3);
    for (Eigen::Index i = 0; i < mi; ++i) {
        for (Eigen::Index j = i + 1; j < mi; ++j) {
            double du = tps.control_u[i] - tps.control_u[j];
            double dv = tps.control_v[i] - tps.control_v[j];
            double k = tpsKernel(du * du + dv * dv);
            A(i, j) = k;
            A(j, i) = k;
        }
        A(i, i) = ridge;
        A(i, mi) = A(mi, i) = 1.0;
        A(i, mi + 1) = A(mi + 1, i) = tps.control_u[i];
        A(i, mi + 2) = A(mi + 2, i) = tps.control_v[i];
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(mi + 3);
    rhs.head(mi) = heights;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) throw std::runtime_error("fit_tps: singular system");
    Eigen::VectorXd sol = lu.solve(rhs);

    tps.weights.assign(sol.data(), sol.data() + m);
    tps.affine[0] = sol(mi);
    tps.affine[1] = sol(mi + 1);
    tps.affine[2] = sol(mi + 2);
    return tps;
}

double sideOf(const TpsSurface& tps, const Vec3& point) {
    Vec3 d = point - tps.frame.origin;
    double uu = d.dot(tps.frame.u), vv = d.dot(tps.frame.v), hh = d.dot(tps.frame.n);
    return static_cast<double>(tps.sign) * (hh - tps.height(uu, vv));
}

TpsSurface orient(TpsSurface tps, const std::vector<Vec3>& samples, bool* tie) {
    if (samples.empty()) throw std::invalid_argument("orient: need at least 1 sample");
    tps.sign = +1;
    size_t positive = 0;
    for (const auto& p : samples)
        if (sideOf(tps, p) > 0.0) ++positive;
    size_t negative = samples.size() - positive;
    if (tie) *tie = (positive == negative);
    if (negative > positive) tps.sign = -1;
    return tps;
}

namespace {
std::vector<Vec3> farthestPointSubsample(const std::vector<Vec3>& pts, size_t k) {
    if (pts.size() <= k) return pts;
    std::vector<Vec3> out;
    out.reserve(k);
    std::vector<double> best(pts.size(), 1e300);
    size_t current = 0;  // deterministic start
    for (size_t round = 0; round < k; ++round) {
        out.push_back(pts[current]);
        size_t next = 0;
        double far = -1.0;
        for (size_t i = 0; i < pts.size(); ++i) {
            double d = (pts[i] - pts[current]).norm2();
            if (d < best[i]) best[i] = d;
            if (best[i] > far) {
                far = best[i];
                next = i;
            }
        }
        current = next;
    }
    return out;
}
}  // namespace

TpsSurface fitBreakSurface(const std::vector<Vec3>& fracturePoints,
                           const std::vector<Vec3>& fracturedInteriorSamples, size_t maxControls,
                           double ridge) {
    auto controls = farthestPointSubsample(fracturePoints, maxControls);
    PlaneFrame frame = fitPlane(controls);
    TpsSurface tps = fitTps(controls, frame, ridge);
    return orient(std::move(tps), fracturedInteriorSamples);
}

std::string tpsToJson(const TpsSurface& tps) {
    json j;
    j["frame"] = {tps.frame.origin.x, tps.frame.origin.y, tps.frame.origin.z,
                  tps.frame.u.x,      tps.frame.u.y,      tps.frame.u.z,
                  tps.frame.v.x,      tps.frame.v.y,      tps.frame.v.z,
                  tps.frame.n.x,      tps.frame.n.y,      tps.frame.n.z};
    j["control_u"] = tps.control_u;
    j["control_v"] = tps.control_v;
    j["weights"] = tps.weights;
    j["affine"] = {tps.affine[0], tps.affine[1], tps.affine[2]};
    j["sign"] = tps.sign;
    j["ridge"] = tps.ridge;
    return j.dump();
}

TpsSurface tpsFromJson(const std::string& text) {
    json j = json::parse(text);
    TpsSurface tps;
    auto f = j.at("frame");
    tps.frame.origin = {f[0], f[1], f[2]};
    tps.frame.u = {f[3], f[4], f[5]};
    tps.frame.v = {f[6], f[7], f[8]};
    tps.frame.n = {f[9], f[10], f[11]};
    tps.control_u = j.at("control_u").get<std::vector<double>>();
    tps.control_v = j.at("control_v").get<std::vector<double>>();
    tps.weights = j.at("weights").get<std::vector<double>>();
    auto a = j.at("affine");
    tps.affine[0] = a[0];
    tps.affine[1] = a[1];
    tps.affine[2] = a[2];
    tps.sign = j.at("sign");
    tps.ridge = j.at("ridge");
    if (tps.control_u.size() != tps.weights.size() || tps.control_v.size() != tps.weights.size())
        throw std::runtime_error("tps: inconsistent control/weight counts");
    return tps;
}

}  // namespace mendkit
