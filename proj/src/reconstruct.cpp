#include "mendkit/reconstruct.hpp"

namespace mendkit {

namespace {
Mat toMatrix(const std::vector<Vec3>& pts) {
    Mat xyz(static_cast<Eigen::Index>(pts.size()), 3);
    for (size_t i = 0; i < pts.size(); ++i) {
        xyz(static_cast<Eigen::Index>(i), 0) = pts[i].x;
        xyz(static_cast<Eigen::Index>(i), 1) = pts[i].y;
        xyz(static_cast<Eigen::Index>(i), 2) = pts[i].z;
    }
    return xyz;
}
}  // namespace

FieldGrid evaluateRestorationGrid(const AutodecoderModel& model, const Vec& z_c, const Vec& z_b,
                                  const SamplingCube& cube, int resolution, int workers) {
    FieldBatchFn field = [&](const std::vector<Vec3>& pts, std::vector<double>& out) {
        Mat xyz = toMatrix(pts);
        Vec f = mlpForward(model.fcfg, model.theta, z_c, xyz);
        Vec g = mlpForward(model.gcfg, model.phi, z_b, xyz);
        for (size_t i = 0; i < pts.size(); ++i) {
            auto ii = static_cast<Eigen::Index>(i);
            out[i] = f(ii) * (1.0 - g(ii));
        }
    };
    return evaluateGridBatch(field, cube, resolution, workers);
}

TriMesh reconstructRestoration(const AutodecoderModel& model, const Vec& z_c, const Vec& z_b,
                               const SamplingCube& cube, int resolution, int workers) {
    FieldGrid grid = evaluateRestorationGrid(model, z_c, z_b, cube, resolution, workers);
    sealGridBoundary(grid);
    return marchingCubes(grid, 0.5);
}

TriMesh reconstructComplete(const AutodecoderModel& model, const Vec& z_c,
                            const SamplingCube& cube, int resolution, int workers) {
    FieldBatchFn field = [&](const std::vector<Vec3>& pts, std::vector<double>& out) {
        Vec f = mlpForward(model.fcfg, model.theta, z_c, toMatrix(pts));
        for (size_t i = 0; i < pts.size(); ++i) out[i] = f(static_cast<Eigen::Index>(i));
    };
    FieldGrid grid = evaluateGridBatch(field, cube, resolution, workers);
    sealGridBoundary(grid);
    return marchingCubes(grid, 0.5);
}

TriMesh reconstructBreak(const AutodecoderModel& model, const Vec& z_b, const SamplingCube& cube,
                         int resolution, int workers) {
    FieldBatchFn field = [&](const std::vector<Vec3>& pts, std::vector<double>& out) {
        Vec g = mlpForward(model.gcfg, model.phi, z_b, toMatrix(pts));
        for (size_t i = 0; i < pts.size(); ++i) out[i] = g(static_cast<Eigen::Index>(i));
    };
    return marchingCubes(evaluateGridBatch(field, cube, resolution, workers), 0.5);
}

}  // namespace mendkit
