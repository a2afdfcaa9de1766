#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mendkit/net.hpp"

namespace mendkit {

struct SuiteReport {
    std::string name;
    size_t checks = 0;
    size_t failures = 0;
    double max_error = 0.0;
    std::string detail;
};

using ComposeFn = std::function<double(double, double)>;

// Product T-norm identities: partition (fracture + restoration = complete)
// on random pairs plus exact boolean corners. The compose functions are
// injectable so a broken composition is provably caught.
SuiteReport suiteTnormPartition(size_t pairs, double tol, uint64_t seed,
                                ComposeFn fractureFn = nullptr,
                                ComposeFn restorationFn = nullptr);

// Reverse-mode gradients of the full composed loss (reconstruction terms,
// code regularizer, and both inference penalties) against central finite
// differences with step h on randomly sampled parameter coordinates.
SuiteReport suiteGradcheck(int models, int probePoints, int coordsPerGroup,
                           const MlpConfig& fcfg, const MlpConfig& gcfg, double h, double tol,
                           uint64_t seed);

// TPS interpolation with ridge 0: residuals, kernel side conditions, and
// side_of at controls, all to tolerance.
SuiteReport suiteTpsInterpolation(int controls, double tol, uint64_t seed);

// Marching cubes against the analytic sphere: chamfer bound at the fine
// resolution and strict improvement under refinement.
SuiteReport suiteMarchingCubes(int resCoarse, int resFine, size_t samples, uint64_t seed);

// Spatial-index chamfer/NFRE against brute-force all-pairs recomputation
// (exact equality on identical samples), NFRE(gt,gt) = 0, NE% arithmetic.
SuiteReport suiteMetricOracles(int cases, size_t samplesPerCase, uint64_t seed);

// Full composed inference/training loss on one batch; used by the gradient
// suite and by tests that need the scalar value alone.
double composedLossValue(const AutodecoderModel& model, const Vec& zc, const Vec& zb,
                         const Mat& xyz, const Mat& yF, const Mat& yC, const Mat& yB,
                         const Mat& yR, double lambdaReg, double lambdaNer, double lambdaProx);

std::string formatSuiteReports(const std::vector<SuiteReport>& reports);

}  // namespace mendkit
