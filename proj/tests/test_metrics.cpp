#include <doctest.h>

#include <cmath>

#include "mendkit/metrics.hpp"
#include "mendkit/selftest.hpp"
#include "mendkit/toyshapes.hpp"

using namespace mendkit;

TEST_CASE("chamfer: identical meshes with a shared sample seed give exactly zero") {
    TriMesh sphere = icosphere(0.3, 2);
    CHECK(chamfer(sphere, sphere, 5000, 11) == 0.0);
}

TEST_CASE("chamfer: independent seeds stay below the sampling-noise bound") {
    TriMesh sphere = icosphere(0.3, 3);
    TriMesh copy = sphere;
    auto a = sampleSurface(sphere, 30000, 1);
    auto b = sampleSurface(copy, 30000, 2);
    std::vector<Vec3> pa, pb;
    for (const auto& s : a) pa.push_back(s.point);
    for (const auto& s : b) pb.push_back(s.point);
    CHECK(chamferPoints(pa, pb) < 1e-3);
}

TEST_CASE("chamfer: symmetric, non-negative, degenerate n=1") {
    TriMesh s1 = icosphere(0.3, 2);
    TriMesh s2 = icosphere(0.25, 2);
    double ab = chamfer(s1, s2, 2000, 5);
    double ba = chamfer(s2, s1, 2000, 5);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab > 0.0);

    double single = chamfer(s1, s2, 1, 9);
    auto pa = sampleSurface(s1, 1, 9), pb = sampleSurface(s2, 1, 9);
    CHECK(single == doctest::Approx((pa[0].point - pb[0].point).norm2()).epsilon(1e-12));

    CHECK_THROWS(chamfer(TriMesh{}, s2, 10, 1));
}

TEST_CASE("chamfer and nfre: spatial index equals brute force (oracle suite)") {
    auto report = suiteMetricOracles(10, 1200, 314159);
    CHECK(report.failures == 0);
    CHECK(report.checks == 30);
}

TEST_CASE("nfre: definition cases") {
    TriMesh shell = icosphere(0.3, 3);
    TriMesh gt = icosphere(0.3, 3);
    auto shellSamples = sampleSurface(shell, 4000, 3);
    std::vector<Vec3> nonfracture;
    for (const auto& s : shellSamples) nonfracture.push_back(s.point);

    // Prediction equals ground truth: the far-from-gt condition fails everywhere.
    CHECK(nfre(gt, gt, nonfracture, 0.02, 4000, 3) == 0.0);

    // Prediction hugs the non-fracture shell while the true restoration is far away.
    TriMesh farGt = icosphere(0.05, 2);
    for (auto& v : farGt.vertices) v += Vec3{5, 5, 5};
    farGt.watertight = computeWatertight(farGt);
    CHECK(nfre(shell, farGt, nonfracture, 0.02, 4000, 3) == 1.0);

    CHECK_THROWS(nfre(TriMesh{}, gt, nonfracture, 0.02, 100, 1));
}

TEST_CASE("nfre: first condition monotone in eta (second disabled)") {
    Rng rng(21);
    std::vector<Vec3> pred, shell;
    for (int i = 0; i < 3000; ++i) {
        pred.push_back(uniformUnitVector(rng) * 0.3);
        shell.push_back(uniformUnitVector(rng) * uniformReal(rng, 0.28, 0.33));
    }
    // Disable the second condition with a ground truth far away.
    std::vector<Vec3> farGt{{100, 100, 100}};
    double prev = -1.0;
    for (double eta : {0.005, 0.01, 0.02, 0.05, 0.1}) {
        double v = nfrePoints(pred, farGt, shell, eta);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("EvalReport: NE% counting and equal class weighting") {
    EvalReport report;
    for (int i = 0; i < 10; ++i) {
        EvalRow row;
        row.shape_id = "a_" + std::to_string(i);
        row.shape_class = i < 10 ? "a" : "a";
        row.non_empty = i != 3;  // one empty among 10
        row.cd = 0.5;
        row.nfre = 0.1;
        report.rows.push_back(row);
    }
    report.aggregate();
    CHECK(report.ne_percent == doctest::Approx(90.0));

    // Two classes of sizes 10 and 30 with per-class CD means a and b.
    EvalReport weighted;
    for (int i = 0; i < 10; ++i)
        weighted.rows.push_back({"a_" + std::to_string(i), "a", true, 0.2, 0.0, 0.02, 100, 1});
    for (int i = 0; i < 30; ++i)
        weighted.rows.push_back({"b_" + std::to_string(i), "b", true, 0.6, 0.0, 0.02, 100, 1});
    weighted.aggregate();
    CHECK(weighted.mean_cd == doctest::Approx((0.2 + 0.6) / 2.0));
    CHECK(weighted.ne_percent == doctest::Approx(100.0));
}
