#include <doctest.h>

#include <cmath>

#include "mendkit/selftest.hpp"
#include "mendkit/tps.hpp"

using namespace mendkit;

namespace {
TpsSurface flatTpsAtZ0() {
    // Four corners of a square on z = 0.
    std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0.5, 0.3, 0}};
    PlaneFrame frame = fitPlane(pts);
    TpsSurface tps = fitTps(pts, frame, 0.0);
    // Normalize orientation so +z is the positive side.
    if (sideOf(tps, {0, 0, 1}) < 0) tps.sign = -tps.sign;
    return tps;
}
}  // namespace

TEST_CASE("fit_plane: points exactly on z=0.3") {
    std::vector<Vec3> pts;
    Rng rng(9);
    for (int i = 0; i < 40; ++i)
        pts.push_back({uniformReal(rng, -1, 1), uniformReal(rng, -1, 1), 0.3});
    PlaneFrame frame = fitPlane(pts);
    CHECK(std::fabs(std::fabs(frame.n.z) - 1.0) < 1e-9);
    CHECK(frame.origin.z == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("fit_plane: noisy plane normal within 2 degrees") {
    Rng rng(77);
    Vec3 trueN = Vec3{0.3, -0.5, 0.8}.normalized();
    Vec3 u = trueN.cross(Vec3{0, 0, 1}).normalized();
    Vec3 v = trueN.cross(u);
    std::vector<Vec3> pts;
    for (int i = 0; i < 400; ++i) {
        Vec3 p = u * uniformReal(rng, -0.5, 0.5) + v * uniformReal(rng, -0.5, 0.5);
        p += trueN * normalReal(rng, 0.0, 0.01);
        pts.push_back(p);
    }
    PlaneFrame frame = fitPlane(pts);
    double cosAngle = std::fabs(frame.n.dot(trueN));
    CHECK(std::acos(std::fmin(1.0, cosAngle)) < 2.0 * M_PI / 180.0);
}

TEST_CASE("fit_plane: three points determine the plane exactly") {
    std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0.5}, {0, 1, -0.25}};
    PlaneFrame frame = fitPlane(pts);
    for (const auto& p : pts) CHECK(std::fabs((p - frame.origin).dot(frame.n)) < 1e-9);
}

TEST_CASE("fit_plane: collinear input is rejected") {
    std::vector<Vec3> pts;
    for (int i = 0; i < 10; ++i) pts.push_back({0.1 * i, 0.2 * i, 0.3 * i});
    CHECK_THROWS(fitPlane(pts));
    CHECK_THROWS(fitPlane(std::vector<Vec3>{{0, 0, 0}, {1, 1, 1}}));
}

TEST_CASE("fit_plane: frame is orthonormal to 1e-9") {
    Rng rng(123);
    std::vector<Vec3> pts;
    for (int i = 0; i < 50; ++i)
        pts.push_back({uniformReal(rng, 0, 1), uniformReal(rng, 0, 1),
                       uniformReal(rng, -0.2, 0.2)});
    PlaneFrame f = fitPlane(pts);
    CHECK(std::fabs(f.u.norm() - 1) < 1e-9);
    CHECK(std::fabs(f.v.norm() - 1) < 1e-9);
    CHECK(std::fabs(f.n.norm() - 1) < 1e-9);
    CHECK(std::fabs(f.u.dot(f.v)) < 1e-9);
    CHECK(std::fabs(f.u.dot(f.n)) < 1e-9);
    CHECK(std::fabs(f.v.dot(f.n)) < 1e-9);
}

TEST_CASE("fit_tps: coplanar points give zero kernel weights") {
    std::vector<Vec3> pts;
    Rng rng(55);
    for (int i = 0; i < 30; ++i)
        pts.push_back({uniformReal(rng, 0, 1), uniformReal(rng, 0, 1), 0.42});
    PlaneFrame frame = fitPlane(pts);
    TpsSurface tps = fitTps(pts, frame, 0.0);
    for (double w : tps.weights) CHECK(std::fabs(w) < 1e-8);
    for (const auto& p : pts) CHECK(std::fabs(sideOf(tps, p)) < 1e-8);
}

TEST_CASE("fit_tps: 50 random controls interpolate to 1e-8 (ridge 0)") {
    auto report = suiteTpsInterpolation(50, 1e-8, 2024);
    CHECK(report.failures == 0);
}

TEST_CASE("fit_tps: ridge trades interpolation for smoothness") {
    Rng rng(66);
    std::vector<Vec3> pts;
    for (int i = 0; i < 50; ++i)
        pts.push_back({uniformReal(rng, 0, 1), uniformReal(rng, 0, 1),
                       uniformReal(rng, -0.25, 0.25)});
    PlaneFrame frame = fitPlane(pts);
    auto maxResidual = [&](double ridge) {
        TpsSurface tps = fitTps(pts, frame, ridge);
        double worst = 0;
        for (const auto& p : pts) worst = std::fmax(worst, std::fabs(sideOf(tps, p)));
        return worst;
    };
    CHECK(maxResidual(1e-3) > maxResidual(0.0));
}

TEST_CASE("fit_tps: duplicate domain points are merged by height averaging") {
    std::vector<Vec3> pts = {{0, 0, 0},   {1, 0, 0.1}, {0, 1, -0.1}, {1, 1, 0.05},
                             {0.5, 0.5, 0.2}, {0.5, 0.5, 0.4}};  // duplicate (u,v)
    PlaneFrame frame;  // identity frame: z is height
    TpsSurface tps = fitTps(pts, frame, 0.0);
    CHECK(tps.weights.size() == 5);
    CHECK(tps.height(0.5, 0.5) == doctest::Approx(0.3).epsilon(1e-9));
    CHECK_THROWS(fitTps(std::vector<Vec3>{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, frame, 0.0));
}

TEST_CASE("side_of: flat surface signed heights and sign flip") {
    TpsSurface tps = flatTpsAtZ0();
    CHECK(sideOf(tps, {0.3, 0.4, 0.5}) == doctest::Approx(0.5).epsilon(1e-9));
    TpsSurface flipped = tps;
    flipped.sign = -flipped.sign;
    CHECK(sideOf(flipped, {0.3, 0.4, 0.5}) == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("break_occupancy: signs and the open boundary rule") {
    TpsSurface tps = flatTpsAtZ0();
    CHECK(breakOccupancy(tps, {0.5, 0.5, 0.5}) == 1);
    CHECK(breakOccupancy(tps, {0.5, 0.5, -0.5}) == 0);
    CHECK(breakOccupancy(tps, {0.25, 0.25, 0.0}) == 0);  // on the surface
}

TEST_CASE("orient: unanimous and majority splits") {
    TpsSurface tps = flatTpsAtZ0();

    std::vector<Vec3> above = {{0.2, 0.2, 0.4}, {0.8, 0.1, 0.2}, {0.5, 0.9, 1.0}};
    TpsSurface o1 = orient(tps, above);
    for (const auto& p : above) CHECK(sideOf(o1, p) > 0);

    std::vector<Vec3> below = {{0.2, 0.2, -0.4}, {0.8, 0.1, -0.2}};
    TpsSurface o2 = orient(tps, below);
    for (const auto& p : below) CHECK(sideOf(o2, p) > 0);

    // 70/30 split above: the majority side wins and a recount confirms it.
    std::vector<Vec3> split;
    Rng rng(8);
    for (int i = 0; i < 70; ++i)
        split.push_back({uniformReal(rng, 0, 1), uniformReal(rng, 0, 1),
                         uniformReal(rng, 0.05, 0.5)});
    for (int i = 0; i < 30; ++i)
        split.push_back({uniformReal(rng, 0, 1), uniformReal(rng, 0, 1),
                         uniformReal(rng, -0.5, -0.05)});
    TpsSurface o3 = orient(tps, split);
    size_t positive = 0;
    for (const auto& p : split)
        if (sideOf(o3, p) > 0) ++positive;
    CHECK(positive == 70);

    // Exact tie keeps sign = +1 and reports the tie.
    std::vector<Vec3> tie = {{0.5, 0.5, 0.3}, {0.5, 0.5, -0.3}};
    bool wasTie = false;
    TpsSurface o4 = orient(tps, tie, &wasTie);
    CHECK(wasTie);
    CHECK(o4.sign == +1);
    CHECK_THROWS(orient(tps, {}));
}

TEST_CASE("fit_tps: deterministic solve and JSON round trip") {
    Rng rng(1001);
    std::vector<Vec3> pts;
    for (int i = 0; i < 40; ++i)
        pts.push_back({uniformReal(rng, 0, 1), uniformReal(rng, 0, 1),
                       uniformReal(rng, -0.2, 0.2)});
    PlaneFrame frame = fitPlane(pts);
    TpsSurface a = fitTps(pts, frame, 1e-6);
    TpsSurface b = fitTps(pts, frame, 1e-6);
    CHECK(a.weights == b.weights);

    TpsSurface c = tpsFromJson(tpsToJson(a));
    CHECK(c.weights == a.weights);
    CHECK(c.sign == a.sign);
    CHECK(c.ridge == a.ridge);
    Rng probe(7);
    for (int i = 0; i < 100; ++i) {
        Vec3 p{uniformReal(probe, -1, 1), uniformReal(probe, -1, 1), uniformReal(probe, -1, 1)};
        CHECK(sideOf(a, p) == sideOf(c, p));
    }
}

TEST_CASE("fit_break_surface: control budget and orientation") {
    // Gentle height field over a known plane, far more points than controls.
    Rng rng(31);
    std::vector<Vec3> fracturePts;
    for (int i = 0; i < 3000; ++i) {
        double u = uniformReal(rng, -0.4, 0.4), v = uniformReal(rng, -0.4, 0.4);
        fracturePts.push_back({u, v, 0.05 * std::sin(6 * u) * std::cos(5 * v)});
    }
    std::vector<Vec3> interior;
    for (int i = 0; i < 500; ++i)
        interior.push_back({uniformReal(rng, -0.4, 0.4), uniformReal(rng, -0.4, 0.4),
                            uniformReal(rng, -0.45, -0.2)});
    TpsSurface tps = fitBreakSurface(fracturePts, interior, 256, 1e-6);
    CHECK(tps.weights.size() <= 256);
    size_t positive = 0;
    for (const auto& p : interior)
        if (sideOf(tps, p) > 0) ++positive;
    CHECK(positive > interior.size() / 2);
    // The fitted sheet tracks the true surface away from the rim.
    double worst = 0;
    for (int i = 0; i < 200; ++i) {
        double u = uniformReal(rng, -0.3, 0.3), v = uniformReal(rng, -0.3, 0.3);
        Vec3 p{u, v, 0.05 * std::sin(6 * u) * std::cos(5 * v)};
        worst = std::fmax(worst, std::fabs(sideOf(tps, p)));
    }
    CHECK(worst < 0.01);
}
