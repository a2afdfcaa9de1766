#pragma once

#include <string>
#include <vector>

#include "mendkit/core.hpp"

namespace mendkit {

// Orthonormal plane frame fitted to scattered points.
struct PlaneFrame {
    Vec3 origin{0, 0, 0};
    Vec3 u{1, 0, 0};
    Vec3 v{0, 1, 0};
    Vec3 n{0, 0, 1};
};

// Oriented thin-plate-spline height field over a fitted plane. The positive
// side (after orientation) is the break set that contains the fractured
// material.
struct TpsSurface {
    PlaneFrame frame;
    std::vector<double> control_u, control_v;  // plane-domain control points
    std::vector<double> weights;               // kernel coefficients
    double affine[3] = {0, 0, 0};              // a0 + a1*u + a2*v
    int sign = +1;
    double ridge = 0.0;

    // Height of the surface above the plane at domain point (u, v).
    double height(double uu, double vv) const;
};

// Least-squares plane via covariance eigen-decomposition; the normal is the
// smallest-eigenvalue direction and the origin is the centroid.
PlaneFrame fitPlane(const std::vector<Vec3>& points);

// Solves the standard TPS system with kernel U(r) = r^2 log r on
// heights-above-plane; `ridge` is added to the kernel diagonal. Domain
// duplicates within 1e-7 are merged by height averaging.
TpsSurface fitTps(const std::vector<Vec3>& points, const PlaneFrame& frame, double ridge);

// sign * (height of point above plane - surface height at its projection).
// Positive means break-set side.
double sideOf(const TpsSurface& tps, const Vec3& point);

// Chooses sign so the majority of fractured-interior samples land positive.
// Exact ties keep sign = +1; the return flag reports a tie.
TpsSurface orient(TpsSurface tps, const std::vector<Vec3>& fracturedInteriorSamples,
                  bool* tie = nullptr);

inline int breakOccupancy(const TpsSurface& tps, const Vec3& point) {
    return sideOf(tps, point) > 0.0 ? 1 : 0;
}

// Fits the ground-truth break surface for one fracture: farthest-point
// subsample to at most maxControls, plane fit, TPS fit, then orientation.
TpsSurface fitBreakSurface(const std::vector<Vec3>& fracturePoints,
                           const std::vector<Vec3>& fracturedInteriorSamples,
                           size_t maxControls = 512, double ridge = 1e-6);

std::string tpsToJson(const TpsSurface& tps);
TpsSurface tpsFromJson(const std::string& text);

}  // namespace mendkit
