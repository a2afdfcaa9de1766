#pragma once

#include "mendkit/grid.hpp"
#include "mendkit/net.hpp"

namespace mendkit {

// Dense-grid evaluation of the learned occupancy fields followed by marching
// cubes at iso 0.5. The break surface is an open sheet clipped to the cube.
FieldGrid evaluateRestorationGrid(const AutodecoderModel& model, const Vec& z_c, const Vec& z_b,
                                  const SamplingCube& cube, int resolution, int workers = 0);
TriMesh reconstructRestoration(const AutodecoderModel& model, const Vec& z_c, const Vec& z_b,
                               const SamplingCube& cube, int resolution, int workers = 0);
TriMesh reconstructComplete(const AutodecoderModel& model, const Vec& z_c,
                            const SamplingCube& cube, int resolution, int workers = 0);
TriMesh reconstructBreak(const AutodecoderModel& model, const Vec& z_b, const SamplingCube& cube,
                         int resolution, int workers = 0);

}  // namespace mendkit
