#pragma once

#include "docrect/geometry.hpp"

#include <cmath>
#include <random>

namespace testing {

using docrect::GridDims;
using docrect::PlaneMesh;
using docrect::SpaceMesh;
using docrect::Vec2;
using docrect::Vec3;

// Jittered grid over [0, sx] x [0, sy].
inline PlaneMesh jittered_plane(GridDims d, std::mt19937_64& rng, double sx = 1.0, double sy = 1.5,
                                double jitter = 0.15) {
  std::uniform_real_distribution<double> u(-jitter, jitter);
  const double hx = sx / (d.n1 - 1), hy = sy / (d.n2 - 1);
  std::vector<Vec2> v(d.vertex_count());
  for (int j = 0; j < d.n2; ++j)
    for (int i = 0; i < d.n1; ++i) v[d.vertex(i, j)] = Vec2((i + u(rng)) * hx, (j + u(rng)) * hy);
  return PlaneMesh(d, std::move(v));
}

// Wavy sheet in front of the camera (z around `depth`).
inline SpaceMesh wavy_sheet(GridDims d, std::mt19937_64& rng, double depth = 2.0) {
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  std::vector<Vec3> v(d.vertex_count());
  for (int j = 0; j < d.n2; ++j)
    for (int i = 0; i < d.n1; ++i) {
      const double x = -0.5 + double(i) / (d.n1 - 1);
      const double y = -0.75 + 1.5 * j / (d.n2 - 1);
      v[d.vertex(i, j)] = Vec3(x + u(rng), y + u(rng), depth + 0.2 * std::sin(3.0 * x) + 0.1 * y * y + u(rng));
    }
  return SpaceMesh(d, std::move(v));
}

// Flat sheet embedded isometrically: plane (x, y) -> R (x, y, 0) + t.
inline SpaceMesh rigid_embedding(const PlaneMesh& plane, const Eigen::Matrix3d& r, const Vec3& t) {
  std::vector<Vec3> v;
  for (const auto& p : plane.vertices()) v.push_back(r * Vec3(p.x(), p.y(), 0.0) + t);
  return SpaceMesh(plane.dims(), std::move(v));
}

}  // namespace testing
