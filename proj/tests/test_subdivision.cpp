#include "docrect/subdivision.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace docrect;

namespace {

// Uniform bicubic B-spline refinement masks as tensor products of the 1D
// even (1 6 1)/8 and odd (1 1)/2 rules.
Vec3 tensor_rule(const SpaceMesh& m, int ni, int nj) {
  auto mask = [](int n) -> std::vector<std::pair<int, double>> {
    if (n % 2 == 0) return {{n / 2 - 1, 1.0 / 8}, {n / 2, 6.0 / 8}, {n / 2 + 1, 1.0 / 8}};
    return {{n / 2, 0.5}, {n / 2 + 1, 0.5}};
  };
  Vec3 out = Vec3::Zero();
  for (auto [i, wi] : mask(ni))
    for (auto [j, wj] : mask(nj)) out += wi * wj * m.at(i, j);
  return out;
}

}  // namespace

TEST_CASE("interior vertices follow the tensor-product spline rules") {
  std::mt19937_64 rng(41);
  const SpaceMesh m = testing::wavy_sheet({6, 7}, rng);
  const SpaceMesh s = catmull_clark<3>(m);
  CHECK(s.dims() == GridDims{11, 13});
  for (int j = 2; j <= 10; ++j)
    for (int i = 2; i <= 8; ++i) {
      INFO("vertex " << i << "," << j);
      CHECK((s.at(i, j) - tensor_rule(m, i, j)).norm() < 1e-12);
    }
}

TEST_CASE("boundary curves use the curve rules and corners stay") {
  std::mt19937_64 rng(42);
  const SpaceMesh m = testing::wavy_sheet({5, 4}, rng);
  const SpaceMesh s = catmull_clark<3>(m);
  CHECK(s.at(0, 0) == m.at(0, 0));
  CHECK(s.at(8, 6) == m.at(4, 3));
  CHECK((s.at(3, 0) - 0.5 * (m.at(1, 0) + m.at(2, 0))).norm() < 1e-15);
  CHECK((s.at(4, 0) - (m.at(1, 0) + 6.0 * m.at(2, 0) + m.at(3, 0)) / 8.0).norm() < 1e-15);
  CHECK((s.at(8, 2) - (m.at(4, 0) + 6.0 * m.at(4, 1) + m.at(4, 2)) / 8.0).norm() < 1e-15);
}

TEST_CASE("an affine grid refines to the half-spacing grid") {
  const GridDims d{4, 5};
  const Vec2 o(0.3, -0.2), a(0.5, 0.1), b(-0.1, 0.6);
  std::vector<Vec2> v;
  for (int j = 0; j < d.n2; ++j)
    for (int i = 0; i < d.n1; ++i) v.push_back(o + i * a + j * b);
  const PlaneMesh s = catmull_clark<2>(PlaneMesh(d, v));
  for (int j = 0; j < s.dims().n2; ++j)
    for (int i = 0; i < s.dims().n1; ++i) CHECK((s.at(i, j) - (o + 0.5 * i * a + 0.5 * j * b)).norm() < 1e-13);
}

TEST_CASE("subdivision keeps a rigid embedding rigid in the interior") {
  std::mt19937_64 rng(43);
  const PlaneMesh plane = testing::jittered_plane({5, 6}, rng);
  const Eigen::Matrix3d r = Eigen::AngleAxisd(0.4, Vec3(0, 1, 1).normalized()).toRotationMatrix();
  const Vec3 t(0.2, 0.1, 3.0);
  const MeshPair sub = subdivide_pair(MeshPair(testing::rigid_embedding(plane, r, t), plane));
  for (int i = 0; i < sub.space.vertex_count(); ++i) {
    const Vec2& p = sub.plane.vertex(i);
    CHECK((sub.space.vertex(i) - (r * Vec3(p.x(), p.y(), 0.0) + t)).norm() < 1e-12);
  }
}

TEST_CASE("anchor remapping preserves planar positions") {
  std::mt19937_64 rng(44);
  const PlaneMesh plane = testing::jittered_plane({5, 6}, rng, 1.0, 1.5, 0.05);
  const MeshPair before(testing::rigid_embedding(plane, Eigen::Matrix3d::Identity(), Vec3(0, 0, 2)), plane);
  const MeshPair after = subdivide_pair(before);
  std::uniform_int_distribution<int> face(0, plane.face_count() - 1);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<BarycentricAnchor> anchors;
  for (int k = 0; k < 300; ++k) {
    BarycentricAnchor a;
    a.face = face(rng);
    a.triangle = k % 2;
    a.weights = Vec3(u(rng), u(rng), u(rng));
    a.weights /= a.weights.sum();
    anchors.push_back(a);
  }
  RemapReport rep;
  const auto moved = remap_anchors(before, after, anchors, &rep);
  REQUIRE(moved.size() == anchors.size());
  int exact = 0;
  for (size_t k = 0; k < anchors.size(); ++k) {
    const double d = (barycentric_eval(after.plane, moved[k]) - barycentric_eval(before.plane, anchors[k])).norm();
    if (d < 1e-12) ++exact;
  }
  // Boundary smoothing pulls the outline inward; only those points clamp.
  CHECK(exact + rep.clamped == static_cast<int>(anchors.size()));
  CHECK(exact > 250);
}
