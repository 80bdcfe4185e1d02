#include "docrect/energies.hpp"
#include "docrect/gradcheck.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace docrect;

namespace {

Eigen::Matrix3d some_rotation() {
  return (Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized())).toRotationMatrix();
}

}  // namespace

TEST_CASE("finite differences agree with every analytic gradient") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    GradCheckOptions opt;
    opt.seed = seed;
    const auto rep = run_gradcheck(opt);
    for (const auto& t : rep.terms) {
      INFO("seed " << seed << " term " << t.term);
      CHECK(t.pass());
    }
  }
}

TEST_CASE("gradient check catches a sign error") {
  GradCheckOptions opt;
  opt.mutate = true;
  const auto rep = run_gradcheck(opt);
  CHECK_FALSE(rep.pass());
  CHECK_FALSE(rep.terms.front().pass());
}

TEST_CASE("isometry term vanishes on a rigid embedding") {
  std::mt19937_64 rng(21);
  const PlaneMesh plane = testing::jittered_plane({6, 8}, rng);
  const MeshPair pair(testing::rigid_embedding(plane, some_rotation(), Vec3(0.1, -0.2, 3.0)), plane);
  CHECK(e_iso(pair) < 1e-24);
  for (int f = 0; f < pair.dims().face_count(); ++f) CHECK(iso_residuals(pair, f).norm() < 1e-12);
}

TEST_CASE("isometry residuals of a uniformly scaled plane") {
  std::mt19937_64 rng(22);
  const PlaneMesh plane = testing::jittered_plane({4, 5}, rng);
  std::vector<Vec2> scaled;
  for (const auto& p : plane.vertices()) scaled.push_back(1.1 * p);
  const MeshPair pair(testing::rigid_embedding(plane, Eigen::Matrix3d::Identity(), Vec3(0, 0, 1)),
                      PlaneMesh(plane.dims(), scaled));
  double want = 0.0;
  for (int f = 0; f < plane.face_count(); ++f) {
    const auto q = plane.dims().face_vertices(f);
    const Vec2 d = plane.vertex(q[0]) - plane.vertex(q[2]);
    const Vec2 e = plane.vertex(q[1]) - plane.vertex(q[3]);
    const Vec3 c = -0.21 * Vec3(d.squaredNorm(), e.squaredNorm(), d.dot(e));
    CHECK((iso_residuals(pair, f) - c).norm() < 1e-12);
    want += c.squaredNorm();
  }
  CHECK(e_iso(pair) == doctest::Approx(want));
}

TEST_CASE("fairness of a displaced interior vertex") {
  const GridDims d{5, 5};
  std::vector<Vec3> v;
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) v.emplace_back(0.3 * i, 0.3 * j, 1.0);
  SpaceMesh mesh(d, v);
  CHECK(e_fair<3>(mesh) < 1e-24);
  const Vec3 disp(0.01, -0.02, 0.05);
  mesh.at(2, 2) += disp;
  // Three second differences per grid direction see the vertex: -2d, d, d.
  CHECK(e_fair<3>(mesh) == doctest::Approx(12.0 * disp.squaredNorm()));
  mesh.at(2, 2) -= disp;
  mesh.at(0, 0) += disp;
  // A corner enters one difference per direction with coefficient 1.
  CHECK(e_fair<3>(mesh) == doctest::Approx(2.0 * disp.squaredNorm()));
}

TEST_CASE("fairness is zero on any affine grid") {
  const GridDims d{6, 4};
  std::vector<Vec2> v;
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 6; ++i) v.push_back(Vec2(1, 2) + i * Vec2(0.3, 0.1) + j * Vec2(-0.05, 0.4));
  CHECK(e_fair<2>(PlaneMesh(d, v)) < 1e-24);
}

TEST_CASE("data term blends point and tangent distance") {
  const GridDims d{2, 2};
  const SpaceMesh mesh(d, {Vec3(0, 0, 1), Vec3(1, 0, 1), Vec3(1, 1, 1), Vec3(0, 1, 1)});
  PointCorrespondence c;
  c.anchor.face = 0;
  c.anchor.triangle = 0;
  c.anchor.weights = Vec3(0.5, 0.25, 0.25);
  c.normal = Vec3::UnitZ();
  const Vec3 foot = barycentric_eval(mesh, c.anchor);
  c.point = foot + Vec3(0.1, 0.0, 0.2);
  const std::vector<PointCorrespondence> one{c};
  const double want = kPointWeight * (0.01 + 0.04) + kTangentWeight * 0.04;
  CHECK(e_dist(mesh, one) == doctest::Approx(want));
  std::vector<PointCorrespondence> two{c, c};
  two[1].point = foot;
  CHECK(e_dist(mesh, two) == doctest::Approx(want / 2));
  CHECK_THROWS_AS(e_dist(mesh, std::vector<PointCorrespondence>{}), Error);
}

TEST_CASE("line and ray terms are zero for consistent features") {
  const auto st = random_state(5);
  std::vector<FeatureLine> lines = st.lines;
  for (auto& l : lines) {
    // Put the line through two of its own points and the rays through all.
    std::vector<Vec2> pts = l.plane_points(st.pair.plane);
    const Vec2 a = pts.front(), b = pts.back();
    const Vec2 n = Vec2(-(b - a).y(), (b - a).x()).normalized();
    l.fitted.theta = std::atan2(n.y(), n.x());
    l.fitted.offset = n.dot(a);
    for (int k = 0; k < l.size(); ++k) {
      const Vec3 p = barycentric_eval(st.pair.space, l.anchors[k]);
      const Vec3 dir = p.normalized();
      l.rays[k].direction = dir;
      l.rays[k].n1 = dir.unitOrthogonal();
      l.rays[k].n2 = dir.cross(l.rays[k].n1);
    }
    l.anchors = {l.anchors.front(), l.anchors.back()};
    l.rays = {l.rays.front(), l.rays.back()};
  }
  CHECK(e_line(st.pair.plane, lines) < 1e-24);
  CHECK(e_ray(st.pair.space, lines) < 1e-24);
}

TEST_CASE("weighted total and variable packing") {
  const auto st = random_state(9);
  WeightSchedule w;
  w.line = 2.0;
  w.ray = 3.0;
  const auto rep = total_objective(st.pair, st.correspondences, st.lines, w, true);
  const double want = w.iso * rep.iso + w.dist * rep.dist + w.fair_space * rep.fair_space +
                      w.fair_plane * rep.fair_plane + w.line * rep.line + w.ray * rep.ray;
  CHECK(rep.total == doctest::Approx(want));

  const Eigen::VectorXd x = pack_variables(st.pair, st.lines);
  CHECK(x.size() == 5 * st.pair.space.vertex_count() + 2 * static_cast<int>(st.lines.size()));
  CHECK(flatten(rep.gradient).size() == x.size());
  MeshPair pair = st.pair;
  std::vector<FeatureLine> lines = st.lines;
  unpack_variables(x * 1.0, pair, lines);
  CHECK(pack_variables(pair, lines) == x);

  WeightSchedule bad;
  bad.iso = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
