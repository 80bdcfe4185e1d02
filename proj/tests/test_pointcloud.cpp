#include "docrect/kdtree.hpp"
#include "docrect/pointcloud.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

using namespace docrect;

TEST_CASE("kd-tree k nearest equals the linear scan") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(2000);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), 0.3 * u(rng));
  // Duplicates exercise the index tie-break.
  for (int i = 0; i < 50; ++i) pts[1000 + i] = pts[i];
  const KdTree<3> tree(pts);
  std::uniform_int_distribution<int> kk(1, 12);
  for (int s = 0; s < 1000; ++s) {
    const Vec3 q = s % 10 == 0 ? pts[s] : Vec3(u(rng), u(rng), u(rng));
    const int k = kk(rng);
    CHECK(tree.knn(q, k) == knn_linear<3>(pts, q, k));
  }
}

TEST_CASE("kd-tree radius query equals the linear scan") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> pts(500);
  for (auto& p : pts) p = Vec2(u(rng), u(rng));
  const KdTree<2> tree(pts);
  for (int s = 0; s < 200; ++s) {
    const Vec2 q(u(rng), u(rng));
    auto got = tree.within(q, 0.1);
    std::sort(got.begin(), got.end());
    std::vector<int> want;
    for (int i = 0; i < 500; ++i)
      if ((pts[i] - q).norm() <= 0.1) want.push_back(i);
    CHECK(got == want);
  }
}

TEST_CASE("bvh closest point equals the exhaustive search") {
  std::mt19937_64 rng(13);
  const SpaceMesh mesh = testing::wavy_sheet({8, 11}, rng);
  const MeshProximity prox(mesh);
  std::uniform_real_distribution<double> u(-1.0, 1.0), z(1.5, 2.6);
  for (int s = 0; s < 1000; ++s) {
    const Vec3 x(u(rng), u(rng), z(rng));
    const auto a = closest_point_brute(mesh, x);
    const auto b = prox.closest(x);
    CHECK(std::abs(a.distance - b.distance) < 1e-12);
    CHECK((a.footpoint - b.footpoint).norm() < 1e-8);
    CHECK(a.anchor.face == b.anchor.face);
    CHECK(a.anchor.triangle == b.anchor.triangle);
    CHECK(std::abs(a.normal.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("noise filter keeps points near the mesh") {
  std::mt19937_64 rng(14);
  const SpaceMesh mesh = testing::wavy_sheet({6, 8}, rng);
  std::vector<Vec3> pts;
  std::vector<bool> near;
  std::uniform_real_distribution<double> u(-1.0, 1.0), z(1.0, 3.0);
  for (int i = 0; i < 400; ++i) {
    pts.emplace_back(0.4 * u(rng), 0.6 * u(rng), z(rng));
    near.push_back(closest_point_brute(mesh, pts.back()).distance <= 0.1);
  }
  PointCloud cloud(pts);
  const int n = filter_noise(cloud, mesh, 0.1);
  CHECK(n == std::count(near.begin(), near.end(), true));
  for (int i = 0; i < cloud.size(); ++i) CHECK(bool(cloud.valid[i]) == near[i]);
  const MeshProximity prox(mesh);
  CHECK(static_cast<int>(correspondences(cloud, prox).size()) == n);
  CHECK(static_cast<int>(filter_and_correspond(cloud, prox, 0.1).size()) == n);

  PointCloud far(std::vector<Vec3>{Vec3(10, 10, 10)});
  CHECK_THROWS_AS(filter_noise(far, mesh, 0.1), Error);
}

TEST_CASE("bounding diagonal and point file round trip") {
  const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(3, 0, 0), Vec3(0, 4, 12)};
  CHECK(bounding_diagonal(pts) == doctest::Approx(13.0));
  const auto path = std::filesystem::temp_directory_path() / "docrect_points_test.xyz";
  save_points(path, pts);
  CHECK(load_points(path) == pts);
  {
    std::ofstream out(path);
    out << "1 2 3\nnan 0 0\n";
  }
  CHECK_THROWS_AS(load_points(path), Error);
  std::filesystem::remove(path);
}
