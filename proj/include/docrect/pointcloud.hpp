#pragma once

#include "docrect/energies.hpp"
#include "docrect/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace docrect {

/// Raw points plus the validity mask maintained by noise filtering.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<std::uint8_t> valid;

  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> pts) : points(std::move(pts)), valid(points.size(), 1) {}

  int size() const { return static_cast<int>(points.size()); }
  int valid_count() const;
};

/// Text format: one `x y z` per line; NaN/Inf rejected.
std::vector<Vec3> load_points(const std::filesystem::path& path);
void save_points(const std::filesystem::path& path, const std::vector<Vec3>& points);

/// Diagonal of the axis-aligned bounding box.
double bounding_diagonal(std::span<const Vec3> points);

struct ClosestPoint {
  BarycentricAnchor anchor;
  Vec3 footpoint = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double distance = 0.0;
};

/// Exhaustive closest point over every triangle.
ClosestPoint closest_point_brute(const SpaceMesh& mesh, const Vec3& x);

/// Closest-point queries against a fixed 3D mesh. Triangles are partitioned by
/// centroid (kd split) and every node keeps the bounds of its triangles'
/// vertices, so best-first traversal is exact.
class MeshProximity {
 public:
  explicit MeshProximity(const SpaceMesh& mesh);
  ClosestPoint closest(const Vec3& x) const;

 private:
  struct Node {
    Vec3 lo, hi;
    int begin, end;
    int left = -1, right = -1;
  };
  int build(int begin, int end);
  ClosestPoint make(int tri, const Vec3& x) const;

  const SpaceMesh* mesh_;
  std::vector<int> tris_;
  std::vector<Vec3> centroids_;
  std::vector<Node> nodes_;
};

ClosestPoint closest_point_on_mesh(const SpaceMesh& mesh, const Vec3& x);

/// Marks points within `phi` of the mesh valid. Returns the valid count and
/// throws when nothing survives.
int filter_noise(PointCloud& cloud, const MeshProximity& proximity, double phi);
int filter_noise(PointCloud& cloud, const SpaceMesh& mesh, double phi);

/// Footpoints and normals of the valid points (the frozen data of one solve).
std::vector<PointCorrespondence> correspondences(const PointCloud& cloud, const MeshProximity& proximity);

/// Filtering and footpoints in one pass over the cloud.
std::vector<PointCorrespondence> filter_and_correspond(PointCloud& cloud, const MeshProximity& proximity, double phi);

/// Exact k nearest neighbours by linear scan; the oracle for KdTree::knn.
template <int Dim>
std::vector<int> knn_linear(std::span<const Eigen::Matrix<double, Dim, 1>> points,
                            const Eigen::Matrix<double, Dim, 1>& query, int k);

}  // namespace docrect

#include <algorithm>
#include <numeric>

namespace docrect {

template <int Dim>
std::vector<int> knn_linear(std::span<const Eigen::Matrix<double, Dim, 1>> points,
                            const Eigen::Matrix<double, Dim, 1>& query, int k) {
  if (points.empty()) throw Error("k-nearest query over an empty point set");
  if (k < 1 || k > static_cast<int>(points.size())) throw Error("k must be in [1, point count]");
  std::vector<std::pair<double, int>> d(points.size());
  for (size_t i = 0; i < points.size(); ++i) d[i] = {(points[i] - query).squaredNorm(), static_cast<int>(i)};
  std::partial_sort(d.begin(), d.begin() + k, d.end());
  std::vector<int> out(k);
  for (int i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

}  // namespace docrect
