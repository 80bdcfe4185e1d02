#pragma once

#include "docrect/geometry.hpp"

#include <filesystem>
#include <optional>

namespace docrect {

/// Pinhole intrinsics. The camera centre is the origin of the camera frame and
/// the optical axis is +z; pixel v grows with camera y.
struct CameraIntrinsics {
  double f = 1.0;
  double ku = 1.0;
  double kv = 1.0;
  double cu = 0.0;
  double cv = 0.0;

  double fu() const { return f * ku; }
  double fv() const { return f * kv; }
  void validate() const;
};

/// Line through the camera centre. `n1` and `n2` span the orthogonal
/// complement of `direction`; (n1.p, n2.p) is the offset of p from the ray.
struct ViewingRay {
  Vec3 direction = Vec3::UnitZ();
  Vec3 n1 = Vec3::UnitX();
  Vec3 n2 = Vec3::UnitY();

  Vec2 residual(const Vec3& p) const { return {n1.dot(p), n2.dot(p)}; }
};

Vec2 project(const CameraIntrinsics& cam, const Vec3& p);
Vec3 back_project(const CameraIntrinsics& cam, const Vec2& pixel, double depth);
ViewingRay viewing_ray(const CameraIntrinsics& cam, const Vec2& pixel);

struct RayHit {
  double t = 0.0;  ///< distance along the unit direction
  Vec3 weights;
};

/// Determinant-form ray/triangle test for a ray from the origin.
std::optional<RayHit> intersect_ray_triangle(const Vec3& direction, const Vec3& a, const Vec3& b, const Vec3& c);

/// Nearest hit over every triangle of the mesh.
std::optional<BarycentricAnchor> intersect_ray_mesh(const ViewingRay& ray, const SpaceMesh& mesh);

/// Accelerated pixel -> mesh intersection: triangles are bucketed by their
/// projected pixel bounding boxes. Results match intersect_ray_mesh.
class RayCaster {
 public:
  RayCaster(const SpaceMesh& mesh, const CameraIntrinsics& cam);

  std::optional<BarycentricAnchor> cast(const Vec2& pixel) const;
  std::optional<BarycentricAnchor> cast(const Vec2& pixel, const ViewingRay& ray) const;

 private:
  const SpaceMesh* mesh_;
  CameraIntrinsics cam_;
  Vec2 origin_ = Vec2::Zero();
  double cell_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<int> cell_start_;
  std::vector<int> cell_items_;
  std::vector<int> always_;  // triangles reaching behind the camera
};

/// Reads `key value` lines with keys f, ku, kv, cu, cv; '#' starts a comment.
CameraIntrinsics load_intrinsics(const std::filesystem::path& path);
void save_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& cam);

}  // namespace docrect
