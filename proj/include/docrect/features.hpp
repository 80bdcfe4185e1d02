#pragma once

#include "docrect/camera.hpp"
#include "docrect/geometry.hpp"

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace docrect {

enum class FeatureClass { Boundary = 0, Text = 1, Edge = 2 };
enum class LineOrientation { Horizontal, Vertical, Boundary };

const char* to_string(FeatureClass c);
FeatureClass feature_class_from_string(const std::string& s);

/// Short polyline detected in the reference image, in pixels.
struct FeatureSegment {
  FeatureClass cls = FeatureClass::Text;
  std::vector<Vec2> pixels;
};

/// Line n.x = c with n = (cos theta, sin theta).
struct LineParams {
  double theta = 0.0;
  double offset = 0.0;

  Vec2 normal() const { return {std::cos(theta), std::sin(theta)}; }
  Vec2 direction() const { return {-std::sin(theta), std::cos(theta)}; }
  double signed_distance(const Vec2& p) const { return normal().dot(p) - offset; }
  Vec2 project(const Vec2& p) const { return p - signed_distance(p) * normal(); }
};

/// Feature points anchored in the mesh pair. The same anchor places the point
/// on the 3D mesh and on the planar mesh; `rays` are the viewing rays of the
/// source pixels.
struct FeatureLine {
  FeatureClass cls = FeatureClass::Text;
  std::vector<BarycentricAnchor> anchors;
  std::vector<ViewingRay> rays;
  std::vector<Vec2> pixels;
  LineParams fitted;
  LineOrientation orientation = LineOrientation::Horizontal;
  std::vector<int> sources;  ///< indices of the merged input segments

  int size() const { return static_cast<int>(anchors.size()); }
  std::vector<Vec2> plane_points(const PlaneMesh& plane) const;
};

/// Text format: one segment per line, `class u1 v1 u2 v2 ...`.
std::vector<FeatureSegment> load_segments(const std::filesystem::path& path);
void save_segments(const std::filesystem::path& path, const std::vector<FeatureSegment>& segments);

/// Arc-length resampling to at most `max_points` points (endpoints kept).
std::vector<Vec2> resample_polyline(const std::vector<Vec2>& pixels, int max_points);

struct LiftReport {
  int dropped_segments = 0;
  int dropped_pixels = 0;
};

/// Lifts each segment through the 3D mesh: one FeatureLine per segment that
/// keeps at least two pixels. `sources` of line k holds the segment index.
std::vector<FeatureLine> lift_segments(const std::vector<FeatureSegment>& segments, const CameraIntrinsics& cam,
                                       const MeshPair& pair, const RayCaster& caster, int max_points = 50,
                                       LiftReport* report = nullptr);
std::vector<FeatureLine> lift_segments(const std::vector<FeatureSegment>& segments, const CameraIntrinsics& cam,
                                       const MeshPair& pair, int max_points = 50, LiftReport* report = nullptr);

/// Total least squares line through the points.
LineParams fit_line(std::span<const Vec2> points);

struct MergeOptions {
  double endpoint_tol = 0.0;       ///< half-size of the endpoint tolerance box
  double straightness_tol = 0.1;   ///< max h/w of a merged line
  double axis_tol_deg = 20.0;      ///< non-boundary lines must be this close to an axis
};

/// Greedy pairwise merging within a class until nothing merges, then removal
/// of lines that are neither near-horizontal nor near-vertical. Output lines
/// carry a fresh fit and orientation.
std::vector<FeatureLine> merge_feature_lines(std::vector<FeatureLine> lines, const PlaneMesh& plane,
                                             const MergeOptions& options);

/// Re-fits every line to its current planar points.
void fit_lines(std::vector<FeatureLine>& lines, const PlaneMesh& plane);

struct ProjectionReport {
  int relocated = 0;
  int kept = 0;  ///< projection left the planar mesh; previous anchor kept
};

/// Moves each planar feature point onto its fitted line by re-anchoring it;
/// the same anchor then defines the 3D feature point.
ProjectionReport project_feature_lines(const PlaneMesh& plane, std::vector<FeatureLine>& lines);

}  // namespace docrect
