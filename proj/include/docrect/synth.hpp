#pragma once

#include "docrect/camera.hpp"
#include "docrect/features.hpp"
#include "docrect/geometry.hpp"
#include "docrect/image.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace docrect {

/// Fold about the line through a and b (layout coordinates). Positive angles
/// turn the part away from the sheet centre towards the camera.
struct Crease {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::UnitY();
  double angle_deg = 0.0;
};

enum class Texture { Ruled, Checker, Blank };

/// Everything needed to regenerate a scene. Layout coordinates: the sheet is
/// [0, width] x [0, height], x to the right, y down the page.
struct SceneSpec {
  double width = 0.21;
  double height = 0.297;
  std::vector<Crease> creases;
  double curl_radius = 0.0;  ///< bend about an axis parallel to y; 0 = none
  Vec3 rotation_deg = Vec3::Zero();  ///< pose about x, y, z (applied in that order)
  Vec3 translation = Vec3(0.0, 0.0, 0.5);
  double focal = 1.0;
  double pixel_scale = 1500.0;  ///< ku = kv
  std::optional<Vec2> principal;  ///< defaults to the image centre
  int image_width = 800;
  int image_height = 1200;
  int points = 5000;
  double noise = 0.0;  ///< Gaussian sigma as a fraction of the clean cloud diagonal
  int outliers = 0;
  Texture texture = Texture::Ruled;
  double line_spacing = 0.012;
  double margin = 0.02;
  double checker_size = 0.03;
  double segment_length = 0.0;  ///< split lines into pieces this long; 0 = crease pieces only
  double segment_gap = 0.002;
  double sample_step = 0.002;   ///< layout spacing of segment samples
  bool boundary = true;         ///< emit the four sheet edges as boundary segments
  int supersample = 2;
  Rgb background{40, 40, 40};
  std::uint64_t seed = 1;

  CameraIntrinsics camera() const;
};

SceneSpec parse_scene_spec(std::istream& in, const std::string& origin = "<spec>");
SceneSpec load_scene_spec(const std::filesystem::path& path);
void save_scene_spec(const std::filesystem::path& path, const SceneSpec& spec);

/// Closed-form isometric embedding of the sheet in the camera frame.
class FoldedSheet {
 public:
  explicit FoldedSheet(const SceneSpec& spec);

  double width() const { return w_; }
  double height() const { return h_; }
  double diagonal() const { return std::hypot(w_, h_); }
  bool contains(const Vec2& layout) const;

  Vec3 embed(const Vec2& layout) const;
  /// Layout point of the nearest surface hit along the ray from the camera
  /// centre with the given direction.
  std::optional<Vec2> unfold_ray(const Vec3& direction) const;
  /// True when the surface point of `layout` is the first hit of its ray.
  bool visible(const Vec2& layout, double tol = 1e-9) const;
  /// Layout points where the segment a-b crosses a crease, as parameters in (0, 1).
  std::vector<double> crease_crossings(const Vec2& a, const Vec2& b) const;

 private:
  unsigned signature(const Vec2& local) const;
  bool in_panel(const Vec2& local, unsigned sig) const;
  Eigen::Isometry3d panel_transform(unsigned sig) const;

  struct Fold {
    Vec2 point;  // local (centred) coordinates
    Vec2 dir;
    double angle;  // signed, radians
    Vec2 mid;      // midpoint of the chord inside the sheet
  };
  double w_, h_;
  double curl_;
  std::vector<Fold> folds_;
  Vec2 root_;
  Eigen::Isometry3d pose_;
  std::vector<Eigen::Isometry3d> panels_;  // by signature
};

struct TruthLine {
  int id = 0;
  FeatureClass cls = FeatureClass::Text;
  Vec2 a, b;  ///< layout endpoints
};

struct SynthBundle {
  SceneSpec spec;
  CameraIntrinsics cam;
  std::vector<Vec3> cloud;
  std::vector<std::uint8_t> labels;  ///< 1 inlier, 0 outlier
  std::vector<FeatureSegment> segments;
  std::vector<int> segment_lines;  ///< truth line id of each segment
  std::vector<TruthLine> truth_lines;
  Image reference;
};

/// Texture colour at a layout point.
Rgb texture_color(const SceneSpec& spec, const Vec2& layout);

/// Straight texture lines of the layout (including the sheet edges when
/// boundary segments are on).
std::vector<TruthLine> truth_lines(const SceneSpec& spec);

/// Deterministic for a given spec (seed included).
SynthBundle generate_scene(const SceneSpec& spec);

/// Files: scene.txt, cam.txt, cloud.xyz, labels.txt, segments.txt,
/// segment_lines.txt, truth_lines.txt, reference.png.
void save_bundle(const std::filesystem::path& dir, const SynthBundle& bundle);
SynthBundle load_bundle(const std::filesystem::path& dir);

/// Layout position of every vertex of a recovered 3D mesh, found by casting
/// the vertex's viewing ray at the true surface; mask 0 where it misses.
std::vector<Vec2> truth_for_vertices(const FoldedSheet& sheet, const SpaceMesh& space,
                                     std::vector<std::uint8_t>& mask);

struct EvalMetrics {
  double displacement_error = 0.0;  ///< fraction of the sheet diagonal
  int displacement_vertices = 0;
  double iso_mean_abs = 0.0;  ///< mean |c_iso| in units normalized by the cloud diagonal
  double worst_line_hw = 0.0;
  double mean_line_hw = 0.0;
  int lines_measured = 0;
  double inlier_valid_rate = 1.0;
  double outlier_invalid_rate = 1.0;
  int inliers = 0;
  int outliers = 0;
};

/// Straightness of truth lines after the recovered mapping: each line is
/// sampled in the layout, imaged, lifted through the recovered 3D mesh and
/// read off the recovered planar mesh. Lines with fewer than half their
/// samples landing are skipped. Returns h/w per measured line id.
std::vector<std::pair<int, double>> rendered_line_straightness(const SynthBundle& bundle, const FoldedSheet& sheet,
                                                                const MeshPair& recovered,
                                                                bool include_boundary = false);

/// `valid` may be empty (rates then stay at 1).
EvalMetrics evaluate(const SynthBundle& bundle, const MeshPair& recovered, std::span<const std::uint8_t> valid);

}  // namespace docrect
