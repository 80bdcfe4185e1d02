#pragma once

#include "docrect/camera.hpp"
#include "docrect/features.hpp"
#include "docrect/geometry.hpp"
#include "docrect/image.hpp"

#include <span>
#include <string>

namespace docrect {

enum class RegionMode { Boundary, Aabb, Mesh };

RegionMode region_mode_from_string(const std::string& s);
const char* to_string(RegionMode m);

struct RegionChoice {
  Rect rect;
  RegionMode used = RegionMode::Mesh;
  std::string warning;  ///< set when a requested mode had to fall back
};

/// Output rectangle in plane coordinates. Boundary mode intersects the
/// top/bottom and left/right boundary fits pairwise and takes the bounding box
/// of the four corners; it falls back to the box of all feature points and
/// then to the box of the planar mesh.
RegionChoice output_region(std::span<const FeatureLine> lines, const PlaneMesh& plane,
                           RegionMode mode = RegionMode::Boundary);

struct RenderOptions {
  int long_side = 1000;
  Rgb background{0, 0, 0};
};

/// Inverse texture mapping: every output pixel is located on M', mapped to M
/// by its anchor, projected into the reference image and sampled bilinearly.
Image render(const MeshPair& pair, const CameraIntrinsics& cam, const Image& reference, const Rect& region,
             const RenderOptions& options = {});

/// Mean distance between corresponding points after the least-squares
/// similarity that maps `recovered` onto `truth`, divided by `diagonal`.
/// Entries with mask 0 are ignored; an empty mask keeps everything.
double displacement_error(std::span<const Vec2> recovered, std::span<const Vec2> truth,
                          std::span<const std::uint8_t> mask, double diagonal);
/// Same over all vertices, relative to the diagonal of the truth's bounding box.
double displacement_error(const PlaneMesh& recovered, const PlaneMesh& truth);

}  // namespace docrect
