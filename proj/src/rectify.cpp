#include "docrect/rectify.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

namespace docrect {

RegionMode region_mode_from_string(const std::string& s) {
  if (s == "boundary") return RegionMode::Boundary;
  if (s == "aabb") return RegionMode::Aabb;
  if (s == "mesh") return RegionMode::Mesh;
  throw Error("unknown region mode `" + s + "` (boundary, aabb, mesh)");
}

const char* to_string(RegionMode m) {
  switch (m) {
    case RegionMode::Boundary: return "boundary";
    case RegionMode::Aabb: return "aabb";
    case RegionMode::Mesh: return "mesh";
  }
  return "?";
}

namespace {

struct Fitted {
  LineParams line;
  double position;  // mean coordinate across the line
};

std::optional<Vec2> intersect(const LineParams& a, const LineParams& b) {
  Eigen::Matrix2d m;
  m.row(0) = a.normal().transpose();
  m.row(1) = b.normal().transpose();
  const double det = m.determinant();
  if (std::abs(det) < 1e-12) return std::nullopt;
  return Vec2(m.inverse() * Vec2(a.offset, b.offset));
}

std::optional<Rect> boundary_rect(std::span<const FeatureLine> lines, const PlaneMesh& plane) {
  std::vector<Fitted> horiz, vert;
  for (const auto& l : lines) {
    if (l.cls != FeatureClass::Boundary || l.size() < 2) continue;
    const auto pts = l.plane_points(plane);
    Vec2 mean = Vec2::Zero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    const Vec2 n = l.fitted.normal();
    if (std::abs(n.y()) >= std::abs(n.x()))
      horiz.push_back({l.fitted, mean.y()});
    else
      vert.push_back({l.fitted, mean.x()});
  }
  if (horiz.size() < 2 || vert.size() < 2) return std::nullopt;
  auto by_pos = [](const Fitted& a, const Fitted& b) { return a.position < b.position; };
  const auto [top, bottom] = std::minmax_element(horiz.begin(), horiz.end(), by_pos);
  const auto [left, right] = std::minmax_element(vert.begin(), vert.end(), by_pos);
  Rect r{Vec2::Constant(INFINITY), Vec2::Constant(-INFINITY)};
  for (const auto* h : {&*top, &*bottom})
    for (const auto* v : {&*left, &*right}) {
      const auto c = intersect(h->line, v->line);
      if (!c) return std::nullopt;
      r.expand(*c);
    }
  if (r.empty() || !r.min.allFinite() || !r.max.allFinite()) return std::nullopt;
  return r;
}

std::optional<Rect> feature_rect(std::span<const FeatureLine> lines, const PlaneMesh& plane) {
  std::vector<Vec2> pts;
  for (const auto& l : lines) {
    const auto p = l.plane_points(plane);
    pts.insert(pts.end(), p.begin(), p.end());
  }
  if (pts.empty()) return std::nullopt;
  const Rect r = Rect::of(pts);
  if (r.empty()) return std::nullopt;
  return r;
}

}  // namespace

RegionChoice output_region(std::span<const FeatureLine> lines, const PlaneMesh& plane, RegionMode mode) {
  RegionChoice out;
  if (mode == RegionMode::Boundary) {
    if (auto r = boundary_rect(lines, plane)) {
      out.rect = *r;
      out.used = RegionMode::Boundary;
      return out;
    }
    out.warning = "no usable boundary lines; ";
  }
  if (mode != RegionMode::Mesh) {
    if (auto r = feature_rect(lines, plane)) {
      out.rect = *r;
      out.used = RegionMode::Aabb;
      if (!out.warning.empty()) out.warning += "using the feature-line box";
      return out;
    }
    out.warning += "no feature lines; ";
  }
  out.rect = Rect::of(plane.vertices());
  out.used = RegionMode::Mesh;
  if (!out.warning.empty()) out.warning += "using the mesh box";
  return out;
}

Image render(const MeshPair& pair, const CameraIntrinsics& cam, const Image& reference, const Rect& region,
             const RenderOptions& opt) {
  if (reference.empty()) throw Error("reference image is empty");
  if (region.empty()) throw Error("output region is empty");
  if (opt.long_side < 1) throw Error("output size must be positive");
  const double px = std::max(region.width(), region.height()) / opt.long_side;
  const int w = std::max(1, static_cast<int>(std::lround(region.width() / px)));
  const int h = std::max(1, static_cast<int>(std::lround(region.height() / px)));
  Image out(w, h, opt.background);
  const PlaneLocator locator(pair.plane);
  std::array<double, 3> c;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Vec2 p = region.min + px * Vec2(x + 0.5, y + 0.5);
      const auto anchor = locator.locate(p);
      if (!anchor) continue;
      const Vec3 q = barycentric_eval(pair.space, *anchor);
      if (!(q.z() > 0.0)) continue;
      if (!sample_bilinear(reference, project(cam, q), c)) continue;
      out.set(x, y,
              {static_cast<std::uint8_t>(std::lround(c[0])), static_cast<std::uint8_t>(std::lround(c[1])),
               static_cast<std::uint8_t>(std::lround(c[2]))});
    }
  return out;
}

double displacement_error(std::span<const Vec2> recovered, std::span<const Vec2> truth,
                          std::span<const std::uint8_t> mask, double diagonal) {
  if (recovered.size() != truth.size()) throw Error("displacement error: point counts differ");
  if (!mask.empty() && mask.size() != truth.size()) throw Error("displacement error: mask size differs");
  if (!(diagonal > 0.0)) throw Error("displacement error: diagonal must be positive");
  std::vector<int> keep;
  for (size_t i = 0; i < truth.size(); ++i)
    if (mask.empty() || mask[i]) keep.push_back(static_cast<int>(i));
  if (keep.size() < 2) throw Error("displacement error needs at least two points");
  Eigen::Matrix2Xd src(2, keep.size()), dst(2, keep.size());
  for (size_t k = 0; k < keep.size(); ++k) {
    src.col(k) = recovered[keep[k]];
    dst.col(k) = truth[keep[k]];
  }
  const Eigen::Matrix3d t = Eigen::umeyama(src, dst, true);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < src.cols(); ++k) {
    const Vec2 mapped = t.topLeftCorner<2, 2>() * src.col(k) + t.topRightCorner<2, 1>();
    sum += (mapped - dst.col(k)).norm();
  }
  return sum / static_cast<double>(keep.size()) / diagonal;
}

double displacement_error(const PlaneMesh& recovered, const PlaneMesh& truth) {
  if (!(recovered.dims() == truth.dims())) throw Error("displacement error: mesh dimensions differ");
  const Rect box = Rect::of(truth.vertices());
  return displacement_error(recovered.vertices(), truth.vertices(), {}, (box.max - box.min).norm());
}

}  // namespace docrect
