#include "docrect/features.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <tuple>

namespace docrect {

const char* to_string(FeatureClass c) {
  switch (c) {
    case FeatureClass::Boundary: return "boundary";
    case FeatureClass::Text: return "text";
    case FeatureClass::Edge: return "edge";
  }
  return "text";
}

FeatureClass feature_class_from_string(const std::string& s) {
  if (s == "boundary") return FeatureClass::Boundary;
  if (s == "text") return FeatureClass::Text;
  if (s == "edge") return FeatureClass::Edge;
  throw Error("unknown feature class `" + s + "`");
}

std::vector<Vec2> FeatureLine::plane_points(const PlaneMesh& plane) const {
  std::vector<Vec2> out;
  out.reserve(anchors.size());
  for (const auto& a : anchors) out.push_back(barycentric_eval(plane, a));
  return out;
}

std::vector<FeatureSegment> load_segments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open segment file " + path.string());
  std::vector<FeatureSegment> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string cls;
    if (!(ss >> cls)) continue;
    FeatureSegment seg;
    try {
      seg.cls = feature_class_from_string(cls);
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (!ss.eof()) throw Error(path.string() + ":" + std::to_string(lineno) + ": malformed coordinate");
    if (values.size() % 2 != 0 || values.size() < 4)
      throw Error(path.string() + ":" + std::to_string(lineno) + ": a segment needs at least two (u v) pairs");
    for (size_t i = 0; i < values.size(); i += 2) {
      if (!std::isfinite(values[i]) || !std::isfinite(values[i + 1]))
        throw Error(path.string() + ":" + std::to_string(lineno) + ": non-finite pixel");
      seg.pixels.emplace_back(values[i], values[i + 1]);
    }
    out.push_back(std::move(seg));
  }
  return out;
}

void save_segments(const std::filesystem::path& path, const std::vector<FeatureSegment>& segments) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& s : segments) {
    out << to_string(s.cls);
    for (const auto& p : s.pixels) out << ' ' << p.x() << ' ' << p.y();
    out << '\n';
  }
}

std::vector<Vec2> resample_polyline(const std::vector<Vec2>& pixels, int max_points) {
  if (static_cast<int>(pixels.size()) <= max_points || max_points < 2) return pixels;
  std::vector<double> arc(pixels.size(), 0.0);
  for (size_t i = 1; i < pixels.size(); ++i) arc[i] = arc[i - 1] + (pixels[i] - pixels[i - 1]).norm();
  const double total = arc.back();
  if (!(total > 0.0)) return {pixels.front(), pixels.back()};
  std::vector<Vec2> out;
  out.reserve(max_points);
  size_t seg = 0;
  for (int k = 0; k < max_points; ++k) {
    const double s = total * k / (max_points - 1);
    while (seg + 2 < arc.size() && arc[seg + 1] < s) ++seg;
    const double len = arc[seg + 1] - arc[seg];
    const double t = len > 0.0 ? std::clamp((s - arc[seg]) / len, 0.0, 1.0) : 0.0;
    out.push_back((1.0 - t) * pixels[seg] + t * pixels[seg + 1]);
  }
  out.back() = pixels.back();
  return out;
}

LineParams fit_line(std::span<const Vec2> points) {
  if (points.size() < 2) throw Error("line fit needs at least two points");
  Vec2 mean = Vec2::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : points) cov += (p - mean) * (p - mean).transpose();
  if (!(cov.trace() > 0.0)) throw Error("line fit over coincident points");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  Vec2 n = eig.eigenvectors().col(0).normalized();
  // Canonical sign: the dominant normal component is positive.
  if ((std::abs(n.x()) >= std::abs(n.y()) && n.x() < 0.0) || (std::abs(n.y()) > std::abs(n.x()) && n.y() < 0.0))
    n = -n;
  LineParams line;
  line.theta = std::atan2(n.y(), n.x());
  line.offset = line.normal().dot(mean);
  return line;
}

std::vector<FeatureLine> lift_segments(const std::vector<FeatureSegment>& segments, const CameraIntrinsics& cam,
                                       const MeshPair& pair, const RayCaster& caster, int max_points,
                                       LiftReport* report) {
  std::vector<FeatureLine> lines;
  for (size_t s = 0; s < segments.size(); ++s) {
    const auto pixels = resample_polyline(segments[s].pixels, max_points);
    FeatureLine line;
    line.cls = segments[s].cls;
    line.orientation = line.cls == FeatureClass::Boundary ? LineOrientation::Boundary : LineOrientation::Horizontal;
    line.sources = {static_cast<int>(s)};
    for (const auto& px : pixels) {
      const ViewingRay ray = viewing_ray(cam, px);
      if (auto anchor = caster.cast(px, ray)) {
        line.anchors.push_back(*anchor);
        line.rays.push_back(ray);
        line.pixels.push_back(px);
      } else if (report) {
        ++report->dropped_pixels;
      }
    }
    bool keep = line.size() >= 2;
    if (keep) {
      try {
        const auto pts = line.plane_points(pair.plane);
        line.fitted = fit_line(pts);
      } catch (const Error&) {
        keep = false;
      }
    }
    if (keep) {
      lines.push_back(std::move(line));
    } else if (report) {
      ++report->dropped_segments;
    }
  }
  return lines;
}

std::vector<FeatureLine> lift_segments(const std::vector<FeatureSegment>& segments, const CameraIntrinsics& cam,
                                       const MeshPair& pair, int max_points, LiftReport* report) {
  const RayCaster caster(pair.space, cam);
  return lift_segments(segments, cam, pair, caster, max_points, report);
}

void fit_lines(std::vector<FeatureLine>& lines, const PlaneMesh& plane) {
  for (auto& line : lines) {
    const auto pts = line.plane_points(plane);
    line.fitted = fit_line(pts);
  }
}

namespace {

struct Sortable {
  FeatureLine line;
  std::vector<Vec2> points;
};

// Canonical key: class, then the leftmost endpoint, then the other endpoint.
auto canonical_key(const Sortable& s) {
  Vec2 a = s.points.front(), b = s.points.back();
  if (std::tie(b.x(), b.y()) < std::tie(a.x(), a.y())) std::swap(a, b);
  return std::make_tuple(static_cast<int>(s.line.cls), a.x(), a.y(), b.x(), b.y(), s.points.size());
}

void reverse_line(Sortable& s) {
  std::reverse(s.line.anchors.begin(), s.line.anchors.end());
  std::reverse(s.line.rays.begin(), s.line.rays.end());
  std::reverse(s.line.pixels.begin(), s.line.pixels.end());
  std::reverse(s.points.begin(), s.points.end());
}

bool try_merge(Sortable& a, Sortable& b, const MergeOptions& opt) {
  const Vec2* ea[2] = {&a.points.front(), &a.points.back()};
  const Vec2* eb[2] = {&b.points.front(), &b.points.back()};
  int best_i = 0, best_j = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double d = (*ea[i] - *eb[j]).squaredNorm();
      if (d < best) {
        best = d;
        best_i = i;
        best_j = j;
      }
    }
  const Vec2 gap = *ea[best_i] - *eb[best_j];
  if (std::abs(gap.x()) > opt.endpoint_tol || std::abs(gap.y()) > opt.endpoint_tol) return false;

  std::vector<Vec2> merged;
  merged.reserve(a.points.size() + b.points.size());
  auto append = [&](const std::vector<Vec2>& pts, bool reversed) {
    if (reversed)
      merged.insert(merged.end(), pts.rbegin(), pts.rend());
    else
      merged.insert(merged.end(), pts.begin(), pts.end());
  };
  append(a.points, best_i == 0);
  append(b.points, best_j == 1);
  if (obb_of_points(merged).straightness() > opt.straightness_tol) return false;

  if (best_i == 0) reverse_line(a);
  if (best_j == 1) reverse_line(b);
  auto& la = a.line;
  auto& lb = b.line;
  la.anchors.insert(la.anchors.end(), lb.anchors.begin(), lb.anchors.end());
  la.rays.insert(la.rays.end(), lb.rays.begin(), lb.rays.end());
  la.pixels.insert(la.pixels.end(), lb.pixels.begin(), lb.pixels.end());
  la.sources.insert(la.sources.end(), lb.sources.begin(), lb.sources.end());
  a.points = std::move(merged);
  return true;
}

}  // namespace

std::vector<FeatureLine> merge_feature_lines(std::vector<FeatureLine> lines, const PlaneMesh& plane,
                                             const MergeOptions& options) {
  std::vector<Sortable> items;
  items.reserve(lines.size());
  for (auto& l : lines) {
    if (l.size() < 2) continue;
    auto pts = l.plane_points(plane);
    items.push_back({std::move(l), std::move(pts)});
  }
  auto canonicalize = [&] {
    std::stable_sort(items.begin(), items.end(),
                     [](const Sortable& x, const Sortable& y) { return canonical_key(x) < canonical_key(y); });
  };
  canonicalize();
  bool merged_any = true;
  while (merged_any) {
    merged_any = false;
    for (size_t i = 0; i < items.size(); ++i) {
      for (size_t j = i + 1; j < items.size();) {
        if (items[i].line.cls == items[j].line.cls && try_merge(items[i], items[j], options)) {
          items.erase(items.begin() + static_cast<std::ptrdiff_t>(j));
          merged_any = true;
        } else {
          ++j;
        }
      }
    }
    if (merged_any) canonicalize();
  }

  const double axis_sin = std::sin(options.axis_tol_deg * std::numbers::pi / 180.0);
  std::vector<FeatureLine> out;
  for (auto& item : items) {
    FeatureLine& line = item.line;
    try {
      line.fitted = fit_line(item.points);
    } catch (const Error&) {
      continue;
    }
    if (line.cls == FeatureClass::Boundary) {
      line.orientation = LineOrientation::Boundary;
    } else {
      const Vec2 dir = line.fitted.direction();
      if (std::abs(dir.y()) <= axis_sin)
        line.orientation = LineOrientation::Horizontal;
      else if (std::abs(dir.x()) <= axis_sin)
        line.orientation = LineOrientation::Vertical;
      else
        continue;
    }
    std::sort(line.sources.begin(), line.sources.end());
    out.push_back(std::move(line));
  }
  return out;
}

ProjectionReport project_feature_lines(const PlaneMesh& plane, std::vector<FeatureLine>& lines) {
  ProjectionReport report;
  const PlaneLocator locator(plane);
  const double scale = std::max(Rect::of(plane.vertices()).width(), Rect::of(plane.vertices()).height());
  for (auto& line : lines) {
    for (auto& anchor : line.anchors) {
      const Vec2 p = barycentric_eval(plane, anchor);
      const Vec2 q = line.fitted.project(p);
      if ((q - p).norm() <= 1e-14 * scale) continue;
      if (auto moved = locator.locate(q)) {
        anchor = *moved;
        ++report.relocated;
      } else {
        ++report.kept;
      }
    }
  }
  return report;
}

}  // namespace docrect
