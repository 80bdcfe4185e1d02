#include "docrect/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace docrect {

namespace {

constexpr double kInsideTol = 1e-12;

}  // namespace

std::optional<Vec3> barycentric_coordinates(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const double area = signed_area(a, b, c);
  const double scale = std::max({(b - a).squaredNorm(), (c - a).squaredNorm(), (c - b).squaredNorm()});
  if (!(std::abs(area) > 1e-14 * scale) || scale == 0.0) return std::nullopt;
  const double wb = signed_area(a, p, c) / area;
  const double wc = signed_area(a, b, p) / area;
  return Vec3(1.0 - wb - wc, wb, wc);
}

Vec3 clamp_weights(const Vec3& w) {
  Vec3 c = w.cwiseMax(0.0);
  const double s = c.sum();
  if (s <= 0.0) return Vec3(1.0, 0.0, 0.0);
  return c / s;
}

std::optional<BarycentricAnchor> locate_point(const PlaneMesh& mesh, const Vec2& p, LocateStats* stats) {
  for (int f = 0; f < mesh.face_count(); ++f) {
    for (int t = 0; t < 2; ++t) {
      const auto tri = mesh.triangle(f, t);
      const auto w = barycentric_coordinates(p, tri[0], tri[1], tri[2]);
      if (!w) {
        if (stats) ++stats->degenerate_triangles;
        continue;
      }
      if (w->minCoeff() >= -kInsideTol) return BarycentricAnchor{f, t, clamp_weights(*w)};
    }
  }
  return std::nullopt;
}

PlaneLocator::PlaneLocator(const PlaneMesh& mesh) : mesh_(&mesh) {
  const int tris = mesh.triangle_count();
  Rect box = Rect::of(mesh.vertices());
  const double extent = std::max(box.width(), box.height());
  const double pad = 1e-9 * std::max(extent, 1.0);
  origin_ = box.min - Vec2::Constant(pad);
  const double w = box.width() + 2 * pad;
  const double h = box.height() + 2 * pad;
  // About one triangle per cell on average.
  cell_ = std::sqrt(std::max(w * h, 1e-300) / std::max(tris, 1));
  if (!(cell_ > 0.0)) cell_ = std::max(extent, 1.0);
  nx_ = std::clamp(static_cast<int>(std::ceil(w / cell_)), 1, 4096);
  ny_ = std::clamp(static_cast<int>(std::ceil(h / cell_)), 1, 4096);

  std::vector<std::array<int, 4>> ranges(tris);
  std::vector<int> counts(static_cast<size_t>(nx_) * ny_ + 1, 0);
  for (int tri = 0; tri < tris; ++tri) {
    const auto v = mesh.triangle(tri / 2, tri % 2);
    Vec2 lo = v[0].cwiseMin(v[1]).cwiseMin(v[2]) - Vec2::Constant(pad);
    Vec2 hi = v[0].cwiseMax(v[1]).cwiseMax(v[2]) + Vec2::Constant(pad);
    int x0, y0, x1, y1;
    cell_of(lo.x(), lo.y(), x0, y0);
    cell_of(hi.x(), hi.y(), x1, y1);
    ranges[tri] = {x0, y0, x1, y1};
    for (int cy = y0; cy <= y1; ++cy)
      for (int cx = x0; cx <= x1; ++cx) ++counts[cy * nx_ + cx + 1];
  }
  for (size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];
  cell_start_ = counts;
  cell_items_.assign(counts.back(), 0);
  std::vector<int> fill(counts.begin(), counts.end() - 1);
  for (int tri = 0; tri < tris; ++tri) {
    const auto& r = ranges[tri];
    for (int cy = r[1]; cy <= r[3]; ++cy)
      for (int cx = r[0]; cx <= r[2]; ++cx) cell_items_[fill[cy * nx_ + cx]++] = tri;
  }
  for (int tri = 0; tri < tris; ++tri) {
    const auto v = mesh.triangle(tri / 2, tri % 2);
    if (!barycentric_coordinates(v[0], v[0], v[1], v[2])) ++degenerate_;
  }
}

int PlaneLocator::cell_of(double x, double y, int& cx, int& cy) const {
  cx = std::clamp(static_cast<int>(std::floor((x - origin_.x()) / cell_)), 0, nx_ - 1);
  cy = std::clamp(static_cast<int>(std::floor((y - origin_.y()) / cell_)), 0, ny_ - 1);
  return cy * nx_ + cx;
}

std::optional<BarycentricAnchor> PlaneLocator::test_triangle(int tri, const Vec2& p) const {
  const auto v = mesh_->triangle(tri / 2, tri % 2);
  const auto w = barycentric_coordinates(p, v[0], v[1], v[2]);
  if (!w || w->minCoeff() < -kInsideTol) return std::nullopt;
  return BarycentricAnchor{tri / 2, tri % 2, clamp_weights(*w)};
}

std::optional<BarycentricAnchor> PlaneLocator::locate(const Vec2& p) const {
  if (!(p.allFinite())) return std::nullopt;
  const double gx = (p.x() - origin_.x()) / cell_;
  const double gy = (p.y() - origin_.y()) / cell_;
  if (gx < 0.0 || gy < 0.0 || gx > nx_ || gy > ny_) return std::nullopt;
  int cx, cy;
  const int cell = cell_of(p.x(), p.y(), cx, cy);
  for (int k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
    if (auto a = test_triangle(cell_items_[k], p)) return a;
  }
  return std::nullopt;
}

BarycentricAnchor PlaneLocator::nearest(const Vec2& p) const {
  if (auto a = locate(p)) return *a;
  double best = std::numeric_limits<double>::infinity();
  BarycentricAnchor out;
  for (int tri = 0; tri < mesh_->triangle_count(); ++tri) {
    const auto v = mesh_->triangle(tri / 2, tri % 2);
    const Vec3 w = closest_point_weights<2>(p, v[0], v[1], v[2]);
    const Vec2 q = w[0] * v[0] + w[1] * v[1] + w[2] * v[2];
    const double d = (q - p).squaredNorm();
    if (d < best) {
      best = d;
      out = BarycentricAnchor{tri / 2, tri % 2, w};
    }
  }
  return out;
}

OrientedBox obb_of_points(std::span<const Vec2> points) {
  if (points.size() < 2) throw Error("oriented box needs at least two points");
  Vec2 mean = Vec2::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : points) {
    const Vec2 d = p - mean;
    cov += d * d.transpose();
  }
  OrientedBox box;
  if (cov.norm() > 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    box.major = eig.eigenvectors().col(1).normalized();
  }
  box.minor = Vec2(-box.major.y(), box.major.x());

  double lo_a = std::numeric_limits<double>::infinity(), hi_a = -lo_a;
  double lo_b = lo_a, hi_b = -lo_a;
  for (const auto& p : points) {
    const Vec2 d = p - mean;
    const double a = d.dot(box.major);
    const double b = d.dot(box.minor);
    lo_a = std::min(lo_a, a);
    hi_a = std::max(hi_a, a);
    lo_b = std::min(lo_b, b);
    hi_b = std::max(hi_b, b);
  }
  box.center = mean + 0.5 * (lo_a + hi_a) * box.major + 0.5 * (lo_b + hi_b) * box.minor;
  box.w = 0.5 * (hi_a - lo_a);
  box.h = 0.5 * (hi_b - lo_b);
  if (box.h > box.w) {
    std::swap(box.w, box.h);
    box.major = box.minor;
    box.minor = Vec2(-box.major.y(), box.major.x());
  }
  return box;
}

Rect Rect::of(std::span<const Vec2> points) {
  Rect r;
  if (points.empty()) return r;
  r.min = r.max = points.front();
  for (const auto& p : points) r.expand(p);
  return r;
}

template <int Dim>
double median_edge_length(const QuadMesh<Dim>& mesh) {
  const auto& d = mesh.dims();
  std::vector<double> lengths;
  lengths.reserve(2 * mesh.vertex_count());
  for (int j = 0; j < d.n2; ++j)
    for (int i = 0; i < d.n1; ++i) {
      if (i + 1 < d.n1) lengths.push_back((mesh.at(i + 1, j) - mesh.at(i, j)).norm());
      if (j + 1 < d.n2) lengths.push_back((mesh.at(i, j + 1) - mesh.at(i, j)).norm());
    }
  auto mid = lengths.begin() + lengths.size() / 2;
  std::nth_element(lengths.begin(), mid, lengths.end());
  return *mid;
}

template double median_edge_length<2>(const QuadMesh<2>&);
template double median_edge_length<3>(const QuadMesh<3>&);

}  // namespace docrect
