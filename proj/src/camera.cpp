#include "docrect/camera.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace docrect {

void CameraIntrinsics::validate() const {
  if (!std::isfinite(f) || !std::isfinite(ku) || !std::isfinite(kv) || !std::isfinite(cu) || !std::isfinite(cv))
    throw Error("camera intrinsics must be finite");
  if (!(fu() > 0.0) || !(fv() > 0.0)) throw Error("camera intrinsics need f*ku > 0 and f*kv > 0");
}

Vec2 project(const CameraIntrinsics& cam, const Vec3& p) {
  if (!(p.z() > 0.0)) throw Error("point is behind the camera");
  return {cam.fu() * p.x() / p.z() + cam.cu, cam.fv() * p.y() / p.z() + cam.cv};
}

Vec3 back_project(const CameraIntrinsics& cam, const Vec2& pixel, double depth) {
  if (!(depth > 0.0)) throw Error("back projection needs positive depth");
  return {(pixel.x() - cam.cu) * depth / cam.fu(), (pixel.y() - cam.cv) * depth / cam.fv(), depth};
}

ViewingRay viewing_ray(const CameraIntrinsics& cam, const Vec2& pixel) {
  ViewingRay ray;
  ray.direction = Vec3((pixel.x() - cam.cu) / cam.fu(), (pixel.y() - cam.cv) / cam.fv(), 1.0).normalized();
  // Gram-Schmidt against the axis least aligned with the direction.
  const Vec3& d = ray.direction;
  Vec3 seed = std::abs(d.x()) <= std::abs(d.y()) ? Vec3::UnitX() : Vec3::UnitY();
  ray.n1 = (seed - seed.dot(d) * d).normalized();
  ray.n2 = d.cross(ray.n1).normalized();
  return ray;
}

std::optional<RayHit> intersect_ray_triangle(const Vec3& direction, const Vec3& a, const Vec3& b, const Vec3& c) {
  constexpr double kTol = 1e-12;
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pvec = direction.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-12) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tvec = -a;
  const double u = tvec.dot(pvec) * inv;
  if (u < -kTol || u > 1.0 + kTol) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = direction.dot(qvec) * inv;
  if (v < -kTol || u + v > 1.0 + kTol) return std::nullopt;
  const double t = e2.dot(qvec) * inv;
  if (!(t > 0.0)) return std::nullopt;
  return RayHit{t, clamp_weights(Vec3(1.0 - u - v, u, v))};
}

namespace {

struct Best {
  double t = std::numeric_limits<double>::infinity();
  int tri = -1;
  Vec3 w;

  void offer(int tri_id, const RayHit& hit) {
    if (hit.t < t || (hit.t == t && tri_id < tri)) {
      t = hit.t;
      tri = tri_id;
      w = hit.weights;
    }
  }
  std::optional<BarycentricAnchor> anchor() const {
    if (tri < 0) return std::nullopt;
    return BarycentricAnchor{tri / 2, tri % 2, w};
  }
};

}  // namespace

std::optional<BarycentricAnchor> intersect_ray_mesh(const ViewingRay& ray, const SpaceMesh& mesh) {
  Best best;
  for (int tri = 0; tri < mesh.triangle_count(); ++tri) {
    const auto v = mesh.triangle(tri / 2, tri % 2);
    if (auto hit = intersect_ray_triangle(ray.direction, v[0], v[1], v[2])) best.offer(tri, *hit);
  }
  return best.anchor();
}

RayCaster::RayCaster(const SpaceMesh& mesh, const CameraIntrinsics& cam) : mesh_(&mesh), cam_(cam) {
  const int tris = mesh.triangle_count();
  std::vector<Vec2> px(mesh.vertex_count());
  std::vector<char> front(mesh.vertex_count());
  Rect box;
  bool first = true;
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const Vec3& p = mesh.vertex(i);
    front[i] = p.z() > 1e-12;
    if (!front[i]) continue;
    px[i] = Vec2(cam.fu() * p.x() / p.z() + cam.cu, cam.fv() * p.y() / p.z() + cam.cv);
    if (first) {
      box.min = box.max = px[i];
      first = false;
    } else {
      box.expand(px[i]);
    }
  }
  const double extent = std::max({box.width(), box.height(), 1.0});
  const double pad = 1e-7 * extent;
  origin_ = box.min - Vec2::Constant(pad);
  const double w = box.width() + 2 * pad;
  const double h = box.height() + 2 * pad;
  cell_ = std::sqrt(std::max(w * h, 1e-300) / std::max(tris, 1));
  if (!(cell_ > 0.0)) cell_ = extent;
  nx_ = std::clamp(static_cast<int>(std::ceil(w / cell_)), 1, 4096);
  ny_ = std::clamp(static_cast<int>(std::ceil(h / cell_)), 1, 4096);

  auto clampx = [&](double x) { return std::clamp(static_cast<int>(std::floor((x - origin_.x()) / cell_)), 0, nx_ - 1); };
  auto clampy = [&](double y) { return std::clamp(static_cast<int>(std::floor((y - origin_.y()) / cell_)), 0, ny_ - 1); };

  std::vector<std::array<int, 4>> ranges(tris, {0, 0, -1, -1});
  std::vector<int> counts(static_cast<size_t>(nx_) * ny_ + 1, 0);
  for (int tri = 0; tri < tris; ++tri) {
    const auto idx = mesh.dims().triangle_vertices(tri / 2, tri % 2);
    if (!front[idx[0]] || !front[idx[1]] || !front[idx[2]]) {
      always_.push_back(tri);
      continue;
    }
    const Vec2 lo = px[idx[0]].cwiseMin(px[idx[1]]).cwiseMin(px[idx[2]]) - Vec2::Constant(pad);
    const Vec2 hi = px[idx[0]].cwiseMax(px[idx[1]]).cwiseMax(px[idx[2]]) + Vec2::Constant(pad);
    ranges[tri] = {clampx(lo.x()), clampy(lo.y()), clampx(hi.x()), clampy(hi.y())};
    const auto& r = ranges[tri];
    for (int cy = r[1]; cy <= r[3]; ++cy)
      for (int cx = r[0]; cx <= r[2]; ++cx) ++counts[cy * nx_ + cx + 1];
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
}

std::optional<BarycentricAnchor> RayCaster::cast(const Vec2& pixel) const {
  return cast(pixel, viewing_ray(cam_, pixel));
}

std::optional<BarycentricAnchor> RayCaster::cast(const Vec2& pixel, const ViewingRay& ray) const {
  Best best;
  auto test = [&](int tri) {
    const auto v = mesh_->triangle(tri / 2, tri % 2);
    if (auto hit = intersect_ray_triangle(ray.direction, v[0], v[1], v[2])) best.offer(tri, *hit);
  };
  const double gx = (pixel.x() - origin_.x()) / cell_;
  const double gy = (pixel.y() - origin_.y()) / cell_;
  if (gx >= 0.0 && gy >= 0.0 && gx <= nx_ && gy <= ny_) {
    const int cx = std::clamp(static_cast<int>(std::floor(gx)), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>(std::floor(gy)), 0, ny_ - 1);
    const int cell = cy * nx_ + cx;
    for (int k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) test(cell_items_[k]);
  }
  for (int tri : always_) test(tri);
  return best.anchor();
}

CameraIntrinsics load_intrinsics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open intrinsics file " + path.string());
  std::map<std::string, double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    double value;
    std::string extra;
    if (!(ss >> value) || (ss >> extra))
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected `key value`");
    if (key != "f" && key != "ku" && key != "kv" && key != "cu" && key != "cv")
      throw Error(path.string() + ":" + std::to_string(lineno) + ": unknown key `" + key + "`");
    values[key] = value;
  }
  for (const char* key : {"f", "ku", "kv", "cu", "cv"})
    if (!values.count(key)) throw Error(path.string() + ": missing key `" + std::string(key) + "`");
  CameraIntrinsics cam{values["f"], values["ku"], values["kv"], values["cu"], values["cv"]};
  cam.validate();
  return cam;
}

void save_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& cam) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  out << "f " << cam.f << "\nku " << cam.ku << "\nkv " << cam.kv << "\ncu " << cam.cu << "\ncv " << cam.cv << "\n";
}

}  // namespace docrect
