#include "docrect/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <queue>
#include <sstream>

namespace docrect {

int PointCloud::valid_count() const {
  return static_cast<int>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

std::vector<Vec3> load_points(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open point file " + path.string());
  std::vector<Vec3> pts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string tok[3];
    if (!(ss >> tok[0])) continue;
    Vec3 p;
    std::string extra;
    if (!(ss >> tok[1] >> tok[2]) || (ss >> extra))
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected `x y z`");
    for (int k = 0; k < 3; ++k) {
      try {
        size_t used = 0;
        p[k] = std::stod(tok[k], &used);
        if (used != tok[k].size()) throw std::invalid_argument(tok[k]);
      } catch (const std::exception&) {
        throw Error(path.string() + ":" + std::to_string(lineno) + ": bad number `" + tok[k] + "`");
      }
    }
    if (!p.allFinite()) throw Error(path.string() + ":" + std::to_string(lineno) + ": non-finite coordinate");
    pts.push_back(p);
  }
  return pts;
}

void save_points(const std::filesystem::path& path, const std::vector<Vec3>& points) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& p : points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

double bounding_diagonal(std::span<const Vec3> points) {
  if (points.empty()) return 0.0;
  Vec3 lo = points.front(), hi = lo;
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

namespace {

ClosestPoint closest_on_triangle(const SpaceMesh& mesh, int tri, const Vec3& x) {
  const auto v = mesh.triangle(tri / 2, tri % 2);
  ClosestPoint cp;
  cp.anchor = BarycentricAnchor{tri / 2, tri % 2, closest_point_weights<3>(x, v[0], v[1], v[2])};
  const auto& w = cp.anchor.weights;
  cp.footpoint = w[0] * v[0] + w[1] * v[1] + w[2] * v[2];
  const Vec3 n = (v[1] - v[0]).cross(v[2] - v[0]);
  const double len = n.norm();
  cp.normal = len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
  cp.distance = (x - cp.footpoint).norm();
  return cp;
}

bool better(const ClosestPoint& a, int tri_a, const ClosestPoint& b, int tri_b) {
  return a.distance < b.distance || (a.distance == b.distance && tri_a < tri_b);
}

}  // namespace

ClosestPoint closest_point_brute(const SpaceMesh& mesh, const Vec3& x) {
  ClosestPoint best;
  best.distance = std::numeric_limits<double>::infinity();
  int best_tri = -1;
  for (int tri = 0; tri < mesh.triangle_count(); ++tri) {
    ClosestPoint cp = closest_on_triangle(mesh, tri, x);
    if (best_tri < 0 || better(cp, tri, best, best_tri)) {
      best = cp;
      best_tri = tri;
    }
  }
  return best;
}

MeshProximity::MeshProximity(const SpaceMesh& mesh) : mesh_(&mesh) {
  const int n = mesh.triangle_count();
  tris_.resize(n);
  centroids_.resize(n);
  for (int t = 0; t < n; ++t) {
    tris_[t] = t;
    const auto v = mesh.triangle(t / 2, t % 2);
    centroids_[t] = (v[0] + v[1] + v[2]) / 3.0;
  }
  nodes_.reserve(n / 2 + 4);
  build(0, n);
}

int MeshProximity::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{});
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  Vec3 clo = lo, chi = hi;
  for (int i = begin; i < end; ++i) {
    const auto v = mesh_->triangle(tris_[i] / 2, tris_[i] % 2);
    for (const auto& p : v) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    clo = clo.cwiseMin(centroids_[tris_[i]]);
    chi = chi.cwiseMax(centroids_[tris_[i]]);
  }
  nodes_[id].lo = lo;
  nodes_[id].hi = hi;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= 4) return id;
  int axis;
  (chi - clo).maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(tris_.begin() + begin, tris_.begin() + mid, tris_.begin() + end,
                   [&](int a, int b) { return centroids_[a][axis] < centroids_[b][axis]; });
  const int l = build(begin, mid);
  const int r = build(mid, end);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

ClosestPoint MeshProximity::closest(const Vec3& x) const {
  ClosestPoint best;
  best.distance = std::numeric_limits<double>::infinity();
  int best_tri = -1;
  auto box_dist = [&](const Node& n) { return (x.cwiseMax(n.lo).cwiseMin(n.hi) - x).norm(); };
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  queue.push({box_dist(nodes_[0]), 0});
  while (!queue.empty()) {
    const auto [d, id] = queue.top();
    queue.pop();
    if (d > best.distance) break;
    const Node& n = nodes_[id];
    if (n.left < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const int tri = tris_[i];
        ClosestPoint cp = closest_on_triangle(*mesh_, tri, x);
        if (best_tri < 0 || better(cp, tri, best, best_tri)) {
          best = cp;
          best_tri = tri;
        }
      }
      continue;
    }
    queue.push({box_dist(nodes_[n.left]), n.left});
    queue.push({box_dist(nodes_[n.right]), n.right});
  }
  return best;
}

ClosestPoint closest_point_on_mesh(const SpaceMesh& mesh, const Vec3& x) { return MeshProximity(mesh).closest(x); }

int filter_noise(PointCloud& cloud, const MeshProximity& proximity, double phi) {
  cloud.valid.resize(cloud.points.size());
  int count = 0;
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    cloud.valid[i] = proximity.closest(cloud.points[i]).distance <= phi ? 1 : 0;
    count += cloud.valid[i];
  }
  if (count == 0) throw Error("noise filtering rejected every data point");
  return count;
}

int filter_noise(PointCloud& cloud, const SpaceMesh& mesh, double phi) {
  return filter_noise(cloud, MeshProximity(mesh), phi);
}

std::vector<PointCorrespondence> correspondences(const PointCloud& cloud, const MeshProximity& proximity) {
  std::vector<PointCorrespondence> out;
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    if (!cloud.valid[i]) continue;
    const auto cp = proximity.closest(cloud.points[i]);
    out.push_back({cloud.points[i], cp.anchor, cp.normal});
  }
  return out;
}

std::vector<PointCorrespondence> filter_and_correspond(PointCloud& cloud, const MeshProximity& proximity,
                                                       double phi) {
  cloud.valid.resize(cloud.points.size());
  std::vector<PointCorrespondence> out;
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const auto cp = proximity.closest(cloud.points[i]);
    cloud.valid[i] = cp.distance <= phi ? 1 : 0;
    if (cloud.valid[i]) out.push_back({cloud.points[i], cp.anchor, cp.normal});
  }
  if (out.empty()) throw Error("noise filtering rejected every data point");
  return out;
}

}  // namespace docrect
