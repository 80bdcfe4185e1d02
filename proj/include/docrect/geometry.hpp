#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace docrect {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grid shape of a quad mesh. `n1` vertices along the first (u / x) direction,
/// `n2` along the second (v / y). Vertex (i, j) is stored at j * n1 + i.
struct GridDims {
  int n1 = 0;
  int n2 = 0;

  int vertex_count() const { return n1 * n2; }
  int face_count() const { return (n1 - 1) * (n2 - 1); }
  int vertex(int i, int j) const { return j * n1 + i; }
  int face(int i, int j) const { return j * (n1 - 1) + i; }
  bool valid() const { return n1 >= 2 && n2 >= 2; }

  /// Corners of face f as (i,j),(i+1,j),(i+1,j+1),(i,j+1); positively oriented
  /// whenever the grid itself is.
  std::array<int, 4> face_vertices(int f) const {
    const int i = f % (n1 - 1);
    const int j = f / (n1 - 1);
    return {vertex(i, j), vertex(i + 1, j), vertex(i + 1, j + 1), vertex(i, j + 1)};
  }

  /// Quads are split along the v0-v2 diagonal: triangle 0 = (v0,v1,v2),
  /// triangle 1 = (v0,v2,v3).
  std::array<int, 3> triangle_vertices(int f, int t) const {
    const auto q = face_vertices(f);
    if (t == 0) return {q[0], q[1], q[2]};
    return {q[0], q[2], q[3]};
  }

  int triangle_count() const { return 2 * face_count(); }

  friend bool operator==(const GridDims&, const GridDims&) = default;
};

template <int Dim>
class QuadMesh {
 public:
  using Point = Eigen::Matrix<double, Dim, 1>;

  QuadMesh() = default;
  QuadMesh(GridDims dims, std::vector<Point> vertices) : dims_(dims), vertices_(std::move(vertices)) {
    if (!dims_.valid()) throw Error("quad mesh needs at least 2x2 vertices");
    if (static_cast<int>(vertices_.size()) != dims_.vertex_count())
      throw Error("vertex count does not match grid dimensions");
  }

  const GridDims& dims() const { return dims_; }
  int vertex_count() const { return dims_.vertex_count(); }
  int face_count() const { return dims_.face_count(); }
  int triangle_count() const { return dims_.triangle_count(); }

  std::span<const Point> vertices() const { return vertices_; }
  std::span<Point> vertices() { return vertices_; }
  const Point& vertex(int idx) const { return vertices_[idx]; }
  Point& vertex(int idx) { return vertices_[idx]; }
  const Point& at(int i, int j) const { return vertices_[dims_.vertex(i, j)]; }
  Point& at(int i, int j) { return vertices_[dims_.vertex(i, j)]; }

  std::array<Point, 3> triangle(int f, int t) const {
    const auto idx = dims_.triangle_vertices(f, t);
    return {vertices_[idx[0]], vertices_[idx[1]], vertices_[idx[2]]};
  }

 private:
  GridDims dims_;
  std::vector<Point> vertices_;
};

using SpaceMesh = QuadMesh<3>;
using PlaneMesh = QuadMesh<2>;

/// The 3D document mesh and its planar unfolding; same connectivity.
struct MeshPair {
  SpaceMesh space;
  PlaneMesh plane;

  MeshPair() = default;
  MeshPair(SpaceMesh s, PlaneMesh p) : space(std::move(s)), plane(std::move(p)) {
    if (!(space.dims() == plane.dims())) throw Error("mesh pair dimensions differ");
  }
  const GridDims& dims() const { return space.dims(); }
};

/// Identifies the same material point on both meshes of a pair.
struct BarycentricAnchor {
  int face = 0;
  int triangle = 0;
  Vec3 weights = Vec3(1.0, 0.0, 0.0);

  friend bool operator==(const BarycentricAnchor& a, const BarycentricAnchor& b) {
    return a.face == b.face && a.triangle == b.triangle && a.weights == b.weights;
  }
};

template <int Dim>
Eigen::Matrix<double, Dim, 1> barycentric_eval(const QuadMesh<Dim>& mesh, const BarycentricAnchor& anchor) {
  if (anchor.face < 0 || anchor.face >= mesh.face_count() || anchor.triangle < 0 || anchor.triangle > 1)
    throw Error("barycentric anchor refers to a face outside the mesh");
  const auto idx = mesh.dims().triangle_vertices(anchor.face, anchor.triangle);
  return anchor.weights[0] * mesh.vertex(idx[0]) + anchor.weights[1] * mesh.vertex(idx[1]) +
         anchor.weights[2] * mesh.vertex(idx[2]);
}

/// Barycentric coordinates of p with respect to triangle (a,b,c); nullopt when
/// the triangle is degenerate.
std::optional<Vec3> barycentric_coordinates(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c);

/// Clamps tiny negative weights and renormalizes to sum 1.
Vec3 clamp_weights(const Vec3& w);

struct LocateStats {
  int degenerate_triangles = 0;
};

/// Brute-force point location in a planar mesh.
std::optional<BarycentricAnchor> locate_point(const PlaneMesh& mesh, const Vec2& p, LocateStats* stats = nullptr);

/// Uniform-grid index over the triangles of a planar mesh. Holds a reference to
/// the mesh; rebuild after the mesh moves.
class PlaneLocator {
 public:
  explicit PlaneLocator(const PlaneMesh& mesh);

  std::optional<BarycentricAnchor> locate(const Vec2& p) const;
  /// Anchor of the closest point of the mesh to p (p itself when inside).
  BarycentricAnchor nearest(const Vec2& p) const;
  int degenerate_triangles() const { return degenerate_; }

 private:
  std::optional<BarycentricAnchor> test_triangle(int tri, const Vec2& p) const;
  int cell_of(double x, double y, int& cx, int& cy) const;

  const PlaneMesh* mesh_;
  Vec2 origin_ = Vec2::Zero();
  double cell_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<int> cell_start_;
  std::vector<int> cell_items_;
  int degenerate_ = 0;
};

/// Closest point on triangle (a,b,c) to p, as barycentric weights.
template <int Dim>
Vec3 closest_point_weights(const Eigen::Matrix<double, Dim, 1>& p, const Eigen::Matrix<double, Dim, 1>& a,
                           const Eigen::Matrix<double, Dim, 1>& b, const Eigen::Matrix<double, Dim, 1>& c) {
  // Region tests follow Ericson, Real-Time Collision Detection, 5.1.5.
  const auto ab = b - a;
  const auto ac = c - a;
  const auto ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return {1.0, 0.0, 0.0};

  const auto bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return {0.0, 1.0, 0.0};

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return {1.0 - v, v, 0.0};
  }

  const auto cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return {0.0, 0.0, 1.0};

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return {1.0 - w, 0.0, w};
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {0.0, 1.0 - w, w};
  }

  const double denom = va + vb + vc;
  if (denom == 0.0) return {1.0, 0.0, 0.0};
  const double v = vb / denom;
  const double w = vc / denom;
  return {1.0 - v - w, v, w};
}

struct OrientedBox {
  Vec2 center = Vec2::Zero();
  Vec2 major = Vec2::UnitX();
  Vec2 minor = Vec2::UnitY();
  double w = 0.0;  ///< half-length along `major`
  double h = 0.0;  ///< half-length along `minor`

  /// h / w; 0 for a box with no width.
  double straightness() const { return w > 0.0 ? h / w : 0.0; }
};

/// Principal-axis bounding rectangle of a point set.
OrientedBox obb_of_points(std::span<const Vec2> points);

/// Axis-aligned rectangle.
struct Rect {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();

  double width() const { return max.x() - min.x(); }
  double height() const { return max.y() - min.y(); }
  bool empty() const { return !(width() > 0.0 && height() > 0.0); }
  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
  void expand(const Vec2& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  static Rect of(std::span<const Vec2> points);
};

/// Signed area of a planar triangle.
inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}

/// Median length over all grid edges.
template <int Dim>
double median_edge_length(const QuadMesh<Dim>& mesh);

extern template double median_edge_length<2>(const QuadMesh<2>&);
extern template double median_edge_length<3>(const QuadMesh<3>&);

}  // namespace docrect
