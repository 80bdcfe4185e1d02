#include "docrect/energies.hpp"

#include <cmath>

namespace docrect {

void WeightSchedule::validate() const {
  for (double w : {iso, dist, fair_space, fair_plane, line, ray})
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("objective weights must be finite and nonnegative");
  if (!(escalation > 0.0)) throw Error("weight escalation must be positive");
  if (!(epsilon > 0.0)) throw Error("convergence tolerance must be positive");
  if (max_iterations < 1) throw Error("iteration cap must be at least 1");
  if (rounds < 1) throw Error("round count must be at least 1");
}

Vec3 iso_residuals(const MeshPair& pair, int face) {
  const auto q = pair.dims().face_vertices(face);
  const Vec3 d = pair.space.vertex(q[0]) - pair.space.vertex(q[2]);
  const Vec3 e = pair.space.vertex(q[1]) - pair.space.vertex(q[3]);
  const Vec2 dp = pair.plane.vertex(q[0]) - pair.plane.vertex(q[2]);
  const Vec2 ep = pair.plane.vertex(q[1]) - pair.plane.vertex(q[3]);
  return {d.squaredNorm() - dp.squaredNorm(), e.squaredNorm() - ep.squaredNorm(), d.dot(e) - dp.dot(ep)};
}

double e_iso(const MeshPair& pair, Gradient* grad, double scale) {
  double total = 0.0;
  const auto& dims = pair.dims();
  for (int f = 0; f < dims.face_count(); ++f) {
    const auto q = dims.face_vertices(f);
    const Vec3 d = pair.space.vertex(q[0]) - pair.space.vertex(q[2]);
    const Vec3 e = pair.space.vertex(q[1]) - pair.space.vertex(q[3]);
    const Vec2 dp = pair.plane.vertex(q[0]) - pair.plane.vertex(q[2]);
    const Vec2 ep = pair.plane.vertex(q[1]) - pair.plane.vertex(q[3]);
    const double c1 = d.squaredNorm() - dp.squaredNorm();
    const double c2 = e.squaredNorm() - ep.squaredNorm();
    const double c3 = d.dot(e) - dp.dot(ep);
    total += c1 * c1 + c2 * c2 + c3 * c3;
    if (grad) {
      const Vec3 gd = scale * (4.0 * c1 * d + 2.0 * c3 * e);
      const Vec3 ge = scale * (4.0 * c2 * e + 2.0 * c3 * d);
      const Vec2 gdp = -scale * (4.0 * c1 * dp + 2.0 * c3 * ep);
      const Vec2 gep = -scale * (4.0 * c2 * ep + 2.0 * c3 * dp);
      grad->space[q[0]] += gd;
      grad->space[q[2]] -= gd;
      grad->space[q[1]] += ge;
      grad->space[q[3]] -= ge;
      grad->plane[q[0]] += gdp;
      grad->plane[q[2]] -= gdp;
      grad->plane[q[1]] += gep;
      grad->plane[q[3]] -= gep;
    }
  }
  return total;
}

template <int Dim>
double e_fair(const QuadMesh<Dim>& mesh, std::span<Eigen::Matrix<double, Dim, 1>> grad, double scale) {
  using Point = Eigen::Matrix<double, Dim, 1>;
  const auto& dims = mesh.dims();
  double total = 0.0;
  auto triple = [&](int a, int b, int c) {
    const Point r = mesh.vertex(a) - 2.0 * mesh.vertex(b) + mesh.vertex(c);
    total += r.squaredNorm();
    if (!grad.empty()) {
      const Point g = 2.0 * scale * r;
      grad[a] += g;
      grad[b] -= 2.0 * g;
      grad[c] += g;
    }
  };
  for (int j = 0; j < dims.n2; ++j)
    for (int i = 1; i + 1 < dims.n1; ++i) triple(dims.vertex(i - 1, j), dims.vertex(i, j), dims.vertex(i + 1, j));
  for (int i = 0; i < dims.n1; ++i)
    for (int j = 1; j + 1 < dims.n2; ++j) triple(dims.vertex(i, j - 1), dims.vertex(i, j), dims.vertex(i, j + 1));
  return total;
}

template double e_fair<2>(const QuadMesh<2>&, std::span<Vec2>, double);
template double e_fair<3>(const QuadMesh<3>&, std::span<Vec3>, double);

double e_dist(const SpaceMesh& mesh, std::span<const PointCorrespondence> correspondences, std::span<Vec3> grad,
              double scale) {
  if (correspondences.empty()) throw Error("distance term has no valid data points");
  const double inv = 1.0 / static_cast<double>(correspondences.size());
  double total = 0.0;
  for (const auto& c : correspondences) {
    const auto idx = mesh.dims().triangle_vertices(c.anchor.face, c.anchor.triangle);
    const Vec3 foot = c.anchor.weights[0] * mesh.vertex(idx[0]) + c.anchor.weights[1] * mesh.vertex(idx[1]) +
                      c.anchor.weights[2] * mesh.vertex(idx[2]);
    const Vec3 r = c.point - foot;
    const double rn = r.dot(c.normal);
    total += kPointWeight * r.squaredNorm() + kTangentWeight * rn * rn;
    if (!grad.empty()) {
      // d/dfoot = -(2 b1 r + 2 b2 (r.N) N)
      const Vec3 g = -2.0 * scale * inv * (kPointWeight * r + kTangentWeight * rn * c.normal);
      for (int k = 0; k < 3; ++k) grad[idx[k]] += c.anchor.weights[k] * g;
    }
  }
  return total * inv;
}

int feature_point_count(std::span<const FeatureLine> lines) {
  int n = 0;
  for (const auto& l : lines) n += l.size();
  return n;
}

double e_ray(const SpaceMesh& mesh, std::span<const FeatureLine> lines, std::span<Vec3> grad, double scale) {
  const int h2 = feature_point_count(lines);
  if (h2 == 0) return 0.0;
  const double inv = 1.0 / h2;
  double total = 0.0;
  for (const auto& line : lines) {
    for (int k = 0; k < line.size(); ++k) {
      const auto& a = line.anchors[k];
      const auto& ray = line.rays[k];
      const auto idx = mesh.dims().triangle_vertices(a.face, a.triangle);
      const Vec3 p =
          a.weights[0] * mesh.vertex(idx[0]) + a.weights[1] * mesh.vertex(idx[1]) + a.weights[2] * mesh.vertex(idx[2]);
      const double r1 = ray.n1.dot(p);
      const double r2 = ray.n2.dot(p);
      total += r1 * r1 + r2 * r2;
      if (!grad.empty()) {
        const Vec3 g = 2.0 * scale * inv * (r1 * ray.n1 + r2 * ray.n2);
        for (int m = 0; m < 3; ++m) grad[idx[m]] += a.weights[m] * g;
      }
    }
  }
  return total * inv;
}

double e_line(const PlaneMesh& plane, std::span<const FeatureLine> lines, std::span<Vec2> grad_plane,
              std::span<Vec2> grad_lines, double scale) {
  const int h2 = feature_point_count(lines);
  if (h2 == 0) return 0.0;
  const double inv = 1.0 / h2;
  double total = 0.0;
  for (size_t l = 0; l < lines.size(); ++l) {
    const auto& line = lines[l];
    if (line.size() < 2) continue;
    const Vec2 n = line.fitted.normal();
    const Vec2 dn = line.fitted.direction();  // d n / d theta
    for (const auto& a : line.anchors) {
      const auto idx = plane.dims().triangle_vertices(a.face, a.triangle);
      const Vec2 p = a.weights[0] * plane.vertex(idx[0]) + a.weights[1] * plane.vertex(idx[1]) +
                     a.weights[2] * plane.vertex(idx[2]);
      const double r = n.dot(p) - line.fitted.offset;
      total += r * r;
      const double g = 2.0 * scale * inv * r;
      if (!grad_plane.empty())
        for (int m = 0; m < 3; ++m) grad_plane[idx[m]] += (a.weights[m] * g) * n;
      if (!grad_lines.empty()) grad_lines[l] += Vec2(g * dn.dot(p), -g);
    }
  }
  return total * inv;
}

EnergyReport total_objective(const MeshPair& pair, std::span<const PointCorrespondence> correspondences,
                             std::span<const FeatureLine> lines, const WeightSchedule& w, bool with_gradient) {
  EnergyReport rep;
  const int n = pair.space.vertex_count();
  if (with_gradient) rep.gradient = Gradient(n, static_cast<int>(lines.size()));
  auto& g = rep.gradient;
  auto gs = with_gradient ? std::span<Vec3>(g.space) : std::span<Vec3>();
  auto gp = with_gradient ? std::span<Vec2>(g.plane) : std::span<Vec2>();
  auto gl = with_gradient ? std::span<Vec2>(g.lines) : std::span<Vec2>();

  rep.iso = e_iso(pair, (with_gradient && w.iso > 0.0) ? &g : nullptr, w.iso);
  if (!correspondences.empty())
    rep.dist = e_dist(pair.space, correspondences, w.dist > 0.0 ? gs : std::span<Vec3>(), w.dist);
  else if (w.dist > 0.0)
    throw Error("distance term has no valid data points");
  rep.fair_space = e_fair<3>(pair.space, w.fair_space > 0.0 ? gs : std::span<Vec3>(), w.fair_space);
  rep.fair_plane = e_fair<2>(pair.plane, w.fair_plane > 0.0 ? gp : std::span<Vec2>(), w.fair_plane);
  rep.line = e_line(pair.plane, lines, w.line > 0.0 ? gp : std::span<Vec2>(), w.line > 0.0 ? gl : std::span<Vec2>(),
                    w.line);
  rep.ray = e_ray(pair.space, lines, w.ray > 0.0 ? gs : std::span<Vec3>(), w.ray);
  rep.total = w.iso * rep.iso + w.dist * rep.dist + w.fair_space * rep.fair_space + w.fair_plane * rep.fair_plane +
              w.line * rep.line + w.ray * rep.ray;
  return rep;
}

Eigen::VectorXd pack_variables(const MeshPair& pair, std::span<const FeatureLine> lines) {
  const int n = pair.space.vertex_count();
  Eigen::VectorXd x(5 * n + 2 * static_cast<int>(lines.size()));
  for (int i = 0; i < n; ++i) x.segment<3>(3 * i) = pair.space.vertex(i);
  for (int i = 0; i < n; ++i) x.segment<2>(3 * n + 2 * i) = pair.plane.vertex(i);
  for (size_t l = 0; l < lines.size(); ++l) {
    x[5 * n + 2 * l] = lines[l].fitted.theta;
    x[5 * n + 2 * l + 1] = lines[l].fitted.offset;
  }
  return x;
}

void unpack_variables(const Eigen::VectorXd& x, MeshPair& pair, std::span<FeatureLine> lines) {
  const int n = pair.space.vertex_count();
  if (x.size() != 5 * n + 2 * static_cast<int>(lines.size())) throw Error("variable vector has the wrong size");
  for (int i = 0; i < n; ++i) pair.space.vertex(i) = x.segment<3>(3 * i);
  for (int i = 0; i < n; ++i) pair.plane.vertex(i) = x.segment<2>(3 * n + 2 * i);
  for (size_t l = 0; l < lines.size(); ++l) {
    lines[l].fitted.theta = x[5 * n + 2 * l];
    lines[l].fitted.offset = x[5 * n + 2 * l + 1];
  }
}

Eigen::VectorXd flatten(const Gradient& g) {
  const int n = static_cast<int>(g.space.size());
  Eigen::VectorXd x(5 * n + 2 * static_cast<int>(g.lines.size()));
  for (int i = 0; i < n; ++i) x.segment<3>(3 * i) = g.space[i];
  for (int i = 0; i < n; ++i) x.segment<2>(3 * n + 2 * i) = g.plane[i];
  for (size_t l = 0; l < g.lines.size(); ++l) x.segment<2>(5 * n + 2 * l) = g.lines[l];
  return x;
}

}  // namespace docrect
