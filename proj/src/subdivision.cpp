#include "docrect/subdivision.hpp"

namespace docrect {

template <int Dim>
QuadMesh<Dim> catmull_clark(const QuadMesh<Dim>& mesh) {
  using Point = Eigen::Matrix<double, Dim, 1>;
  const GridDims d = mesh.dims();
  const GridDims nd{2 * d.n1 - 1, 2 * d.n2 - 1};
  std::vector<Point> out(nd.vertex_count(), Point::Zero());

  auto face_point = [&](int i, int j) {
    return Point(0.25 * (mesh.at(i, j) + mesh.at(i + 1, j) + mesh.at(i + 1, j + 1) + mesh.at(i, j + 1)));
  };
  std::vector<Point> faces(d.face_count());
  for (int j = 0; j + 1 < d.n2; ++j)
    for (int i = 0; i + 1 < d.n1; ++i) {
      faces[d.face(i, j)] = face_point(i, j);
      out[nd.vertex(2 * i + 1, 2 * j + 1)] = faces[d.face(i, j)];
    }

  // Edges along the first grid direction.
  for (int j = 0; j < d.n2; ++j)
    for (int i = 0; i + 1 < d.n1; ++i) {
      const Point a = mesh.at(i, j), b = mesh.at(i + 1, j);
      Point e;
      if (j == 0 || j == d.n2 - 1)
        e = 0.5 * (a + b);
      else
        e = 0.25 * (a + b + faces[d.face(i, j - 1)] + faces[d.face(i, j)]);
      out[nd.vertex(2 * i + 1, 2 * j)] = e;
    }
  // Edges along the second direction.
  for (int j = 0; j + 1 < d.n2; ++j)
    for (int i = 0; i < d.n1; ++i) {
      const Point a = mesh.at(i, j), b = mesh.at(i, j + 1);
      Point e;
      if (i == 0 || i == d.n1 - 1)
        e = 0.5 * (a + b);
      else
        e = 0.25 * (a + b + faces[d.face(i - 1, j)] + faces[d.face(i, j)]);
      out[nd.vertex(2 * i, 2 * j + 1)] = e;
    }

  for (int j = 0; j < d.n2; ++j)
    for (int i = 0; i < d.n1; ++i) {
      const Point& p = mesh.at(i, j);
      const bool bi = i == 0 || i == d.n1 - 1;
      const bool bj = j == 0 || j == d.n2 - 1;
      Point v;
      if (bi && bj) {
        v = p;
      } else if (bj) {
        v = (mesh.at(i - 1, j) + 6.0 * p + mesh.at(i + 1, j)) / 8.0;
      } else if (bi) {
        v = (mesh.at(i, j - 1) + 6.0 * p + mesh.at(i, j + 1)) / 8.0;
      } else {
        const Point favg = 0.25 * (faces[d.face(i - 1, j - 1)] + faces[d.face(i, j - 1)] + faces[d.face(i - 1, j)] +
                                   faces[d.face(i, j)]);
        const Point ravg =
            0.125 * (4.0 * p + mesh.at(i - 1, j) + mesh.at(i + 1, j) + mesh.at(i, j - 1) + mesh.at(i, j + 1));
        v = 0.25 * (favg + 2.0 * ravg + p);
      }
      out[nd.vertex(2 * i, 2 * j)] = v;
    }
  return QuadMesh<Dim>(nd, std::move(out));
}

template QuadMesh<2> catmull_clark<2>(const QuadMesh<2>&);
template QuadMesh<3> catmull_clark<3>(const QuadMesh<3>&);

MeshPair subdivide_pair(const MeshPair& pair) {
  return MeshPair(catmull_clark<3>(pair.space), catmull_clark<2>(pair.plane));
}

std::vector<BarycentricAnchor> remap_anchors(const MeshPair& before, const MeshPair& after,
                                             std::span<const BarycentricAnchor> anchors, RemapReport* report) {
  const PlaneLocator locator(after.plane);
  std::vector<BarycentricAnchor> out;
  out.reserve(anchors.size());
  for (const auto& a : anchors) {
    const Vec2 p = barycentric_eval(before.plane, a);
    if (auto hit = locator.locate(p)) {
      out.push_back(*hit);
    } else {
      out.push_back(locator.nearest(p));
      if (report) ++report->clamped;
    }
  }
  return out;
}

}  // namespace docrect
