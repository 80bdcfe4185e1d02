#pragma once

#include "docrect/geometry.hpp"

#include <span>
#include <vector>

namespace docrect {

/// One Catmull-Clark step on a regular grid: (n1, n2) -> (2 n1 - 1, 2 n2 - 1).
/// Boundary curves follow the cubic B-spline rule and corners are kept.
template <int Dim>
QuadMesh<Dim> catmull_clark(const QuadMesh<Dim>& mesh);

extern template QuadMesh<2> catmull_clark<2>(const QuadMesh<2>&);
extern template QuadMesh<3> catmull_clark<3>(const QuadMesh<3>&);

MeshPair subdivide_pair(const MeshPair& pair);

struct RemapReport {
  int clamped = 0;  ///< anchors whose planar position fell outside the refined mesh
};

/// Re-expresses anchors of `before` on `after` by their planar position.
std::vector<BarycentricAnchor> remap_anchors(const MeshPair& before, const MeshPair& after,
                                             std::span<const BarycentricAnchor> anchors,
                                             RemapReport* report = nullptr);

}  // namespace docrect
