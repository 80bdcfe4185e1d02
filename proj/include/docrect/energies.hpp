#pragma once

#include "docrect/features.hpp"
#include "docrect/geometry.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace docrect {

/// Weights of the six objective terms plus the loop controls.
struct WeightSchedule {
  double iso = 1.0;          ///< lambda_1, isometry
  double dist = 1.0;         ///< lambda_2, data fidelity
  double fair_space = 1e-4;  ///< lambda_3, fairness of the 3D mesh
  double fair_plane = 0.1;   ///< lambda_4, fairness of the planar mesh
  double line = 1.0;         ///< lambda_5, straightness
  double ray = 1.0;          ///< lambda_6, ray membership
  double escalation = 4.0;   ///< factor on line/ray weights after each subdivision
  double epsilon = 0.01;     ///< relative-decrease tolerance of the inner loop
  int max_iterations = 100;  ///< Q
  int rounds = 4;

  void validate() const;
};

/// A data point with its frozen footpoint anchor and triangle normal.
struct PointCorrespondence {
  Vec3 point;
  BarycentricAnchor anchor;
  Vec3 normal;
};

inline constexpr double kPointWeight = 1.0;    // beta_1
inline constexpr double kTangentWeight = 0.1;  // beta_2

/// Gradient over X = (V, V', line parameters). Line entries hold
/// (d/dtheta, d/doffset).
struct Gradient {
  std::vector<Vec3> space;
  std::vector<Vec2> plane;
  std::vector<Vec2> lines;

  Gradient() = default;
  Gradient(int vertices, int line_count)
      : space(vertices, Vec3::Zero()), plane(vertices, Vec2::Zero()), lines(line_count, Vec2::Zero()) {}
};

/// Sum of squared diagonal-length and diagonal-product mismatches per face.
double e_iso(const MeshPair& pair, Gradient* grad = nullptr, double scale = 1.0);

/// Residuals (c1, c2, c3) of one face.
Vec3 iso_residuals(const MeshPair& pair, int face);

/// Sum of squared second differences along grid rows and columns.
template <int Dim>
double e_fair(const QuadMesh<Dim>& mesh, std::span<Eigen::Matrix<double, Dim, 1>> grad = {}, double scale = 1.0);

extern template double e_fair<2>(const QuadMesh<2>&, std::span<Vec2>, double);
extern template double e_fair<3>(const QuadMesh<3>&, std::span<Vec3>, double);

/// Blended point-point / point-tangent distance, averaged over correspondences.
double e_dist(const SpaceMesh& mesh, std::span<const PointCorrespondence> correspondences,
              std::span<Vec3> grad = {}, double scale = 1.0);

/// Number of feature points over all lines.
int feature_point_count(std::span<const FeatureLine> lines);

/// Mean squared distance of 3D feature points to their viewing rays.
double e_ray(const SpaceMesh& mesh, std::span<const FeatureLine> lines, std::span<Vec3> grad = {},
             double scale = 1.0);

/// Mean squared distance of planar feature points to their fitted lines.
/// Gradient covers both the planar vertices and the line parameters.
double e_line(const PlaneMesh& plane, std::span<const FeatureLine> lines, std::span<Vec2> grad_plane = {},
              std::span<Vec2> grad_lines = {}, double scale = 1.0);

struct EnergyReport {
  double iso = 0.0;
  double dist = 0.0;
  double fair_space = 0.0;
  double fair_plane = 0.0;
  double line = 0.0;
  double ray = 0.0;
  double total = 0.0;
  Gradient gradient;
};

/// Weighted sum of all terms with the stacked gradient. Terms with zero weight
/// still report their value when their inputs exist.
EnergyReport total_objective(const MeshPair& pair, std::span<const PointCorrespondence> correspondences,
                             std::span<const FeatureLine> lines, const WeightSchedule& weights,
                             bool with_gradient = true);

/// X = (V, V', A_line) as a flat vector and back.
Eigen::VectorXd pack_variables(const MeshPair& pair, std::span<const FeatureLine> lines);
void unpack_variables(const Eigen::VectorXd& x, MeshPair& pair, std::span<FeatureLine> lines);
Eigen::VectorXd flatten(const Gradient& grad);

}  // namespace docrect
