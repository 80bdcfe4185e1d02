#pragma once

#include "docrect/camera.hpp"
#include "docrect/energies.hpp"
#include "docrect/features.hpp"
#include "docrect/geometry.hpp"
#include "docrect/lbfgs.hpp"
#include "docrect/pointcloud.hpp"

#include <string>
#include <vector>

namespace docrect {

struct PipelineConfig {
  WeightSchedule weights;
  GridDims dims{20, 30};
  int k = 3;                      ///< neighbours for depth interpolation
  double phi = 0.06;              ///< noise tolerance, fraction of the cloud diagonal
  double straightness_tol = 0.1;  ///< max h/w when merging segments
  double axis_tol_deg = 20.0;
  double endpoint_factor = 0.5;   ///< endpoint box = factor * median edge of the unsubdivided planar mesh
  int max_segment_points = 50;
  bool use_features = true;       ///< E_line / E_ray active
  bool project_lines = true;      ///< feature-line projection before each solve
  bool refine = true;             ///< feature-free refinement of the initial pair
  LbfgsOptions solver{50, 10, 1e-6};
  int divergence_limit = 5;       ///< consecutive increases of F that abort the run

  int subdivisions() const { return weights.rounds - 1; }
  void validate() const;
};

struct PipelineInputs {
  std::vector<Vec3> cloud;
  CameraIntrinsics cam;
  std::vector<FeatureSegment> segments;  ///< may be empty; boundary class included
  int image_width = 0;                   ///< fallback region when nothing else is known
  int image_height = 0;
};

/// One row of the per-iteration diagnostics log.
struct DiagnosticRow {
  int round = 0;  ///< 0 is the initial refinement
  int iter = 0;
  double f = 0.0;        ///< F after the solve
  double f_start = 0.0;  ///< F at the start of the solve
  double iso = 0.0, dist = 0.0, fair_space = 0.0, fair_plane = 0.0, line = 0.0, ray = 0.0;
  int valid_points = 0;
  int lines = 0;
  int solver_steps = 0;
  bool monotone = true;    ///< F never increased inside the solve
  std::string stop = "-";  ///< "eps" or "cap" on the iteration that ends a round
  double wall_time = 0.0;  ///< seconds since the start of the run
};

struct RoundSummary {
  int round = 0;
  int iterations = 0;
  bool by_epsilon = false;
  double lambda_line = 0.0;
  double lambda_ray = 0.0;
  double iso_per_area_start = 0.0;
  double iso_per_area_end = 0.0;
};

struct PipelineResult {
  MeshPair pair;                   ///< in the units of the input cloud
  std::vector<FeatureLine> lines;  ///< lines of the final mesh, fitted in input units
  std::vector<std::uint8_t> valid;
  std::vector<DiagnosticRow> diagnostics;
  std::vector<RoundSummary> rounds;
  double scale = 1.0;  ///< input units -> normalized units
  EnergyReport final_energy;  ///< normalized units, without gradient
  bool diverged = false;
};

/// Pixel rectangle the initial grid spans: bounding box of the boundary
/// segments, else of the projected cloud, else the image.
Rect initial_region(const PipelineInputs& inputs);

/// Uniform pixel grid over the region.
PlaneMesh init_image_mesh(const Rect& region, GridDims dims);

/// Points whose mean distance to their `neighbours` nearest neighbours is at
/// most `factor` times the median of that statistic. Used only to seed the
/// initial mesh, which is otherwise pulled apart by scattered outliers.
std::vector<Vec3> dense_subset(std::span<const Vec3> cloud, int neighbours = 8, double factor = 2.0);

/// Depth of each grid pixel from its k nearest projected cloud points,
/// weighted by 1 / (1 + r^2) with r in pixels, then back-projected.
SpaceMesh init_space_mesh(const PlaneMesh& pixels, std::span<const Vec3> cloud, const CameraIntrinsics& cam, int k);

/// Flattening by per-quad development stitched with least squares, then
/// rotated so the bounding box of the result is axis aligned.
PlaneMesh init_plane_mesh(const SpaceMesh& space);

/// Rotates (by at most 45 degrees) so the principal box of the vertices is
/// axis aligned and moves the minimum corner to the origin.
void upright(PlaneMesh& plane);

struct SolveSummary {
  EnergyReport start;
  EnergyReport end;
  int steps = 0;
  bool monotone = true;
  bool line_search_failed = false;
};

/// One quasi-Newton solve of F over (V, V', line parameters) with frozen
/// correspondences.
SolveSummary minimize_F(MeshPair& pair, std::vector<FeatureLine>& lines,
                        std::span<const PointCorrespondence> correspondences, const WeightSchedule& weights,
                        const LbfgsOptions& solver);

/// Last initialization step: the inner loop with the feature weights at zero.
/// Works on a normalized pair and cloud.
MeshPair refine_initial(MeshPair pair, PointCloud& cloud, const PipelineConfig& config,
                        std::vector<DiagnosticRow>* rows = nullptr);

/// The full rectification solve.
PipelineResult run(const PipelineConfig& config, const PipelineInputs& inputs);

}  // namespace docrect
