#include "docrect/pipeline.hpp"

#include "docrect/kdtree.hpp"
#include "docrect/subdivision.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace docrect {

void PipelineConfig::validate() const {
  weights.validate();
  if (!dims.valid()) throw Error("initial grid must be at least 2x2");
  if (k < 1) throw Error("k must be at least 1");
  if (!(phi > 0.0)) throw Error("noise tolerance must be positive");
  if (!(straightness_tol > 0.0)) throw Error("straightness tolerance must be positive");
  if (!(endpoint_factor > 0.0)) throw Error("endpoint factor must be positive");
  if (max_segment_points < 2) throw Error("segments need at least two sample points");
  if (solver.max_iterations < 1 || solver.memory < 1) throw Error("bad solver settings");
  if (divergence_limit < 1) throw Error("divergence limit must be at least 1");
}

Rect initial_region(const PipelineInputs& inputs) {
  std::vector<Vec2> pts;
  for (const auto& s : inputs.segments)
    if (s.cls == FeatureClass::Boundary) pts.insert(pts.end(), s.pixels.begin(), s.pixels.end());
  if (pts.empty())
    for (const auto& p : inputs.cloud)
      if (p.z() > 0.0) pts.push_back(project(inputs.cam, p));
  Rect r;
  if (!pts.empty()) r = Rect::of(pts);
  if (r.empty() && inputs.image_width > 0 && inputs.image_height > 0)
    r = Rect{Vec2(0.0, 0.0), Vec2(inputs.image_width - 1.0, inputs.image_height - 1.0)};
  return r;
}

PlaneMesh init_image_mesh(const Rect& region, GridDims dims) {
  if (!dims.valid()) throw Error("grid must be at least 2x2");
  if (region.empty() || !region.min.allFinite() || !region.max.allFinite())
    throw Error("degenerate region for the image grid");
  std::vector<Vec2> v(dims.vertex_count());
  const double du = region.width() / (dims.n1 - 1);
  const double dv = region.height() / (dims.n2 - 1);
  for (int j = 0; j < dims.n2; ++j)
    for (int i = 0; i < dims.n1; ++i) v[dims.vertex(i, j)] = region.min + Vec2(i * du, j * dv);
  return PlaneMesh(dims, std::move(v));
}

std::vector<Vec3> dense_subset(std::span<const Vec3> cloud, int neighbours, double factor) {
  const int n = static_cast<int>(cloud.size());
  if (n <= neighbours) return {cloud.begin(), cloud.end()};
  const KdTree<3> tree(std::vector<Vec3>(cloud.begin(), cloud.end()));
  std::vector<double> spread(n);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int s : tree.knn(cloud[i], neighbours + 1)) sum += (tree.point(s) - cloud[i]).norm();
    spread[i] = sum / neighbours;
  }
  std::vector<double> sorted = spread;
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  const double limit = factor * sorted[n / 2];
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i)
    if (spread[i] <= limit) out.push_back(cloud[i]);
  return out;
}

SpaceMesh init_space_mesh(const PlaneMesh& pixels, std::span<const Vec3> cloud, const CameraIntrinsics& cam, int k) {
  std::vector<Vec2> proj;
  std::vector<double> depth;
  for (const auto& p : cloud) {
    if (!(p.z() > 0.0)) continue;
    proj.push_back(project(cam, p));
    depth.push_back(p.z());
  }
  if (proj.empty()) throw Error("no cloud point in front of the camera");
  if (static_cast<int>(proj.size()) < k) throw Error("fewer cloud points than interpolation neighbours");
  const KdTree<2> tree(std::move(proj));
  std::vector<Vec3> v(pixels.vertex_count());
  for (int i = 0; i < pixels.vertex_count(); ++i) {
    const Vec2& q = pixels.vertex(i);
    double num = 0.0, den = 0.0;
    for (int s : tree.knn(q, k)) {
      const double r2 = (tree.point(s) - q).squaredNorm();
      const double w = 1.0 / (1.0 + r2);
      num += w * depth[s];
      den += w;
    }
    v[i] = back_project(cam, q, num / den);
  }
  return SpaceMesh(pixels.dims(), std::move(v));
}

void upright(PlaneMesh& plane) {
  const auto box = obb_of_points(plane.vertices());
  double angle = std::atan2(box.major.y(), box.major.x());
  const double quarter = M_PI / 2.0;
  angle -= quarter * std::round(angle / quarter);
  const Eigen::Rotation2Dd rot(-angle);
  for (auto& p : plane.vertices()) p = rot * p;
  Vec2 lo = plane.vertex(0);
  for (const auto& p : plane.vertices()) lo = lo.cwiseMin(p);
  for (auto& p : plane.vertices()) p -= lo;
}

PlaneMesh init_plane_mesh(const SpaceMesh& space) {
  const GridDims d = space.dims();
  const int n = d.vertex_count();
  const int nf = d.face_count();
  static constexpr int kPairs[6][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}, {1, 3}};

  // Isometric development of every quad into its own 2D frame.
  std::vector<std::array<Vec2, 4>> local(nf);
  for (int f = 0; f < nf; ++f) {
    const auto q = d.face_vertices(f);
    std::array<Vec3, 4> p;
    for (int k = 0; k < 4; ++k) p[k] = space.vertex(q[k]);
    Vec3 nrm = (p[2] - p[0]).cross(p[3] - p[1]);
    if (nrm.norm() == 0.0) throw Error("degenerate quad in the 3D mesh");
    nrm.normalize();
    Vec3 t1 = (p[1] - p[0]) - (p[1] - p[0]).dot(nrm) * nrm;
    if (t1.norm() == 0.0) throw Error("degenerate quad in the 3D mesh");
    t1.normalize();
    const Vec3 t2 = nrm.cross(t1);
    const Vec3 c = 0.25 * (p[0] + p[1] + p[2] + p[3]);
    for (int k = 0; k < 4; ++k) local[f][k] = Vec2((p[k] - c).dot(t1), (p[k] - c).dot(t2));
  }

  // Stitch: min sum_f sum_pairs |(x_a - x_b) - R_f (q_a - q_b)|^2, alternating
  // per-face rotations with one sparse solve.
  std::vector<Eigen::Triplet<double>> trip;
  for (int f = 0; f < nf; ++f) {
    const auto q = d.face_vertices(f);
    for (const auto& pr : kPairs) {
      const int a = q[pr[0]], b = q[pr[1]];
      trip.emplace_back(a, a, 1.0);
      trip.emplace_back(b, b, 1.0);
      trip.emplace_back(a, b, -1.0);
      trip.emplace_back(b, a, -1.0);
    }
  }
  trip.emplace_back(0, 0, 1.0);  // pins vertex 0 at the origin
  Eigen::SparseMatrix<double> lap(n, n);
  lap.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(lap);
  if (solver.info() != Eigen::Success) throw Error("flattening system is singular");

  std::vector<double> rot(nf, 0.0);
  Eigen::MatrixXd x(n, 2);
  for (int iter = 0; iter < 30; ++iter) {
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2);
    for (int f = 0; f < nf; ++f) {
      const auto q = d.face_vertices(f);
      const Eigen::Rotation2Dd r(rot[f]);
      for (const auto& pr : kPairs) {
        const Vec2 e = r * (local[f][pr[0]] - local[f][pr[1]]);
        rhs.row(q[pr[0]]) += e.transpose();
        rhs.row(q[pr[1]]) -= e.transpose();
      }
    }
    x = solver.solve(rhs);
    for (int f = 0; f < nf; ++f) {
      const auto q = d.face_vertices(f);
      double dot = 0.0, cross = 0.0;
      for (const auto& pr : kPairs) {
        const Vec2 e = local[f][pr[0]] - local[f][pr[1]];
        const Vec2 e2 = x.row(q[pr[0]]).transpose() - x.row(q[pr[1]]).transpose();
        dot += e.dot(e2);
        cross += e.x() * e2.y() - e.y() * e2.x();
      }
      rot[f] = std::atan2(cross, dot);
    }
  }

  std::vector<Vec2> v(n);
  for (int i = 0; i < n; ++i) v[i] = x.row(i).transpose();
  PlaneMesh plane(d, std::move(v));
  for (int f = 0; f < nf; ++f)
    for (int t = 0; t < 2; ++t) {
      const auto tri = plane.triangle(f, t);
      if (!(signed_area(tri[0], tri[1], tri[2]) > 0.0)) throw Error("initial flattening folds over");
    }
  upright(plane);
  return plane;
}

SolveSummary minimize_F(MeshPair& pair, std::vector<FeatureLine>& lines,
                        std::span<const PointCorrespondence> correspondences, const WeightSchedule& weights,
                        const LbfgsOptions& solver) {
  SolveSummary out;
  out.start = total_objective(pair, correspondences, lines, weights, false);
  MeshPair work = pair;
  std::vector<FeatureLine> work_lines = lines;
  const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    unpack_variables(x, work, work_lines);
    const EnergyReport rep = total_objective(work, correspondences, work_lines, weights, true);
    g = flatten(rep.gradient);
    return rep.total;
  };
  const LbfgsResult res = minimize_lbfgs(objective, pack_variables(pair, lines), solver);
  unpack_variables(res.x, pair, lines);
  out.end = total_objective(pair, correspondences, lines, weights, false);
  out.steps = res.iterations;
  out.line_search_failed = res.line_search_failed;
  for (size_t i = 1; i < res.values.size(); ++i)
    if (res.values[i] > res.values[i - 1]) out.monotone = false;
  return out;
}

namespace {

double plane_area(const PlaneMesh& plane) {
  double a = 0.0;
  for (int f = 0; f < plane.face_count(); ++f)
    for (int t = 0; t < 2; ++t) {
      const auto tri = plane.triangle(f, t);
      a += signed_area(tri[0], tri[1], tri[2]);
    }
  return a;
}

std::vector<FeatureLine> build_lines(const MeshPair& pair, const std::vector<FeatureSegment>& segments,
                                     const CameraIntrinsics& cam, const PipelineConfig& config, double endpoint_tol) {
  if (segments.empty()) return {};
  const RayCaster caster(pair.space, cam);
  auto lifted = lift_segments(segments, cam, pair, caster, config.max_segment_points);
  MergeOptions opt;
  opt.endpoint_tol = endpoint_tol;
  opt.straightness_tol = config.straightness_tol;
  opt.axis_tol_deg = config.axis_tol_deg;
  return merge_feature_lines(std::move(lifted), pair.plane, opt);
}

struct LoopResult {
  int iterations = 0;
  bool by_epsilon = false;
  bool diverged = false;
};

class InnerLoop {
 public:
  using Clock = std::chrono::steady_clock;

  InnerLoop(const PipelineConfig& config, const CameraIntrinsics& cam, const std::vector<FeatureSegment>& segments,
            std::vector<DiagnosticRow>* rows, Clock::time_point start)
      : config_(config), cam_(cam), segments_(segments), rows_(rows), start_(start) {}

  // The box stays at the coarse-mesh scale; after subdivision the gaps between
  // dashed segments would otherwise exceed it.
  void set_endpoint_tol(double tol) { endpoint_tol_ = tol; }

  LoopResult run(int round, MeshPair& pair, PointCloud& cloud, std::vector<FeatureLine>& lines,
                 const WeightSchedule& weights, bool features) {
    LoopResult out;
    double f_prev = 0.0;
    int increases = 0;
    for (int it = 1; it <= weights.max_iterations; ++it) {
      const MeshProximity prox(pair.space);
      const auto corr = filter_and_correspond(cloud, prox, config_.phi);
      lines = features ? build_lines(pair, segments_, cam_, config_, endpoint_tol_) : std::vector<FeatureLine>{};
      if (features && config_.project_lines) project_feature_lines(pair.plane, lines);

      const SolveSummary s = minimize_F(pair, lines, corr, weights, config_.solver);
      out.iterations = it;

      DiagnosticRow row;
      row.round = round;
      row.iter = it;
      row.f = s.end.total;
      row.f_start = s.start.total;
      row.iso = s.end.iso;
      row.dist = s.end.dist;
      row.fair_space = s.end.fair_space;
      row.fair_plane = s.end.fair_plane;
      row.line = s.end.line;
      row.ray = s.end.ray;
      row.valid_points = static_cast<int>(corr.size());
      row.lines = static_cast<int>(lines.size());
      row.solver_steps = s.steps;
      row.monotone = s.monotone;

      bool stop = false;
      if (it > 1) {
        const double change = std::abs(s.end.total - f_prev);
        if (change <= weights.epsilon * std::abs(f_prev)) {
          out.by_epsilon = true;
          row.stop = "eps";
          stop = true;
        }
        increases = s.end.total > f_prev ? increases + 1 : 0;
        if (increases >= config_.divergence_limit) {
          out.diverged = true;
          row.stop = "diverged";
          stop = true;
        }
      }
      if (!stop && it == weights.max_iterations) row.stop = "cap";
      f_prev = s.end.total;
      row.wall_time = std::chrono::duration<double>(Clock::now() - start_).count();
      if (rows_) rows_->push_back(row);
      if (stop) break;
    }
    return out;
  }

 private:
  const PipelineConfig& config_;
  const CameraIntrinsics& cam_;
  const std::vector<FeatureSegment>& segments_;
  std::vector<DiagnosticRow>* rows_;
  Clock::time_point start_;
  double endpoint_tol_ = 0.0;
};

MeshPair refine_impl(MeshPair pair, PointCloud& cloud, const PipelineConfig& config,
                     std::vector<DiagnosticRow>* rows, InnerLoop::Clock::time_point start) {
  WeightSchedule w = config.weights;
  w.line = 0.0;
  w.ray = 0.0;
  const std::vector<FeatureSegment> none;
  const CameraIntrinsics cam;
  InnerLoop loop(config, cam, none, rows, start);
  std::vector<FeatureLine> lines;
  loop.run(0, pair, cloud, lines, w, false);
  return pair;
}

}  // namespace

MeshPair refine_initial(MeshPair pair, PointCloud& cloud, const PipelineConfig& config,
                        std::vector<DiagnosticRow>* rows) {
  return refine_impl(std::move(pair), cloud, config, rows, InnerLoop::Clock::now());
}

PipelineResult run(const PipelineConfig& config, const PipelineInputs& inputs) {
  const auto start = InnerLoop::Clock::now();
  config.validate();
  inputs.cam.validate();
  if (inputs.cloud.empty()) throw Error("point cloud is empty");
  const double diag = bounding_diagonal(inputs.cloud);
  if (!(diag > 0.0)) throw Error("point cloud has no extent");

  PipelineResult out;
  out.scale = 1.0 / diag;
  // Scaling about the camera centre keeps every point on its viewing ray.
  std::vector<Vec3> pts(inputs.cloud.size());
  for (size_t i = 0; i < pts.size(); ++i) pts[i] = inputs.cloud[i] * out.scale;
  PointCloud cloud(std::move(pts));

  const Rect region = initial_region(inputs);
  const PlaneMesh pixels = init_image_mesh(region, config.dims);
  SpaceMesh space = init_space_mesh(pixels, dense_subset(cloud.points), inputs.cam, config.k);
  PlaneMesh plane = init_plane_mesh(space);
  MeshPair pair(std::move(space), std::move(plane));
  if (config.refine) pair = refine_impl(std::move(pair), cloud, config, &out.diagnostics, start);

  WeightSchedule w = config.weights;
  InnerLoop loop(config, inputs.cam, inputs.segments, &out.diagnostics, start);
  const double endpoint_tol = config.endpoint_factor * median_edge_length(pair.plane);
  loop.set_endpoint_tol(endpoint_tol);
  std::vector<FeatureLine> lines;
  for (int r = 1; r <= w.rounds; ++r) {
    RoundSummary sum;
    sum.round = r;
    sum.lambda_line = w.line;
    sum.lambda_ray = w.ray;
    sum.iso_per_area_start = e_iso(pair) / plane_area(pair.plane);
    const LoopResult lr = loop.run(r, pair, cloud, lines, w, config.use_features);
    sum.iterations = lr.iterations;
    sum.by_epsilon = lr.by_epsilon;
    sum.iso_per_area_end = e_iso(pair) / plane_area(pair.plane);
    out.rounds.push_back(sum);
    if (lr.diverged) {
      out.diverged = true;
      break;
    }
    if (r < w.rounds) {
      MeshPair next = subdivide_pair(pair);
      for (auto& l : lines) l.anchors = remap_anchors(pair, next, l.anchors);
      pair = std::move(next);
      w.line *= w.escalation;
      w.ray *= w.escalation;
    }
  }

  const MeshProximity prox(pair.space);
  const auto corr = filter_and_correspond(cloud, prox, config.phi);
  out.lines = build_lines(pair, inputs.segments, inputs.cam, config, endpoint_tol);
  out.final_energy = total_objective(pair, corr, out.lines, w, false);
  out.valid = cloud.valid;

  const double inv = 1.0 / out.scale;
  for (auto& p : pair.space.vertices()) p *= inv;
  for (auto& p : pair.plane.vertices()) p *= inv;
  for (auto& l : out.lines) l.fitted.offset *= inv;
  out.pair = std::move(pair);
  return out;
}

}  // namespace docrect
