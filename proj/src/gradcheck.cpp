#include "docrect/gradcheck.hpp"

#include "docrect/camera.hpp"

#include <cmath>
#include <random>

namespace docrect {

RandomState random_state(std::uint64_t seed, GridDims dims) {
  if (!dims.valid()) throw Error("gradient check grid must be at least 2x2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double h = 1.0 / std::max(dims.n1, dims.n2);

  std::vector<Vec2> plane(dims.vertex_count());
  std::vector<Vec3> space(dims.vertex_count());
  const double bend = 0.3 + 0.2 * uni(rng);
  for (int j = 0; j < dims.n2; ++j)
    for (int i = 0; i < dims.n1; ++i) {
      const Vec2 p(i * h + 0.1 * h * uni(rng), j * h + 0.1 * h * uni(rng));
      plane[dims.vertex(i, j)] = p;
      space[dims.vertex(i, j)] = Vec3(1.05 * p.x() - 0.3, p.y() - 0.4, 2.0 + bend * std::sin(2.0 * p.x())) +
                                 0.05 * h * Vec3(uni(rng), uni(rng), uni(rng));
    }
  RandomState st;
  st.pair = MeshPair(SpaceMesh(dims, std::move(space)), PlaneMesh(dims, std::move(plane)));

  std::uniform_int_distribution<int> face(0, dims.face_count() - 1);
  auto random_anchor = [&]() {
    BarycentricAnchor a;
    a.face = face(rng);
    a.triangle = uni(rng) < 0.0 ? 0 : 1;
    Vec3 w(std::abs(uni(rng)) + 0.05, std::abs(uni(rng)) + 0.05, std::abs(uni(rng)) + 0.05);
    a.weights = w / w.sum();
    return a;
  };
  for (int k = 0; k < 30; ++k) {
    PointCorrespondence c;
    c.anchor = random_anchor();
    c.point = barycentric_eval(st.pair.space, c.anchor) + 0.05 * Vec3(uni(rng), uni(rng), uni(rng));
    c.normal = Vec3(uni(rng), uni(rng), uni(rng)).normalized();
    st.correspondences.push_back(c);
  }

  CameraIntrinsics cam;
  cam.f = 1.0;
  cam.ku = cam.kv = 500.0;
  cam.cu = cam.cv = 250.0;
  for (int l = 0; l < 3; ++l) {
    FeatureLine line;
    line.cls = FeatureClass::Text;
    for (int k = 0; k < 6; ++k) {
      const auto a = random_anchor();
      const Vec3 p = barycentric_eval(st.pair.space, a) + 0.02 * Vec3(uni(rng), uni(rng), uni(rng));
      const Vec2 px = project(cam, p);
      line.anchors.push_back(a);
      line.pixels.push_back(px);
      line.rays.push_back(viewing_ray(cam, px));
    }
    line.fitted.theta = M_PI * uni(rng);
    line.fitted.offset = 0.5 * uni(rng);
    line.sources = {l};
    st.lines.push_back(std::move(line));
  }
  return st;
}

bool GradCheckReport::pass() const {
  for (const auto& t : terms)
    if (!t.pass()) return false;
  return true;
}

GradCheckReport run_gradcheck(const GradCheckOptions& opt) {
  const RandomState st = random_state(opt.seed, opt.dims);
  const Eigen::VectorXd x0 = pack_variables(st.pair, st.lines);

  struct Term {
    const char* name;
    WeightSchedule w;
  };
  auto only = [](double WeightSchedule::*field) {
    WeightSchedule w;
    w.iso = w.dist = w.fair_space = w.fair_plane = w.line = w.ray = 0.0;
    w.*field = 1.0;
    return w;
  };
  WeightSchedule all;
  all.line = 2.0;
  all.ray = 3.0;
  const Term terms[] = {{"iso", only(&WeightSchedule::iso)},
                        {"dist", only(&WeightSchedule::dist)},
                        {"fair_space", only(&WeightSchedule::fair_space)},
                        {"fair_plane", only(&WeightSchedule::fair_plane)},
                        {"line", only(&WeightSchedule::line)},
                        {"ray", only(&WeightSchedule::ray)},
                        {"total", all}};

  GradCheckReport report;
  MeshPair pair = st.pair;
  std::vector<FeatureLine> lines = st.lines;
  auto eval = [&](const Eigen::VectorXd& x, const WeightSchedule& w, bool grad) {
    unpack_variables(x, pair, lines);
    return total_objective(pair, st.correspondences, lines, w, grad);
  };
  const int iso_end = 5 * st.pair.space.vertex_count();

  for (const auto& term : terms) {
    const EnergyReport rep = eval(x0, term.w, true);
    Eigen::VectorXd analytic = flatten(rep.gradient);
    if (opt.mutate && term.w.iso > 0.0) {
      // Re-derive the isometry part with its sign flipped.
      WeightSchedule iso_only = only(&WeightSchedule::iso);
      const Eigen::VectorXd g_iso = flatten(eval(x0, iso_only, true).gradient);
      analytic.head(iso_end) -= 2.0 * g_iso.head(iso_end) * term.w.iso;
    }
    TermCheck tc;
    tc.term = term.name;
    tc.components = static_cast<int>(x0.size());
    double worst_ratio = -1.0;
    Eigen::VectorXd x = x0;
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
      x[i] = x0[i] + opt.step;
      const double fp = eval(x, term.w, false).total;
      x[i] = x0[i] - opt.step;
      const double fm = eval(x, term.w, false).total;
      x[i] = x0[i];
      const double numeric = (fp - fm) / (2.0 * opt.step);
      const double err = std::abs(analytic[i] - numeric);
      const double bound = std::max(opt.abs_tol, opt.rel_tol * std::max(std::abs(analytic[i]), std::abs(numeric)));
      tc.max_abs_error = std::max(tc.max_abs_error, err);
      if (err > bound) ++tc.failures;
      if (err / bound > worst_ratio) {
        worst_ratio = err / bound;
        tc.worst_index = static_cast<int>(i);
        tc.worst_analytic = analytic[i];
        tc.worst_numeric = numeric;
      }
    }
    report.terms.push_back(tc);
  }
  return report;
}

}  // namespace docrect
