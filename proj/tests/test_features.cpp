#include "docrect/features.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <numbers>

using namespace docrect;

namespace {

// theta in [0, pi) with the offset sign following.
std::pair<double, double> canonical(LineParams l) {
  double t = std::fmod(l.theta, std::numbers::pi);
  double c = l.offset;
  if (t < 0.0) t += std::numbers::pi;
  if (std::abs(std::remainder(l.theta - t, 2.0 * std::numbers::pi)) > 1.0) c = -c;
  return {t, c};
}

// Minimizes the sum of squared normal distances by a coarse angle scan and
// golden-section refinement.
std::pair<double, double> search_fit(const std::vector<Vec2>& pts) {
  auto cost = [&](double t) {
    const Vec2 n(std::cos(t), std::sin(t));
    double mean = 0.0;
    for (const auto& p : pts) mean += n.dot(p);
    mean /= pts.size();
    double s = 0.0;
    for (const auto& p : pts) s += std::pow(n.dot(p) - mean, 2);
    return std::make_pair(s, mean);
  };
  const int steps = 3600;
  int best = 0;
  for (int k = 1; k < steps; ++k)
    if (cost(k * std::numbers::pi / steps).first < cost(best * std::numbers::pi / steps).first) best = k;
  double lo = (best - 1) * std::numbers::pi / steps, hi = (best + 1) * std::numbers::pi / steps;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    if (cost(a).first < cost(b).first)
      hi = b;
    else
      lo = a;
  }
  const double t = 0.5 * (lo + hi);
  return canonical(LineParams{t, cost(t).second});
}

// Unit grid in front of the camera: plane (x, y) sits at (x - 0.5, y - 0.75, 2).
struct FlatScene {
  MeshPair pair;
  CameraIntrinsics cam;
  FlatScene() {
    std::vector<Vec2> p;
    const GridDims d{11, 16};
    for (int j = 0; j < d.n2; ++j)
      for (int i = 0; i < d.n1; ++i) p.emplace_back(0.1 * i, 0.1 * j);
    const PlaneMesh plane(d, p);
    pair = MeshPair(testing::rigid_embedding(plane, Eigen::Matrix3d::Identity(), Vec3(-0.5, -0.75, 2.0)), plane);
    cam.ku = cam.kv = 500.0;
    cam.cu = 250.0;
    cam.cv = 375.0;
  }
  Vec2 pixel(const Vec2& layout) const {
    return project(cam, Vec3(layout.x() - 0.5, layout.y() - 0.75, 2.0));
  }
  FeatureSegment segment(FeatureClass cls, Vec2 a, Vec2 b, int n = 8) const {
    FeatureSegment s;
    s.cls = cls;
    for (int k = 0; k < n; ++k) s.pixels.push_back(pixel(a + (b - a) * k / (n - 1.0)));
    return s;
  }
};

std::vector<std::vector<int>> source_sets(const std::vector<FeatureLine>& lines) {
  std::vector<std::vector<int>> out;
  for (const auto& l : lines) out.push_back(l.sources);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("total least squares fit equals the angle search") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int s = 0; s < 1000; ++s) {
    const double t = std::numbers::pi * u(rng);
    const Vec2 dir(std::cos(t), std::sin(t)), nrm(-dir.y(), dir.x());
    const Vec2 o(u(rng), u(rng));
    std::vector<Vec2> pts;
    for (int k = 0; k < 12; ++k) pts.push_back(o + 2.0 * u(rng) * dir + noise(rng) * nrm);
    const auto mine = canonical(fit_line(pts));
    const auto ref = search_fit(pts);
    double dt = std::abs(mine.first - ref.first);
    dt = std::min(dt, std::numbers::pi - dt);
    CHECK(dt < 1e-8);
    if (dt < 1e-8 && std::abs(mine.first - ref.first) < 1.0) CHECK(std::abs(mine.second - ref.second) < 1e-8);
  }
}

TEST_CASE("line parameters: projection lands on the line") {
  const LineParams l{0.3, 0.7};
  const Vec2 p(2.0, -1.0);
  CHECK(std::abs(l.signed_distance(l.project(p))) < 1e-15);
  CHECK(std::abs(l.direction().dot(l.normal())) < 1e-15);
  CHECK_THROWS_AS(fit_line(std::vector<Vec2>{Vec2(1, 1)}), Error);
  CHECK_THROWS_AS(fit_line(std::vector<Vec2>{Vec2(1, 1), Vec2(1, 1)}), Error);
}

TEST_CASE("resampling keeps endpoints and caps the count") {
  std::vector<Vec2> px;
  for (int k = 0; k < 200; ++k) px.emplace_back(k, 0.5 * k);
  const auto r = resample_polyline(px, 50);
  CHECK(r.size() == 50);
  CHECK(r.front() == px.front());
  CHECK(r.back() == px.back());
  for (size_t k = 1; k < r.size(); ++k)
    CHECK((r[k] - r[k - 1]).norm() == doctest::Approx((px.back() - px.front()).norm() / 49));
  CHECK(resample_polyline(std::vector<Vec2>(px.begin(), px.begin() + 10), 50).size() == 10);
}

TEST_CASE("segment file round trip") {
  std::vector<FeatureSegment> segs(2);
  segs[0].cls = FeatureClass::Boundary;
  segs[0].pixels = {Vec2(1.5, 2), Vec2(3, 4.25)};
  segs[1].cls = FeatureClass::Edge;
  segs[1].pixels = {Vec2(0, 0), Vec2(1, 0), Vec2(2, 0.125)};
  const auto path = std::filesystem::temp_directory_path() / "docrect_segments_test.txt";
  save_segments(path, segs);
  const auto back = load_segments(path);
  REQUIRE(back.size() == 2);
  for (int k = 0; k < 2; ++k) {
    CHECK(back[k].cls == segs[k].cls);
    CHECK(back[k].pixels == segs[k].pixels);
  }
  std::filesystem::remove(path);
  CHECK(feature_class_from_string("text") == FeatureClass::Text);
  CHECK_THROWS_AS(feature_class_from_string("bogus"), Error);
}

TEST_CASE("lifting recovers layout points on a flat sheet") {
  const FlatScene sc;
  const auto seg = sc.segment(FeatureClass::Text, Vec2(0.1, 0.42), Vec2(0.9, 0.42));
  const auto lines = lift_segments({seg}, sc.cam, sc.pair);
  REQUIRE(lines.size() == 1);
  for (const auto& p : lines[0].plane_points(sc.pair.plane)) CHECK(std::abs(p.y() - 0.42) < 1e-9);
  CHECK(std::abs(lines[0].fitted.signed_distance(Vec2(0.5, 0.42))) < 1e-9);
  LiftReport rep;
  const auto off = sc.segment(FeatureClass::Text, Vec2(2.0, 2.0), Vec2(3.0, 2.0));
  CHECK(lift_segments({off}, sc.cam, sc.pair, 50, &rep).empty());
  CHECK(rep.dropped_segments == 1);
}

TEST_CASE("merging is independent of the input order") {
  const FlatScene sc;
  std::vector<FeatureSegment> segs;
  for (double y : {0.3, 0.6, 0.9})
    for (double x0 : {0.1, 0.35, 0.6}) segs.push_back(sc.segment(FeatureClass::Text, Vec2(x0, y), Vec2(x0 + 0.22, y)));
  segs.push_back(sc.segment(FeatureClass::Text, Vec2(0.2, 1.1), Vec2(0.6, 1.45)));    // diagonal, dropped
  segs.push_back(sc.segment(FeatureClass::Boundary, Vec2(0.84, 0.9), Vec2(0.99, 0.9)));  // other class
  segs.push_back(sc.segment(FeatureClass::Text, Vec2(0.05, 1.2), Vec2(0.05, 1.4)));   // vertical
  MergeOptions opt;
  opt.endpoint_tol = 0.05;

  const auto base = merge_feature_lines(lift_segments(segs, sc.cam, sc.pair), sc.pair.plane, opt);
  const std::vector<std::vector<int>> want{{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {10}, {11}};
  CHECK(source_sets(base) == want);
  for (const auto& l : base) {
    if (l.sources == std::vector<int>{11}) CHECK(l.orientation == LineOrientation::Vertical);
    if (l.sources == std::vector<int>{10}) CHECK(l.orientation == LineOrientation::Boundary);
    if (l.sources.size() == 3) CHECK(l.orientation == LineOrientation::Horizontal);
  }

  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    auto lifted = lift_segments(segs, sc.cam, sc.pair);
    std::shuffle(lifted.begin(), lifted.end(), rng);
    for (auto& l : lifted)
      if (rng() % 2) {
        std::reverse(l.anchors.begin(), l.anchors.end());
        std::reverse(l.rays.begin(), l.rays.end());
        std::reverse(l.pixels.begin(), l.pixels.end());
      }
    CHECK(source_sets(merge_feature_lines(lifted, sc.pair.plane, opt)) == want);
  }
}

TEST_CASE("a crooked join is refused") {
  const FlatScene sc;
  std::vector<FeatureSegment> segs{sc.segment(FeatureClass::Text, Vec2(0.1, 0.3), Vec2(0.4, 0.3)),
                                   sc.segment(FeatureClass::Text, Vec2(0.42, 0.33), Vec2(0.72, 0.39))};
  MergeOptions opt;
  opt.endpoint_tol = 0.05;
  opt.axis_tol_deg = 45.0;
  opt.straightness_tol = 0.02;
  CHECK(merge_feature_lines(lift_segments(segs, sc.cam, sc.pair), sc.pair.plane, opt).size() == 2);
  opt.straightness_tol = 0.2;
  CHECK(merge_feature_lines(lift_segments(segs, sc.cam, sc.pair), sc.pair.plane, opt).size() == 1);
}

TEST_CASE("projection moves planar feature points onto the fit") {
  const FlatScene sc;
  auto seg = sc.segment(FeatureClass::Text, Vec2(0.1, 0.5), Vec2(0.9, 0.5), 20);
  std::mt19937_64 rng(33);
  std::normal_distribution<double> n(0.0, 1.5);
  for (auto& p : seg.pixels) p.y() += n(rng);
  auto lines = lift_segments({seg}, sc.cam, sc.pair);
  const auto rep = project_feature_lines(sc.pair.plane, lines);
  CHECK(rep.relocated > 0);
  for (const auto& p : lines[0].plane_points(sc.pair.plane))
    CHECK(std::abs(lines[0].fitted.signed_distance(p)) < 1e-12);
}
