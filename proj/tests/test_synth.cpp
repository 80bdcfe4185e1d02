#include "docrect/synth.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

using namespace docrect;

namespace {

SceneSpec folded_spec() {
  SceneSpec s;
  s.creases = {Crease{Vec2(0.07, 0.0), Vec2(0.07, 0.297), 40.0}, Crease{Vec2(0.14, 0.0), Vec2(0.16, 0.297), -30.0}};
  s.rotation_deg = Vec3(10.0, 20.0, 5.0);
  s.translation = Vec3(0.01, -0.02, 0.5);
  s.points = 800;
  s.noise = 0.0;
  s.seed = 5;
  return s;
}

// Layout grid mapped through the true surface.
MeshPair truth_pair(const FoldedSheet& sheet, GridDims d) {
  std::vector<Vec2> p;
  std::vector<Vec3> v;
  for (int j = 0; j < d.n2; ++j)
    for (int i = 0; i < d.n1; ++i) {
      p.emplace_back(sheet.width() * i / (d.n1 - 1), sheet.height() * j / (d.n2 - 1));
      v.push_back(sheet.embed(p.back()));
    }
  return MeshPair(SpaceMesh(d, v), PlaneMesh(d, p));
}

}  // namespace

TEST_CASE("panels are rigid: distances within a panel are kept") {
  const FoldedSheet sheet(folded_spec());
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> ux(0.0, 0.21), uy(0.0, 0.297);
  int same = 0;
  for (int k = 0; k < 2000; ++k) {
    const Vec2 a(ux(rng), uy(rng)), b(ux(rng), uy(rng));
    if (!sheet.crease_crossings(a, b).empty()) continue;
    ++same;
    CHECK(std::abs((sheet.embed(a) - sheet.embed(b)).norm() - (a - b).norm()) < 1e-12);
  }
  CHECK(same > 200);
}

TEST_CASE("embedding is continuous and isometric along paths across creases") {
  const FoldedSheet sheet(folded_spec());
  const Vec2 a(0.01, 0.01), b(0.2, 0.29);
  const auto cuts = sheet.crease_crossings(a, b);
  REQUIRE(cuts.size() == 2);
  // Straight pieces between crease crossings keep their length.
  std::vector<double> knots{0.0, cuts[0], cuts[1], 1.0};
  double len = 0.0;
  for (int k = 0; k + 1 < 4; ++k)
    len += (sheet.embed(a + (b - a) * knots[k + 1]) - sheet.embed(a + (b - a) * knots[k])).norm();
  CHECK(len == doctest::Approx((b - a).norm()).epsilon(1e-12));
  // Both sides of a crease agree on the crease itself.
  const Vec2 c = a + (b - a) * cuts[0];
  CHECK((sheet.embed(c + 1e-9 * (b - a)) - sheet.embed(c - 1e-9 * (b - a))).norm() < 1e-9);
  // A fold makes the straight chord in space shorter than the path.
  CHECK((sheet.embed(a) - sheet.embed(b)).norm() < (b - a).norm() - 1e-3);
}

TEST_CASE("curl is an isometry") {
  SceneSpec s;
  s.curl_radius = 0.15;
  const FoldedSheet sheet(s);
  const int n = 4000;
  double len = 0.0;
  const Vec2 a(0.0, 0.1), b(0.21, 0.1);
  for (int k = 0; k < n; ++k)
    len += (sheet.embed(a + (b - a) * (k + 1.0) / n) - sheet.embed(a + (b - a) * double(k) / n)).norm();
  CHECK(len == doctest::Approx(0.21).epsilon(1e-7));
  CHECK((sheet.embed(Vec2(0.1, 0.0)) - sheet.embed(Vec2(0.1, 0.2))).norm() == doctest::Approx(0.2));
}

TEST_CASE("unfolding a ray inverts the embedding on visible points") {
  for (double curl : {0.0, 0.12}) {
    SceneSpec s = folded_spec();
    if (curl > 0.0) s.creases.clear();
    s.curl_radius = curl;
    const FoldedSheet sheet(s);
    std::mt19937_64 rng(52);
    std::uniform_real_distribution<double> ux(0.0, 0.21), uy(0.0, 0.297);
    int checked = 0;
    for (int k = 0; k < 1000; ++k) {
      const Vec2 p(ux(rng), uy(rng));
      if (!sheet.visible(p)) continue;
      const auto q = sheet.unfold_ray(sheet.embed(p).normalized());
      REQUIRE(q.has_value());
      CHECK((*q - p).norm() < 1e-9);
      ++checked;
    }
    CHECK(checked > 500);
  }
}

TEST_CASE("scene spec text round trip") {
  SceneSpec s = folded_spec();
  s.curl_radius = 0.0;
  s.principal = Vec2(401.5, 600.25);
  s.texture = Texture::Checker;
  s.background = {1, 2, 3};
  const auto path = std::filesystem::temp_directory_path() / "docrect_spec_test.txt";
  save_scene_spec(path, s);
  const SceneSpec t = load_scene_spec(path);
  std::filesystem::remove(path);
  CHECK(t.creases.size() == 2);
  CHECK(t.creases[1].angle_deg == s.creases[1].angle_deg);
  CHECK(t.rotation_deg == s.rotation_deg);
  CHECK(t.principal.has_value());
  CHECK(*t.principal == *s.principal);
  CHECK(t.texture == Texture::Checker);
  CHECK(t.background == s.background);
  CHECK(t.seed == s.seed);

  std::istringstream bad("width 0.2\nwobble 3\n");
  CHECK_THROWS_AS(parse_scene_spec(bad), Error);
}

TEST_CASE("generated scenes are deterministic and consistent") {
  SceneSpec s = folded_spec();
  s.outliers = 50;
  const SynthBundle a = generate_scene(s);
  const SynthBundle b = generate_scene(s);
  CHECK(a.cloud == b.cloud);
  CHECK(a.labels == b.labels);
  CHECK(a.reference.data == b.reference.data);
  REQUIRE(a.cloud.size() == 850);
  CHECK(std::count(a.labels.begin(), a.labels.end(), std::uint8_t{0}) == 50);
  CHECK(a.segments.size() == a.segment_lines.size());

  // Noise-free inliers sit on the surface.
  const FoldedSheet sheet(s);
  for (size_t i = 0; i < a.cloud.size(); ++i) {
    if (!a.labels[i]) continue;
    const auto q = sheet.unfold_ray(a.cloud[i].normalized());
    REQUIRE(q.has_value());
    CHECK((sheet.embed(*q) - a.cloud[i]).norm() < 1e-9);
  }
  s.seed = 6;
  CHECK(generate_scene(s).cloud != a.cloud);
}

TEST_CASE("segments image their truth lines") {
  SceneSpec s = folded_spec();
  s.segment_length = 0.03;
  const SynthBundle b = generate_scene(s);
  const FoldedSheet sheet(s);
  for (size_t k = 0; k < b.segments.size(); ++k) {
    const auto& line = b.truth_lines.at(b.segment_lines[k]);
    for (const auto& px : b.segments[k].pixels) {
      const auto q = sheet.unfold_ray(viewing_ray(b.cam, px).direction);
      REQUIRE(q.has_value());
      const Vec2 d = (line.b - line.a).normalized();
      const Vec2 r = *q - line.a;
      CHECK(std::abs(r.x() * d.y() - r.y() * d.x()) < 1e-9);
    }
  }
}

TEST_CASE("the true mapping scores perfectly") {
  SceneSpec s;
  s.creases = {Crease{Vec2(0.105, 0.0), Vec2(0.105, 0.297), 60.0}};
  s.rotation_deg = Vec3(0.0, 30.0, 0.0);
  s.translation = Vec3(0.0, 0.0, 0.45);
  s.points = 500;
  const SynthBundle b = generate_scene(s);
  const FoldedSheet sheet(s);
  const MeshPair pair = truth_pair(sheet, {21, 31});  // crease on a grid column
  const EvalMetrics m = evaluate(b, pair, {});
  CHECK(m.displacement_error < 1e-9);
  CHECK(m.worst_line_hw < 1e-6);
  CHECK(m.iso_mean_abs < 1e-12);
  CHECK(m.lines_measured > 10);
}

TEST_CASE("bundle files round trip") {
  SceneSpec s = folded_spec();
  s.points = 200;
  s.outliers = 10;
  const SynthBundle a = generate_scene(s);
  const auto dir = std::filesystem::temp_directory_path() / "docrect_bundle_test";
  save_bundle(dir, a);
  const SynthBundle b = load_bundle(dir);
  std::filesystem::remove_all(dir);
  CHECK(b.cloud.size() == a.cloud.size());
  for (size_t i = 0; i < a.cloud.size(); ++i) CHECK((a.cloud[i] - b.cloud[i]).norm() < 1e-12);
  CHECK(b.labels == a.labels);
  CHECK(b.segment_lines == a.segment_lines);
  CHECK(b.truth_lines.size() == a.truth_lines.size());
  CHECK(b.reference.data == a.reference.data);
  CHECK(b.cam.fu() == a.cam.fu());
}
