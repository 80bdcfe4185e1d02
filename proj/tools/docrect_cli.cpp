// docrect: rectify, synth, eval and gradcheck subcommands.

#include "docrect/gradcheck.hpp"
#include "docrect/image.hpp"
#include "docrect/io.hpp"
#include "docrect/pipeline.hpp"
#include "docrect/rectify.hpp"
#include "docrect/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace docrect;

namespace {

// Exit codes.
constexpr int kRuntimeError = 1;
constexpr int kInputError = 2;
constexpr int kDiverged = 3;

Rgb parse_color(const std::string& s) {
  std::stringstream ss(s);
  std::string part;
  Rgb c{};
  int k = 0;
  while (std::getline(ss, part, ',')) {
    if (k == 3) throw Error("background must be r,g,b");
    int v = -1;
    try {
      v = std::stoi(part);
    } catch (const std::exception&) {
    }
    if (v < 0 || v > 255) throw Error("background components must be in 0..255");
    c[k++] = static_cast<std::uint8_t>(v);
  }
  if (k != 3) throw Error("background must be r,g,b");
  return c;
}

struct RectifyArgs {
  std::string cloud, cam, image, segments, out, config, region = "boundary", background = "0,0,0";
  int resolution = 1000;
  bool no_features = false, no_projection = false;
};

int cmd_rectify(const RectifyArgs& a) {
  PipelineConfig config;
  PipelineInputs in;
  Image reference;
  RenderOptions ropt;
  RegionMode mode;
  try {
    in.cam = load_intrinsics(a.cam);
    if (!a.config.empty()) load_config(a.config, config);
    if (a.no_features) config.use_features = false;
    if (a.no_projection) config.project_lines = false;
    in.cloud = load_points(a.cloud);
    if (!a.segments.empty()) in.segments = load_segments(a.segments);
    reference = load_image(a.image);
    in.image_width = reference.width;
    in.image_height = reference.height;
    mode = region_mode_from_string(a.region);
    ropt.long_side = a.resolution;
    ropt.background = parse_color(a.background);
    if (ropt.long_side < 1) throw Error("resolution must be positive");
  } catch (const Error& e) {
    std::cerr << "docrect rectify: " << e.what() << '\n';
    return kInputError;
  }

  try {
    const PipelineResult res = run(config, in);
    const fs::path out(a.out);
    fs::create_directories(out);
    save_diagnostics(out / "diag.csv", res.diagnostics);
    save_obj(out / "mesh_space.obj", res.pair.space);
    save_obj(out / "mesh_plane.obj", res.pair.plane);
    save_mask(out / "valid.txt", res.valid);
    const RegionChoice region = output_region(res.lines, res.pair.plane, mode);
    if (!region.warning.empty()) std::cerr << "docrect rectify: warning: " << region.warning << '\n';
    save_image(out / "rectified.png", render(res.pair, in.cam, reference, region.rect, ropt));
    if (res.diverged) {
      std::cerr << "docrect rectify: the solver diverged; partial results written to " << out << '\n';
      return kDiverged;
    }
  } catch (const Error& e) {
    std::cerr << "docrect rectify: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}

struct SynthArgs {
  std::string spec, out;
  long long seed = -1, outliers = -1, points = -1;
  double noise = -1.0;
};

int cmd_synth(const SynthArgs& a) {
  SceneSpec spec;
  try {
    spec = load_scene_spec(a.spec);
    if (a.seed >= 0) spec.seed = static_cast<std::uint64_t>(a.seed);
    if (a.outliers >= 0) spec.outliers = static_cast<int>(a.outliers);
    if (a.points >= 0) spec.points = static_cast<int>(a.points);
    if (a.noise >= 0.0) spec.noise = a.noise;
    const SynthBundle b = generate_scene(spec);
    save_bundle(a.out, b);
  } catch (const Error& e) {
    std::cerr << "docrect synth: " << e.what() << '\n';
    return kInputError;
  }
  return 0;
}

struct EvalArgs {
  std::string scene, result, json;
};

nlohmann::json metrics_json(const EvalMetrics& m) {
  nlohmann::json j;
  j["displacement_error"] = m.displacement_error;
  j["displacement_vertices"] = m.displacement_vertices;
  j["iso_mean_abs"] = m.iso_mean_abs;
  j["worst_line_hw"] = m.worst_line_hw;
  j["mean_line_hw"] = m.mean_line_hw;
  j["lines_measured"] = m.lines_measured;
  j["inlier_valid_rate"] = m.inlier_valid_rate;
  j["outlier_invalid_rate"] = m.outlier_invalid_rate;
  j["inliers"] = m.inliers;
  j["outliers"] = m.outliers;
  return j;
}

int cmd_eval(const EvalArgs& a) {
  try {
    const SynthBundle bundle = load_bundle(a.scene);
    const fs::path res(a.result);
    MeshPair pair(load_space_obj(res / "mesh_space.obj"), load_plane_obj(res / "mesh_plane.obj"));
    std::vector<std::uint8_t> valid;
    if (fs::exists(res / "valid.txt")) valid = load_mask(res / "valid.txt");
    const EvalMetrics m = evaluate(bundle, pair, valid);
    const std::string text = metrics_json(m).dump(2) + "\n";
    if (a.json.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(a.json);
      if (!out) throw Error("cannot write " + a.json);
      out << text;
    }
  } catch (const Error& e) {
    std::cerr << "docrect eval: " << e.what() << '\n';
    return kInputError;
  }
  return 0;
}

struct GradArgs {
  long long seed = 1;
  double tol = 1e-5, abs = 1e-8;
  bool inject = false;
};

int cmd_gradcheck(const GradArgs& a) {
  GradCheckOptions opt;
  opt.seed = static_cast<std::uint64_t>(a.seed);
  opt.rel_tol = a.tol;
  opt.abs_tol = a.abs;
  opt.mutate = a.inject;
  const GradCheckReport rep = run_gradcheck(opt);
  const TermCheck* worst = nullptr;
  for (const auto& t : rep.terms) {
    std::printf("%-11s %s  components=%d failures=%d max_abs_err=%.3e\n", t.term.c_str(), t.pass() ? "ok  " : "FAIL",
                t.components, t.failures, t.max_abs_error);
    if (!t.pass() && (!worst || t.failures > worst->failures)) worst = &t;
  }
  if (worst) {
    std::printf("worst: term %s component %d analytic %.12e numeric %.12e\n", worst->term.c_str(), worst->worst_index,
                worst->worst_analytic, worst->worst_numeric);
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rectification of folded document images from a point cloud and a reference photo"};
  app.require_subcommand(1);

  RectifyArgs ra;
  auto* rectify = app.add_subcommand("rectify", "Solve for the mesh pair and write the rectified image");
  rectify->add_option("--cloud", ra.cloud, "Point cloud, one `x y z` per line")->required();
  rectify->add_option("--cam", ra.cam, "Intrinsics file (f, ku, kv, cu, cv)")->required();
  rectify->add_option("--image", ra.image, "Reference image (PNG or PPM)")->required();
  rectify->add_option("--segments", ra.segments, "Feature segments; omit for a feature-free run");
  rectify->add_option("--out", ra.out, "Output directory")->required();
  rectify->add_option("--config", ra.config, "Key-value overrides of the solver defaults");
  rectify->add_option("--region", ra.region, "Output region: boundary, aabb or mesh")
      ->check(CLI::IsMember({"boundary", "aabb", "mesh"}));
  rectify->add_option("--resolution", ra.resolution, "Long side of the output image in pixels");
  rectify->add_option("--background", ra.background, "Background colour r,g,b");
  rectify->add_flag("--no-features", ra.no_features, "Ignore feature lines in the objective");
  rectify->add_flag("--no-projection", ra.no_projection, "Disable feature-line projection");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene bundle from a spec file");
  synth->add_option("--spec", sa.spec, "Scene spec file")->required();
  synth->add_option("--out", sa.out, "Bundle directory")->required();
  synth->add_option("--seed", sa.seed, "Override the spec seed");
  synth->add_option("--outliers", sa.outliers, "Override the outlier count");
  synth->add_option("--points", sa.points, "Override the inlier count");
  synth->add_option("--noise", sa.noise, "Override the noise level (fraction of the cloud diagonal)");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score a rectify output against a synthetic bundle");
  eval->add_option("--scene", ea.scene, "Bundle directory written by synth")->required();
  eval->add_option("--result", ea.result, "Output directory written by rectify")->required();
  eval->add_option("--json", ea.json, "Metrics file (stdout when omitted)");

  GradArgs ga;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every energy gradient");
  grad->add_option("--seed", ga.seed, "Seed of the random state");
  grad->add_option("--tol", ga.tol, "Relative tolerance");
  grad->add_option("--abs", ga.abs, "Absolute tolerance");
  grad->add_flag("--inject-sign-error", ga.inject, "Flip the isometry gradient sign (self-test; must fail)");

  CLI11_PARSE(app, argc, argv);
  if (*rectify) return cmd_rectify(ra);
  if (*synth) return cmd_synth(sa);
  if (*eval) return cmd_eval(ea);
  if (*grad) return cmd_gradcheck(ga);
  return kRuntimeError;
}
