#include "docrect/synth.hpp"

#include "docrect/energies.hpp"
#include "docrect/pointcloud.hpp"
#include "docrect/rectify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace docrect {

namespace {

constexpr double kDeg = M_PI / 180.0;
constexpr int kMaxCreases = 8;

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

const char* texture_name(Texture t) {
  switch (t) {
    case Texture::Ruled: return "ruled";
    case Texture::Checker: return "checker";
    case Texture::Blank: return "blank";
  }
  return "?";
}

}  // namespace

CameraIntrinsics SceneSpec::camera() const {
  CameraIntrinsics c;
  c.f = focal;
  c.ku = pixel_scale;
  c.kv = pixel_scale;
  const Vec2 pp = principal.value_or(Vec2(0.5 * (image_width - 1), 0.5 * (image_height - 1)));
  c.cu = pp.x();
  c.cv = pp.y();
  return c;
}

SceneSpec parse_scene_spec(std::istream& in, const std::string& origin) {
  SceneSpec s;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw Error(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    auto num = [&]() {
      std::string tok;
      if (!(ss >> tok)) fail("missing value for `" + key + "`");
      try {
        size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
        return v;
      } catch (const std::exception&) {
        fail("bad number `" + tok + "`");
      }
      return 0.0;
    };
    auto integer = [&]() {
      const double v = num();
      if (v != std::floor(v)) fail("`" + key + "` needs an integer");
      return static_cast<long long>(v);
    };
    if (key == "width") s.width = num();
    else if (key == "height") s.height = num();
    else if (key == "crease") {
      Crease c;
      c.a.x() = num();
      c.a.y() = num();
      c.b.x() = num();
      c.b.y() = num();
      c.angle_deg = num();
      s.creases.push_back(c);
    } else if (key == "curl") s.curl_radius = num();
    else if (key == "rotation") {
      for (int k = 0; k < 3; ++k) s.rotation_deg[k] = num();
    } else if (key == "translation") {
      for (int k = 0; k < 3; ++k) s.translation[k] = num();
    } else if (key == "focal") s.focal = num();
    else if (key == "pixel_scale") s.pixel_scale = num();
    else if (key == "principal") {
      const double u = num();
      s.principal = Vec2(u, num());
    } else if (key == "image") {
      s.image_width = static_cast<int>(integer());
      s.image_height = static_cast<int>(integer());
    } else if (key == "points") s.points = static_cast<int>(integer());
    else if (key == "noise") s.noise = num();
    else if (key == "outliers") s.outliers = static_cast<int>(integer());
    else if (key == "texture") {
      std::string t;
      ss >> t;
      if (t == "ruled") s.texture = Texture::Ruled;
      else if (t == "checker") s.texture = Texture::Checker;
      else if (t == "blank") s.texture = Texture::Blank;
      else fail("unknown texture `" + t + "`");
    } else if (key == "line_spacing") s.line_spacing = num();
    else if (key == "margin") s.margin = num();
    else if (key == "checker_size") s.checker_size = num();
    else if (key == "segment_length") s.segment_length = num();
    else if (key == "segment_gap") s.segment_gap = num();
    else if (key == "sample_step") s.sample_step = num();
    else if (key == "boundary") s.boundary = integer() != 0;
    else if (key == "supersample") s.supersample = static_cast<int>(integer());
    else if (key == "background") {
      for (int k = 0; k < 3; ++k) {
        const auto v = integer();
        if (v < 0 || v > 255) fail("background components must be in 0..255");
        s.background[k] = static_cast<std::uint8_t>(v);
      }
    } else if (key == "seed") {
      const auto v = integer();
      if (v < 0) fail("seed must be nonnegative");
      s.seed = static_cast<std::uint64_t>(v);
    } else fail("unknown key `" + key + "`");
    std::string extra;
    if (ss >> extra) fail("trailing value `" + extra + "`");
  }
  if (!(s.width > 0.0 && s.height > 0.0)) throw Error(origin + ": sheet size must be positive");
  if (s.image_width < 2 || s.image_height < 2) throw Error(origin + ": image must be at least 2x2");
  if (s.points < 0 || s.outliers < 0) throw Error(origin + ": point counts must be nonnegative");
  if (!(s.noise >= 0.0)) throw Error(origin + ": noise must be nonnegative");
  if (!(s.sample_step > 0.0) || !(s.line_spacing > 0.0) || !(s.checker_size > 0.0))
    throw Error(origin + ": spacings must be positive");
  if (s.supersample < 1) throw Error(origin + ": supersample must be at least 1");
  return s;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scene spec " + path.string());
  return parse_scene_spec(in, path.string());
}

void save_scene_spec(const std::filesystem::path& path, const SceneSpec& s) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  out << "width " << s.width << "\nheight " << s.height << '\n';
  for (const auto& c : s.creases)
    out << "crease " << c.a.x() << ' ' << c.a.y() << ' ' << c.b.x() << ' ' << c.b.y() << ' ' << c.angle_deg << '\n';
  out << "curl " << s.curl_radius << '\n';
  out << "rotation " << s.rotation_deg.x() << ' ' << s.rotation_deg.y() << ' ' << s.rotation_deg.z() << '\n';
  out << "translation " << s.translation.x() << ' ' << s.translation.y() << ' ' << s.translation.z() << '\n';
  out << "focal " << s.focal << "\npixel_scale " << s.pixel_scale << '\n';
  if (s.principal) out << "principal " << s.principal->x() << ' ' << s.principal->y() << '\n';
  out << "image " << s.image_width << ' ' << s.image_height << '\n';
  out << "points " << s.points << "\nnoise " << s.noise << "\noutliers " << s.outliers << '\n';
  out << "texture " << texture_name(s.texture) << '\n';
  out << "line_spacing " << s.line_spacing << "\nmargin " << s.margin << "\nchecker_size " << s.checker_size << '\n';
  out << "segment_length " << s.segment_length << "\nsegment_gap " << s.segment_gap << '\n';
  out << "sample_step " << s.sample_step << "\nboundary " << (s.boundary ? 1 : 0) << '\n';
  out << "supersample " << s.supersample << '\n';
  out << "background " << int(s.background[0]) << ' ' << int(s.background[1]) << ' ' << int(s.background[2]) << '\n';
  out << "seed " << s.seed << '\n';
}

// ---------------------------------------------------------------------------

FoldedSheet::FoldedSheet(const SceneSpec& spec) : w_(spec.width), h_(spec.height), curl_(spec.curl_radius) {
  if (!(w_ > 0.0 && h_ > 0.0)) throw Error("sheet size must be positive");
  if (static_cast<int>(spec.creases.size()) > kMaxCreases) throw Error("too many creases");
  if (curl_ != 0.0 && !spec.creases.empty()) throw Error("a sheet is either curled or creased, not both");
  if (curl_ != 0.0 && !(0.5 * w_ / std::abs(curl_) < M_PI)) throw Error("curl radius too small: the sheet overlaps");

  const Vec2 half(0.5 * w_, 0.5 * h_);
  std::vector<std::pair<Vec2, Vec2>> chords;
  for (const auto& c : spec.creases) {
    if (!(std::abs(c.angle_deg) < 180.0)) throw Error("fold angle must be below 180 degrees: the sheet would self-intersect");
    Vec2 dir = c.b - c.a;
    if (!(dir.norm() > 0.0)) throw Error("crease needs two distinct points");
    dir.normalize();
    const Vec2 p = c.a - half;
    double t0 = -std::numeric_limits<double>::infinity(), t1 = -t0;
    for (int k = 0; k < 2; ++k) {
      if (std::abs(dir[k]) < 1e-15) {
        if (p[k] < -half[k] || p[k] > half[k]) t1 = t0 - 1.0;
        continue;
      }
      double a = (-half[k] - p[k]) / dir[k], b = (half[k] - p[k]) / dir[k];
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
    }
    if (!(t1 - t0 > 1e-12)) throw Error("crease misses the sheet");
    const Vec2 e0 = p + t0 * dir, e1 = p + t1 * dir;
    for (const auto& [f0, f1] : chords) {
      const double d1 = cross2(e1 - e0, f0 - e0), d2 = cross2(e1 - e0, f1 - e0);
      const double d3 = cross2(f1 - f0, e0 - f0), d4 = cross2(f1 - f0, e1 - f0);
      if (d1 * d2 <= 0.0 && d3 * d4 <= 0.0) throw Error("creases intersect inside the sheet");
    }
    chords.emplace_back(e0, e1);
    folds_.push_back({p, dir, c.angle_deg * kDeg, 0.5 * (e0 + e1)});
  }

  // Root panel: the candidate farthest from every crease.
  root_ = Vec2::Zero();
  double best = -1.0;
  for (const Vec2& cand : {Vec2(0, 0), Vec2(0.25 * w_, 0), Vec2(-0.25 * w_, 0), Vec2(0, 0.25 * h_),
                          Vec2(0, -0.25 * h_)}) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& f : folds_) m = std::min(m, std::abs(cross2(f.dir, cand - f.point)));
    if (m > best) {
      best = m;
      root_ = cand;
    }
  }
  // Orient each angle so positive values turn the far side towards -z (the camera).
  for (auto& f : folds_) {
    const Vec2 left(-f.dir.y(), f.dir.x());
    const double root_side = left.dot(root_ - f.point) >= 0.0 ? 1.0 : -1.0;
    const Vec2 far = -root_side * left;
    const double z = f.dir.x() * far.y() - f.dir.y() * far.x();
    if (z > 0.0) f.angle = -f.angle;
  }

  const Eigen::Matrix3d rot = (Eigen::AngleAxisd(spec.rotation_deg.z() * kDeg, Vec3::UnitZ()) *
                               Eigen::AngleAxisd(spec.rotation_deg.y() * kDeg, Vec3::UnitY()) *
                               Eigen::AngleAxisd(spec.rotation_deg.x() * kDeg, Vec3::UnitX()))
                                  .toRotationMatrix();
  pose_ = Eigen::Isometry3d::Identity();
  pose_.linear() = rot;
  pose_.translation() = spec.translation;

  const unsigned count = 1u << folds_.size();
  panels_.resize(count);
  for (unsigned sig = 0; sig < count; ++sig) panels_[sig] = pose_ * panel_transform(sig);

  for (int j = 0; j <= 40; ++j)
    for (int i = 0; i <= 40; ++i)
      if (!(embed(Vec2(w_ * i / 40.0, h_ * j / 40.0)).z() > 0.0)) throw Error("part of the sheet is behind the camera");
}

unsigned FoldedSheet::signature(const Vec2& local) const {
  unsigned sig = 0;
  for (size_t k = 0; k < folds_.size(); ++k) {
    const auto& f = folds_[k];
    const double s = cross2(f.dir, local - f.point);
    const double r = cross2(f.dir, root_ - f.point);
    if (s * r < 0.0) sig |= 1u << k;
  }
  return sig;
}

// Like signature(l) == sig, but points on a crease belong to both sides.
bool FoldedSheet::in_panel(const Vec2& local, unsigned sig) const {
  const double tol = 1e-12 * (w_ + h_);
  for (size_t k = 0; k < folds_.size(); ++k) {
    const auto& f = folds_[k];
    const double s = cross2(f.dir, local - f.point);
    if (std::abs(s) <= tol) continue;
    const bool crossed = s * cross2(f.dir, root_ - f.point) < 0.0;
    if (crossed != bool(sig & (1u << k))) return false;
  }
  return true;
}

Eigen::Isometry3d FoldedSheet::panel_transform(unsigned sig) const {
  std::vector<int> crossed;
  for (size_t k = 0; k < folds_.size(); ++k)
    if (sig & (1u << k)) crossed.push_back(static_cast<int>(k));
  // Nearest crease to the root first: B lies beyond A when B's chord midpoint
  // is on A's far side.
  auto beyond = [&](int a, int b) {
    const auto& fa = folds_[a];
    return cross2(fa.dir, folds_[b].mid - fa.point) * cross2(fa.dir, root_ - fa.point) < 0.0;
  };
  std::sort(crossed.begin(), crossed.end(), [&](int a, int b) { return beyond(a, b); });
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  for (int k : crossed) {
    const auto& f = folds_[k];
    const Vec3 p(f.point.x(), f.point.y(), 0.0);
    const Vec3 d(f.dir.x(), f.dir.y(), 0.0);
    Eigen::Isometry3d r = Eigen::Isometry3d::Identity();
    r.linear() = Eigen::AngleAxisd(f.angle, d).toRotationMatrix();
    r.translation() = p - r.linear() * p;
    t = t * r;
  }
  return t;
}

bool FoldedSheet::contains(const Vec2& q) const {
  constexpr double tol = 1e-12;
  return q.x() >= -tol && q.x() <= w_ + tol && q.y() >= -tol && q.y() <= h_ + tol;
}

Vec3 FoldedSheet::embed(const Vec2& layout) const {
  const Vec2 l = layout - Vec2(0.5 * w_, 0.5 * h_);
  if (curl_ != 0.0) {
    const double a = l.x() / curl_;
    return pose_ * Vec3(curl_ * std::sin(a), l.y(), -curl_ * (1.0 - std::cos(a)));
  }
  return panels_[signature(l)] * Vec3(l.x(), l.y(), 0.0);
}

std::optional<Vec2> FoldedSheet::unfold_ray(const Vec3& direction) const {
  const Vec2 half(0.5 * w_, 0.5 * h_);
  if (curl_ != 0.0) {
    const Eigen::Isometry3d inv = pose_.inverse();
    const Vec3 o = inv.translation();
    const Vec3 d = inv.linear() * direction;
    const double r = curl_;
    const double a = d.x() * d.x() + d.z() * d.z();
    const double b = o.x() * d.x() + (o.z() + r) * d.z();
    const double c = o.x() * o.x() + (o.z() + r) * (o.z() + r) - r * r;
    const double disc = b * b - a * c;
    if (a <= 0.0 || disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    for (double t : {(-b - sq) / a, (-b + sq) / a}) {
      if (!(t > 0.0)) continue;
      const Vec3 p = o + t * d;
      const double ang = std::atan2(p.x() / r, (p.z() + r) / r);
      const Vec2 q(r * ang + half.x(), p.y() + half.y());
      if (contains(q)) return q;
    }
    return std::nullopt;
  }
  double best_t = std::numeric_limits<double>::infinity();
  std::optional<Vec2> best;
  for (unsigned sig = 0; sig < panels_.size(); ++sig) {
    const auto& t = panels_[sig];
    const Vec3 n = t.linear().col(2);
    const double denom = n.dot(direction);
    if (std::abs(denom) < 1e-15) continue;
    const double s = n.dot(t.translation()) / denom;
    if (!(s > 0.0) || s >= best_t) continue;
    const Vec3 local = t.inverse() * (s * direction);
    const Vec2 l(local.x(), local.y());
    const Vec2 q = l + half;
    if (!contains(q) || !in_panel(l, sig)) continue;
    best_t = s;
    best = q;
  }
  return best;
}

bool FoldedSheet::visible(const Vec2& layout, double tol) const {
  const Vec3 x = embed(layout);
  const auto hit = unfold_ray(x.normalized());
  return hit && (embed(*hit) - x).norm() <= tol * std::max(1.0, x.norm());
}

std::vector<double> FoldedSheet::crease_crossings(const Vec2& a, const Vec2& b) const {
  const Vec2 half(0.5 * w_, 0.5 * h_);
  std::vector<double> out;
  for (const auto& f : folds_) {
    const double den = cross2(f.dir, b - a);
    if (std::abs(den) < 1e-15) continue;
    const double s = cross2(f.dir, f.point - (a - half)) / den;
    if (s > 0.0 && s < 1.0) out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr Rgb kPaper{236, 233, 224};
constexpr Rgb kInk{25, 25, 80};
constexpr double kInkHalfWidth = 0.0006;

std::vector<double> ruled_rows(const SceneSpec& s) {
  std::vector<double> ys;
  for (double y = s.margin; y <= s.height - s.margin + 1e-12; y += s.line_spacing) ys.push_back(y);
  return ys;
}

double ink_weight(const SceneSpec& s, const Vec2& p) {
  constexpr double band = 0.002;
  if (s.texture == Texture::Ruled) {
    if (p.x() < s.margin || p.x() > s.width - s.margin) return 0.3;
    const double k = std::round((p.y() - s.margin) / s.line_spacing);
    const double y = s.margin + k * s.line_spacing;
    return (k >= 0 && y <= s.height - s.margin + 1e-12 && std::abs(p.y() - y) <= band) ? 1.0 : 0.3;
  }
  if (s.texture == Texture::Checker) {
    const double cs = s.checker_size;
    const double dx = std::abs(p.x() - cs * std::round(p.x() / cs));
    const double dy = std::abs(p.y() - cs * std::round(p.y() / cs));
    return std::min(dx, dy) <= band ? 1.0 : 0.3;
  }
  return 1.0;
}

}  // namespace

Rgb texture_color(const SceneSpec& s, const Vec2& p) {
  switch (s.texture) {
    case Texture::Ruled: {
      if (p.x() < s.margin || p.x() > s.width - s.margin) return kPaper;
      const double k = std::round((p.y() - s.margin) / s.line_spacing);
      const double y = s.margin + k * s.line_spacing;
      if (k >= 0 && y <= s.height - s.margin + 1e-12 && std::abs(p.y() - y) <= kInkHalfWidth) return kInk;
      return kPaper;
    }
    case Texture::Checker: {
      const long long cx = static_cast<long long>(std::floor(p.x() / s.checker_size));
      const long long cy = static_cast<long long>(std::floor(p.y() / s.checker_size));
      return ((cx + cy) % 2 == 0) ? Rgb{235, 235, 235} : Rgb{30, 30, 30};
    }
    case Texture::Blank: return kPaper;
  }
  return kPaper;
}

std::vector<TruthLine> truth_lines(const SceneSpec& s) {
  std::vector<TruthLine> out;
  int id = 0;
  if (s.texture == Texture::Ruled) {
    for (double y : ruled_rows(s))
      out.push_back({id++, FeatureClass::Text, Vec2(s.margin, y), Vec2(s.width - s.margin, y)});
  } else if (s.texture == Texture::Checker) {
    for (int k = 1; k * s.checker_size < s.width - 1e-9; ++k)
      out.push_back({id++, FeatureClass::Edge, Vec2(k * s.checker_size, 0.0), Vec2(k * s.checker_size, s.height)});
    for (int k = 1; k * s.checker_size < s.height - 1e-9; ++k)
      out.push_back({id++, FeatureClass::Edge, Vec2(0.0, k * s.checker_size), Vec2(s.width, k * s.checker_size)});
  }
  if (s.boundary) {
    const double e = 1e-4;
    const double w = s.width, h = s.height;
    out.push_back({id++, FeatureClass::Boundary, Vec2(e, e), Vec2(w - e, e)});
    out.push_back({id++, FeatureClass::Boundary, Vec2(w - e, e), Vec2(w - e, h - e)});
    out.push_back({id++, FeatureClass::Boundary, Vec2(w - e, h - e), Vec2(e, h - e)});
    out.push_back({id++, FeatureClass::Boundary, Vec2(e, h - e), Vec2(e, e)});
  }
  return out;
}

namespace {

bool in_image(const SceneSpec& s, const Vec2& px) {
  return px.x() >= 0.0 && px.y() >= 0.0 && px.x() <= s.image_width - 1 && px.y() <= s.image_height - 1;
}

void emit_piece(const SceneSpec& s, const FoldedSheet& sheet, const CameraIntrinsics& cam, const TruthLine& line,
                double t0, double t1, SynthBundle& out) {
  const Vec2 a = line.a + t0 * (line.b - line.a);
  const Vec2 b = line.a + t1 * (line.b - line.a);
  const double len = (b - a).norm();
  const int n = std::max(2, static_cast<int>(std::ceil(len / s.sample_step)) + 1);
  FeatureSegment seg;
  seg.cls = line.cls;
  auto flush = [&]() {
    if (seg.pixels.size() >= 2) {
      out.segments.push_back(seg);
      out.segment_lines.push_back(line.id);
    }
    seg.pixels.clear();
  };
  for (int i = 0; i < n; ++i) {
    const Vec2 p = a + (b - a) * (static_cast<double>(i) / (n - 1));
    const Vec2 px = project(cam, sheet.embed(p));
    if (sheet.visible(p) && in_image(s, px))
      seg.pixels.push_back(px);
    else
      flush();
  }
  flush();
}

}  // namespace

SynthBundle generate_scene(const SceneSpec& spec) {
  SynthBundle out;
  out.spec = spec;
  out.cam = spec.camera();
  out.cam.validate();
  const FoldedSheet sheet(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  // Surface samples, denser on the printed texture.
  std::vector<Vec3> inliers;
  inliers.reserve(spec.points);
  long long attempts = 0;
  const long long max_attempts = 2000LL * std::max(spec.points, 1);
  while (static_cast<int>(inliers.size()) < spec.points) {
    if (++attempts > max_attempts) throw Error("could not place the requested number of visible points");
    const Vec2 p(uni(rng) * spec.width, uni(rng) * spec.height);
    if (uni(rng) > ink_weight(spec, p)) continue;
    if (!sheet.visible(p)) continue;
    const Vec3 x = sheet.embed(p);
    if (!in_image(spec, project(out.cam, x))) continue;
    inliers.push_back(x);
  }
  if (spec.noise > 0.0 && !inliers.empty()) {
    std::normal_distribution<double> gauss(0.0, spec.noise * bounding_diagonal(inliers));
    for (auto& x : inliers)
      for (int k = 0; k < 3; ++k) x[k] += gauss(rng);
  }
  std::vector<Vec3> all = inliers;
  std::vector<std::uint8_t> labels(inliers.size(), 1);
  if (spec.outliers > 0) {
    if (inliers.empty()) throw Error("outliers need inliers to define their box");
    Vec3 lo = inliers.front(), hi = lo;
    for (const auto& x : inliers) {
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
    }
    for (int i = 0; i < spec.outliers; ++i) {
      Vec3 x;
      for (int k = 0; k < 3; ++k) x[k] = lo[k] + uni(rng) * (hi[k] - lo[k]);
      all.push_back(x);
      labels.push_back(0);
    }
  }
  std::vector<size_t> perm(all.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  for (size_t i = perm.size(); i > 1; --i) {
    std::uniform_int_distribution<size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  out.cloud.resize(all.size());
  out.labels.resize(all.size());
  for (size_t i = 0; i < perm.size(); ++i) {
    out.cloud[i] = all[perm[i]];
    out.labels[i] = labels[perm[i]];
  }

  // Feature segments: truth lines cut at creases (and optionally into pieces).
  out.truth_lines = truth_lines(spec);
  for (const auto& line : out.truth_lines) {
    std::vector<double> cuts{0.0};
    for (double c : sheet.crease_crossings(line.a, line.b)) cuts.push_back(c);
    cuts.push_back(1.0);
    const double len = (line.b - line.a).norm();
    for (size_t k = 0; k + 1 < cuts.size(); ++k) {
      if (spec.segment_length > 0.0 && line.cls != FeatureClass::Boundary) {
        const double step = spec.segment_length / len, gap = spec.segment_gap / len;
        for (double t = cuts[k]; t < cuts[k + 1] - 1e-12; t += step + gap)
          emit_piece(spec, sheet, out.cam, line, t, std::min(t + step, cuts[k + 1]), out);
      } else {
        emit_piece(spec, sheet, out.cam, line, cuts[k], cuts[k + 1], out);
      }
    }
  }

  // Reference photograph by per-pixel ray casting.
  out.reference = Image(spec.image_width, spec.image_height);
  const int ss = spec.supersample;
  for (int y = 0; y < spec.image_height; ++y)
    for (int x = 0; x < spec.image_width; ++x) {
      double acc[3] = {0, 0, 0};
      for (int sy = 0; sy < ss; ++sy)
        for (int sx = 0; sx < ss; ++sx) {
          const Vec2 px(x + (sx + 0.5) / ss - 0.5, y + (sy + 0.5) / ss - 0.5);
          const auto hit = sheet.unfold_ray(back_project(out.cam, px, 1.0).normalized());
          const Rgb c = hit ? texture_color(spec, *hit) : spec.background;
          for (int k = 0; k < 3; ++k) acc[k] += c[k];
        }
      Rgb c;
      for (int k = 0; k < 3; ++k) c[k] = static_cast<std::uint8_t>(std::lround(acc[k] / (ss * ss)));
      out.reference.set(x, y, c);
    }
  return out;
}

void save_bundle(const std::filesystem::path& dir, const SynthBundle& b) {
  std::filesystem::create_directories(dir);
  save_scene_spec(dir / "scene.txt", b.spec);
  save_intrinsics(dir / "cam.txt", b.cam);
  save_points(dir / "cloud.xyz", b.cloud);
  {
    std::ofstream out(dir / "labels.txt");
    for (auto l : b.labels) out << int(l) << '\n';
  }
  save_segments(dir / "segments.txt", b.segments);
  {
    std::ofstream out(dir / "segment_lines.txt");
    for (int id : b.segment_lines) out << id << '\n';
  }
  {
    std::ofstream out(dir / "truth_lines.txt");
    out << std::setprecision(17);
    for (const auto& l : b.truth_lines)
      out << l.id << ' ' << to_string(l.cls) << ' ' << l.a.x() << ' ' << l.a.y() << ' ' << l.b.x() << ' ' << l.b.y()
          << '\n';
  }
  save_image(dir / "reference.png", b.reference);
}

namespace {

std::vector<int> load_ints(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<int> v;
  int x;
  while (in >> x) v.push_back(x);
  if (!in.eof()) throw Error("bad integer list in " + path.string());
  return v;
}

}  // namespace

SynthBundle load_bundle(const std::filesystem::path& dir) {
  SynthBundle b;
  b.spec = load_scene_spec(dir / "scene.txt");
  b.cam = load_intrinsics(dir / "cam.txt");
  b.cloud = load_points(dir / "cloud.xyz");
  for (int l : load_ints(dir / "labels.txt")) b.labels.push_back(static_cast<std::uint8_t>(l != 0));
  if (b.labels.size() != b.cloud.size()) throw Error("labels do not match the cloud in " + dir.string());
  b.segments = load_segments(dir / "segments.txt");
  b.segment_lines = load_ints(dir / "segment_lines.txt");
  if (b.segment_lines.size() != b.segments.size()) throw Error("segment ids do not match segments in " + dir.string());
  std::ifstream in(dir / "truth_lines.txt");
  if (!in) throw Error("cannot open truth lines in " + dir.string());
  TruthLine l;
  std::string cls;
  while (in >> l.id >> cls >> l.a.x() >> l.a.y() >> l.b.x() >> l.b.y()) {
    l.cls = feature_class_from_string(cls);
    b.truth_lines.push_back(l);
  }
  b.reference = load_image(dir / "reference.png");
  return b;
}

std::vector<Vec2> truth_for_vertices(const FoldedSheet& sheet, const SpaceMesh& space,
                                     std::vector<std::uint8_t>& mask) {
  std::vector<Vec2> out(space.vertex_count(), Vec2::Zero());
  mask.assign(space.vertex_count(), 0);
  for (int i = 0; i < space.vertex_count(); ++i) {
    const Vec3& v = space.vertex(i);
    if (!(v.z() > 0.0)) continue;
    if (auto hit = sheet.unfold_ray(v.normalized())) {
      out[i] = *hit;
      mask[i] = 1;
    }
  }
  return out;
}

std::vector<std::pair<int, double>> rendered_line_straightness(const SynthBundle& bundle, const FoldedSheet& sheet,
                                                                const MeshPair& recovered, bool include_boundary) {
  const RayCaster caster(recovered.space, bundle.cam);
  std::vector<std::pair<int, double>> out;
  for (const auto& line : bundle.truth_lines) {
    if (line.cls == FeatureClass::Boundary && !include_boundary) continue;
    const double len = (line.b - line.a).norm();
    const int n = std::max(2, static_cast<int>(std::ceil(len / 0.001)) + 1);
    std::vector<Vec2> pts;
    for (int i = 0; i < n; ++i) {
      const Vec2 p = line.a + (line.b - line.a) * (static_cast<double>(i) / (n - 1));
      if (!sheet.visible(p)) continue;
      const Vec2 px = project(bundle.cam, sheet.embed(p));
      if (auto a = caster.cast(px)) pts.push_back(barycentric_eval(recovered.plane, *a));
    }
    if (static_cast<int>(pts.size()) < std::max(2, n / 2)) continue;
    out.emplace_back(line.id, obb_of_points(pts).straightness());
  }
  return out;
}

EvalMetrics evaluate(const SynthBundle& bundle, const MeshPair& recovered, std::span<const std::uint8_t> valid) {
  const FoldedSheet sheet(bundle.spec);
  EvalMetrics m;
  std::vector<std::uint8_t> mask;
  const auto truth = truth_for_vertices(sheet, recovered.space, mask);
  m.displacement_vertices = static_cast<int>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
  m.displacement_error = displacement_error(recovered.plane.vertices(), truth, mask, sheet.diagonal());

  const double s = 1.0 / bounding_diagonal(bundle.cloud);
  double sum = 0.0;
  for (int f = 0; f < recovered.space.face_count(); ++f) sum += iso_residuals(recovered, f).cwiseAbs().sum();
  m.iso_mean_abs = sum * s * s / (3.0 * recovered.space.face_count());

  const auto lines = rendered_line_straightness(bundle, sheet, recovered);
  m.lines_measured = static_cast<int>(lines.size());
  for (const auto& [id, hw] : lines) {
    m.worst_line_hw = std::max(m.worst_line_hw, hw);
    m.mean_line_hw += hw;
  }
  if (!lines.empty()) m.mean_line_hw /= static_cast<double>(lines.size());

  if (!valid.empty()) {
    if (valid.size() != bundle.labels.size()) throw Error("validity mask does not match the scene cloud");
    int in_ok = 0, out_ok = 0;
    for (size_t i = 0; i < valid.size(); ++i) {
      if (bundle.labels[i]) {
        ++m.inliers;
        in_ok += valid[i] ? 1 : 0;
      } else {
        ++m.outliers;
        out_ok += valid[i] ? 0 : 1;
      }
    }
    m.inlier_valid_rate = m.inliers ? static_cast<double>(in_ok) / m.inliers : 1.0;
    m.outlier_invalid_rate = m.outliers ? static_cast<double>(out_ok) / m.outliers : 1.0;
  }
  return m;
}

}  // namespace docrect
