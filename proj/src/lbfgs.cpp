#include "docrect/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace docrect {

namespace {

struct Sample {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;  // directional derivative
  Eigen::VectorXd g;
};

// Minimizer of the cubic through two samples, kept inside the bracket.
double interpolate(const Sample& a, const Sample& b) {
  const double lo = std::min(a.alpha, b.alpha);
  const double hi = std::max(a.alpha, b.alpha);
  const double width = hi - lo;
  double t = 0.5 * (a.alpha + b.alpha);
  const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.slope * b.slope;
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double denom = b.slope - a.slope + 2.0 * d2;
    if (denom != 0.0) {
      const double c = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / denom;
      if (std::isfinite(c)) t = c;
    }
  }
  return std::clamp(t, lo + 0.1 * width, hi - 0.1 * width);
}

class LineSearch {
 public:
  LineSearch(const Objective& obj, const Eigen::VectorXd& x, const Eigen::VectorXd& dir, double f0, double slope0,
             const LbfgsOptions& opt)
      : obj_(obj), x_(x), dir_(dir), f0_(f0), slope0_(slope0), opt_(opt) {}

  /// Accepted sample, or alpha == 0 on failure.
  Sample run(double alpha) {
    Sample prev{0.0, f0_, slope0_, {}};
    for (int i = 0; i < opt_.max_evaluations_per_search; ++i) {
      Sample cur = eval(alpha);
      if (!std::isfinite(cur.f)) {
        alpha = 0.5 * (prev.alpha + alpha);
        continue;
      }
      if (cur.f > f0_ + opt_.armijo * alpha * slope0_ || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur);
      if (std::abs(cur.slope) <= -opt_.wolfe * slope0_) return cur;
      if (cur.slope >= 0.0) return zoom(cur, prev);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return best_;
  }

  int evaluations() const { return evaluations_; }

 private:
  Sample eval(double alpha) {
    ++evaluations_;
    Sample s;
    s.alpha = alpha;
    s.g.resize(x_.size());
    s.f = obj_(x_ + alpha * dir_, s.g);
    s.slope = s.g.dot(dir_);
    if (std::isfinite(s.f) && s.f <= f0_ + opt_.armijo * alpha * slope0_ && s.f < best_.f) best_ = s;
    return s;
  }

  Sample zoom(Sample lo, Sample hi) {
    while (evaluations_ < opt_.max_evaluations_per_search) {
      const double alpha = interpolate(lo, hi);
      if (!(std::abs(hi.alpha - lo.alpha) > 1e-16 * std::max(1.0, std::abs(lo.alpha)))) break;
      Sample cur = eval(alpha);
      if (!std::isfinite(cur.f) || cur.f > f0_ + opt_.armijo * alpha * slope0_ || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.slope) <= -opt_.wolfe * slope0_) return cur;
        if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    return best_;
  }

  const Objective& obj_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& dir_;
  double f0_, slope0_;
  const LbfgsOptions& opt_;
  int evaluations_ = 0;
  Sample best_{0.0, std::numeric_limits<double>::infinity(), 0.0, {}};
};

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x, const LbfgsOptions& opt) {
  LbfgsResult res;
  Eigen::VectorXd g(x.size());
  double f = objective(x, g);
  res.evaluations = 1;
  res.values.push_back(f);
  if (!std::isfinite(f)) {
    res.x = std::move(x);
    res.f = f;
    res.line_search_failed = true;
    return res;
  }

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd dir(x.size());

  for (int it = 0; it < opt.max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol) {
      res.converged = true;
      break;
    }
    // Two-loop recursion.
    dir = -g;
    const int m = static_cast<int>(s_hist.size());
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(dir);
      dir -= alpha[i] * y_hist[i];
    }
    if (m > 0) dir *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(dir);
      dir += (alpha[i] - beta) * s_hist[i];
    }
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g;
      slope = g.dot(dir);
    }
    const double step0 = s_hist.empty() ? std::min(1.0, 1.0 / std::max(dir.norm(), 1e-300)) : 1.0;

    LineSearch search(objective, x, dir, f, slope, opt);
    Sample acc = search.run(step0);
    res.evaluations += search.evaluations();
    if (!(acc.alpha > 0.0)) {
      res.line_search_failed = true;
      break;
    }
    Eigen::VectorXd s = acc.alpha * dir;
    Eigen::VectorXd y = acc.g - g;
    x += s;
    const double f_prev = f;
    f = acc.f;
    g = std::move(acc.g);
    ++res.iterations;
    res.values.push_back(f);

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (static_cast<int>(s_hist.size()) == opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    if (f_prev - f <= opt.rel_tol * std::abs(f_prev)) {
      res.converged = true;
      break;
    }
  }
  res.x = std::move(x);
  res.f = f;
  return res;
}

}  // namespace docrect
