#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace docrect {

struct LbfgsOptions {
  int max_iterations = 50;
  int memory = 10;
  /// Stop once a step lowers f by less than rel_tol * |f|.
  double rel_tol = 1e-6;
  /// Stop once the largest gradient component is at most this.
  double grad_tol = 0.0;
  double armijo = 1e-4;  ///< sufficient decrease constant
  double wolfe = 0.9;    ///< curvature constant (strong Wolfe)
  int max_evaluations_per_search = 25;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool line_search_failed = false;
  std::vector<double> values;  ///< f at the start and after every accepted step
};

/// Returns f(x) and writes the gradient into the second argument.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Limited-memory BFGS with a strong Wolfe line search. Accepted steps never
/// increase f; on line-search failure the best point so far is returned.
LbfgsResult minimize_lbfgs(const Objective& objective, Eigen::VectorXd x, const LbfgsOptions& options = {});

}  // namespace docrect
