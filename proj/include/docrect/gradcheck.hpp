#pragma once

#include "docrect/energies.hpp"
#include "docrect/features.hpp"
#include "docrect/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace docrect {

/// A random but well-conditioned optimization state of unit scale.
struct RandomState {
  MeshPair pair;
  std::vector<PointCorrespondence> correspondences;
  std::vector<FeatureLine> lines;
};

RandomState random_state(std::uint64_t seed, GridDims dims = {5, 7});

struct GradCheckOptions {
  std::uint64_t seed = 1;
  GridDims dims{5, 7};
  double rel_tol = 1e-5;
  double abs_tol = 1e-8;
  double step = 1e-6;
  bool mutate = false;  ///< flip the sign of the isometry gradient (self-test)
};

struct TermCheck {
  std::string term;
  int components = 0;
  int failures = 0;
  int worst_index = -1;   ///< component with the largest error relative to its bound
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  double max_abs_error = 0.0;
  bool pass() const { return failures == 0; }
};

struct GradCheckReport {
  std::vector<TermCheck> terms;  ///< iso, dist, fair_space, fair_plane, line, ray, total
  bool pass() const;
};

/// Central differences against the analytic gradient of each weighted term
/// over every component of X = (V, V', line parameters).
GradCheckReport run_gradcheck(const GradCheckOptions& options);

}  // namespace docrect
