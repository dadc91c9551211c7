#pragma once

#include "dcflow/training.hpp"

namespace dcflow {

struct GradCheckRow {
  int param_index = 0;
  double analytic = 0.0;
  double finite_diff = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  double max_rel_error = 0.0;
  int worst_index = -1;
  bool pass = false;
};

/// Compares the tape gradient of the windowed loss against central finite
/// differences, parameter by parameter. `param_indices` empty means all.
/// rel_error uses an absolute floor: entries where both gradients are below
/// `abs_floor` count as matching.
GradCheckReport gradcheck(const SolverContext& ctx, const MlpParams& params,
                          const ConstraintTransform& ct, const Dataset& data,
                          int t0, int horizon, const LossWeights& lw,
                          std::vector<int> param_indices, double fd_step = 1e-5,
                          double rel_tol = 1e-4, double abs_floor = 1e-12);

}  // namespace dcflow
