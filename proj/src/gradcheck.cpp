#include "dcflow/gradcheck.hpp"

#include <cmath>
#include <numeric>

namespace dcflow {

GradCheckReport gradcheck(const SolverContext& ctx, const MlpParams& params,
                          const ConstraintTransform& ct, const Dataset& data,
                          int t0, int horizon, const LossWeights& lw,
                          std::vector<int> param_indices, double fd_step,
                          double rel_tol, double abs_floor) {
  MlpParams work = params;
  Eigen::VectorXd theta = work.flatten();
  Eigen::VectorXd analytic;
  window_loss(ctx, &work, ct, data, t0, horizon, lw, &analytic);

  if (param_indices.empty()) {
    param_indices.resize(theta.size());
    std::iota(param_indices.begin(), param_indices.end(), 0);
  }

  GradCheckReport rep;
  rep.pass = true;
  for (int idx : param_indices) {
    double saved = theta(idx);
    theta(idx) = saved + fd_step;
    work.unflatten(theta);
    double lp = window_loss(ctx, &work, ct, data, t0, horizon, lw);
    theta(idx) = saved - fd_step;
    work.unflatten(theta);
    double lm = window_loss(ctx, &work, ct, data, t0, horizon, lw);
    theta(idx) = saved;
    work.unflatten(theta);

    GradCheckRow row;
    row.param_index = idx;
    row.analytic = analytic(idx);
    row.finite_diff = (lp - lm) / (2.0 * fd_step);
    double scale = std::max(std::abs(row.analytic), std::abs(row.finite_diff));
    row.rel_error =
        scale <= abs_floor ? 0.0 : std::abs(row.analytic - row.finite_diff) / scale;
    if (row.rel_error > rep.max_rel_error) {
      rep.max_rel_error = row.rel_error;
      rep.worst_index = idx;
    }
    if (row.rel_error > rel_tol) rep.pass = false;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace dcflow
