#include "dcflow/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace dcflow {

Dataset build_dataset(const MeshPair& pair, const std::vector<State>& fine_traj,
                      int discard) {
  if (discard < 0 || discard >= (int)fine_traj.size())
    throw std::invalid_argument("discard count exceeds trajectory length");
  Dataset d;
  for (std::size_t i = discard; i < fine_traj.size(); ++i) {
    const State& f = fine_traj[i];
    State c;
    c.ux = project(f.ux, pair);
    c.uy = project(f.uy, pair);
    c.p = project(f.p, pair);
    c.k = project(f.k, pair);
    c.w = project(f.w, pair);
    d.snapshots.push_back(std::move(c));
  }
  return d;
}

int n_samples(int n_snapshots, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be positive");
  return std::max(0, n_snapshots - horizon);
}

std::vector<int> window_starts(int n_snapshots, int horizon) {
  std::vector<int> s(n_samples(n_snapshots, horizon));
  std::iota(s.begin(), s.end(), 0);
  return s;
}

double psi_loss(const std::vector<Eigen::ArrayXd>& pred,
                const std::vector<Eigen::ArrayXd>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("psi_loss: mismatched window");
  double num = 0, den = 0;
  for (std::size_t j = 0; j < pred.size(); ++j) {
    num += (truth[j] - pred[j]).abs().sum();
    den += truth[j].abs().sum();
  }
  if (den == 0.0) throw std::invalid_argument("psi_loss: zero reference norm");
  return 100.0 * num / den;
}

ad::Var psi_traced(ad::Tape& t, const std::vector<ad::Var>& pred,
                   const std::vector<Eigen::ArrayXd>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("psi_traced: mismatched window");
  ad::Var num;
  double den = 0;
  for (std::size_t j = 0; j < pred.size(); ++j) {
    ad::Var term = ad::sum_abs(pred[j] - t.leaf(truth[j].matrix()));
    num = j == 0 ? term : num + term;
    den += truth[j].abs().sum();
  }
  if (den == 0.0) throw std::invalid_argument("psi_traced: zero reference norm");
  return num * (100.0 / den);
}

void AdamState::update(Eigen::VectorXd& theta, const Eigen::VectorXd& grad,
                       double lr) {
  if (m.size() == 0) {
    m = Eigen::VectorXd::Zero(theta.size());
    v = Eigen::VectorXd::Zero(theta.size());
  }
  ++step;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  double c1 = 1.0 - std::pow(beta1, step);
  double c2 = 1.0 - std::pow(beta2, step);
  theta -= (lr / c1) * m.cwiseQuotient(
                           ((v / c2).cwiseSqrt().array() + eps).matrix());
}

namespace {

struct MemberResult {
  bool ok = false;
  double loss = std::numeric_limits<double>::infinity();
  double psi_x = 0, psi_y = 0;
  Eigen::VectorXd grad;
  std::string error;
};

/// One window: T coupled steps through the solver, component losses, and
/// (optionally) the parameter gradient of the weighted loss.
MemberResult evaluate_member(const SolverContext& ctx, const MlpParams* params,
                             const ConstraintTransform& ct, const Dataset& data,
                             int t0, int horizon, const LossWeights& lw,
                             bool want_grad) {
  MemberResult r;
  ad::Tape t;
  t.grad_enabled = want_grad;
  try {
    NetVars nv;
    const NetVars* nvp = nullptr;
    if (ctx.cfg.scheme == SchemeKind::DeepConvection) {
      nv = lift_params(t, *params, ct);
      nvp = &nv;
    }
    VarState s = lift_state(t, data.snapshots[t0]);
    std::vector<ad::Var> px, py;
    std::vector<Eigen::ArrayXd> tx, ty;
    for (int j = 1; j <= horizon; ++j) {
      s = step_traced(t, ctx, s, nvp);
      px.push_back(s.ux);
      py.push_back(s.uy);
      tx.push_back(data.snapshots[t0 + j].ux);
      ty.push_back(data.snapshots[t0 + j].uy);
    }
    ad::Var psix = psi_traced(t, px, tx);
    ad::Var psiy = psi_traced(t, py, ty);
    ad::Var loss = lw.wx * psix + lw.wy * psiy;
    r.psi_x = t.val(psix)(0, 0);
    r.psi_y = t.val(psiy)(0, 0);
    r.loss = t.val(loss)(0, 0);
    r.ok = std::isfinite(r.loss);
    if (r.ok && want_grad) {
      t.backward(loss);
      r.grad = read_param_grad(t, nv);
      if (!r.grad.allFinite()) r.ok = false;
    }
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

void write_log_header(std::ofstream& out) {
  out << "stage_horizon,epoch,lr,train_loss,val_loss,psi_x,psi_y,seconds\n";
}

void write_log_row(std::ofstream& out, const EpochLog& e) {
  out << e.stage_horizon << ',' << e.epoch << ',' << e.lr << ',' << e.train_loss
      << ',' << e.val_loss << ',' << e.psi_x << ',' << e.psi_y << ','
      << e.seconds << '\n';
  out.flush();
}

}  // namespace

double window_loss(const SolverContext& ctx, const MlpParams* params,
                   const ConstraintTransform& ct, const Dataset& data, int t0,
                   int horizon, const LossWeights& lw, Eigen::VectorXd* grad) {
  MemberResult r =
      evaluate_member(ctx, params, ct, data, t0, horizon, lw, grad != nullptr);
  if (!r.ok)
    throw std::runtime_error("window rollout failed: " +
                             (r.error.empty() ? "non-finite result" : r.error));
  if (grad) *grad = r.grad;
  return r.loss;
}

double eval_windows(const SolverContext& ctx, const Dataset& data,
                    const std::vector<int>& starts, int horizon,
                    const LossWeights& lw, double* psi_x, double* psi_y) {
  if (starts.empty()) throw std::invalid_argument("eval_windows: no windows");
  ConstraintTransform ct =
      ctx.ct ? *ctx.ct
             : ConstraintTransform::standard(ctx.net ? ctx.net->arch.stencil : 12);
  std::vector<MemberResult> res(starts.size());
#ifdef DCFLOW_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i = 0; i < (int)starts.size(); ++i)
    res[i] = evaluate_member(ctx, ctx.net, ct, data, starts[i], horizon, lw, false);

  double loss = 0, sx = 0, sy = 0;
  for (const auto& r : res) {
    if (!r.ok) return std::numeric_limits<double>::infinity();
    loss += r.loss;
    sx += r.psi_x;
    sy += r.psi_y;
  }
  if (psi_x) *psi_x = sx / starts.size();
  if (psi_y) *psi_y = sy / starts.size();
  return loss / starts.size();
}

TrainResult train(const StructuredMesh& coarse, const BoundarySet& bset,
                  const PimpleConfig& base_cfg, const Dataset& data,
                  const MlpArch& arch, const TrainConfig& tc) {
  if (tc.t_schedule.empty()) throw std::invalid_argument("empty stage schedule");

  PimpleConfig cfg_dc = base_cfg;
  cfg_dc.scheme = SchemeKind::DeepConvection;
  PimpleConfig cfg_up = base_cfg;
  cfg_up.scheme = SchemeKind::Upwind;
  SolverContext ctx_dc = SolverContext::build(coarse, bset, cfg_dc);
  SolverContext ctx_up = SolverContext::build(coarse, bset, cfg_up);
  ConstraintTransform ct = ConstraintTransform::standard(arch.stencil);
  ctx_dc.ct = &ct;

  MlpParams params = MlpParams::init(arch, tc.seed);
  Eigen::VectorXd theta = params.flatten();
  AdamState adam;
  std::mt19937_64 rng(tc.seed ^ 0x9e3779b97f4a7c15ull);

  TrainResult result;
  result.weights_used = tc.weights;

  std::ofstream log_file;
  if (!tc.out_dir.empty()) {
    std::filesystem::create_directories(tc.out_dir);
    log_file.open(tc.out_dir + "/training_log.csv");
    write_log_header(log_file);
  }

  double best_overall = std::numeric_limits<double>::infinity();
  MlpParams best_params = params;
  // one learning-rate state for the whole run: plateau decays carry over into
  // the next stage instead of restarting from lr0
  double lr = tc.lr0;

  for (std::size_t stage = 0; stage < tc.t_schedule.size(); ++stage) {
    int horizon = tc.t_schedule[stage];
    int cap = tc.epochs_per_stage.empty()
                  ? 10
                  : tc.epochs_per_stage[std::min(stage, tc.epochs_per_stage.size() - 1)];
    std::vector<int> starts = window_starts(data.size(), horizon);
    if (starts.empty())
      throw std::invalid_argument("not enough snapshots for the stage horizon");
    int n_val = (int)std::lround(tc.val_fraction * starts.size());
    n_val = std::min(n_val, (int)starts.size() - 1);
    std::vector<int> train_starts(starts.begin(), starts.end() - n_val);
    std::vector<int> val_starts(starts.end() - n_val, starts.end());

    double bx = 0, by = 0;
    double base_unweighted =
        eval_windows(ctx_up, data, train_starts, horizon, {1.0, 1.0}, &bx, &by);
    (void)base_unweighted;
    if (stage == 0 && tc.auto_weights && bx > 0 && by > 0) {
      // inverse-proportional to the baseline component losses, sum fixed at 2
      result.weights_used.wx = 2.0 * by / (bx + by);
      result.weights_used.wy = 2.0 * bx / (bx + by);
    }
    const LossWeights lw = result.weights_used;
    double baseline_loss = lw.wx * bx + lw.wy * by;
    if (stage == 0) result.baseline_loss_t1 = baseline_loss;

    double best_stage = std::numeric_limits<double>::infinity();
    MlpParams best_stage_params = params;
    int plateau = 0, last_gain_epoch = 0;

    for (int epoch = 1; epoch <= cap; ++epoch) {
      auto t_start = std::chrono::steady_clock::now();
      std::shuffle(train_starts.begin(), train_starts.end(), rng);

      double ep_loss = 0, ep_px = 0, ep_py = 0;
      int ep_members = 0;
      for (std::size_t b0 = 0; b0 < train_starts.size(); b0 += tc.batch_size) {
        std::size_t b1 = std::min(b0 + tc.batch_size, train_starts.size());
        std::vector<MemberResult> res(b1 - b0);
#ifdef DCFLOW_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (int i = 0; i < (int)res.size(); ++i)
          res[i] = evaluate_member(ctx_dc, &params, ct, data,
                                   train_starts[b0 + i], horizon, lw, true);

        Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
        int ok = 0;
        for (const auto& r : res) {  // ordered, deterministic reduction
          if (!r.ok) continue;
          grad += r.grad;
          ep_loss += r.loss;
          ep_px += r.psi_x;
          ep_py += r.psi_y;
          ++ok;
        }
        ep_members += ok;
        if (ok == (int)res.size()) {
          grad /= ok;
          adam.update(theta, grad, lr);
          params.unflatten(theta);
        }
        // a diverged member skips the update; the plateau rule recovers
      }

      EpochLog e;
      e.stage_horizon = horizon;
      e.epoch = epoch;
      e.lr = lr;
      e.train_loss = ep_members ? ep_loss / ep_members
                                : std::numeric_limits<double>::infinity();
      e.psi_x = ep_members ? ep_px / ep_members : 0;
      e.psi_y = ep_members ? ep_py / ep_members : 0;
      ctx_dc.net = &params;
      e.val_loss = val_starts.empty()
                       ? e.train_loss
                       : eval_windows(ctx_dc, data, val_starts, horizon, lw);
      e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                t_start)
                      .count();
      result.log.push_back(e);
      if (log_file.is_open()) write_log_row(log_file, e);

      if (stage == 0 && result.epochs_to_beat_baseline < 0 &&
          e.train_loss < baseline_loss)
        result.epochs_to_beat_baseline = epoch;

      double monitored = e.val_loss;
      if (monitored < best_stage) {
        if (best_stage - monitored >
            tc.rel_improvement * std::max(best_stage == std::numeric_limits<double>::infinity() ? monitored : best_stage, 1e-12))
          last_gain_epoch = epoch;
        best_stage = monitored;
        best_stage_params = params;
        plateau = 0;
      } else {
        ++plateau;
        if (plateau > tc.patience) {
          lr *= tc.lr_decay;
          params = best_stage_params;
          theta = params.flatten();
          plateau = 0;
        }
      }
      if (epoch - last_gain_epoch > 2 * tc.patience) break;  // stage converged
    }

    params = best_stage_params;
    theta = params.flatten();
    if (best_stage < best_overall ||
        stage + 1 == tc.t_schedule.size()) {  // later stages win ties on purpose
      best_overall = best_stage;
      best_params = params;
    }
    if (!tc.out_dir.empty())
      params.save(tc.out_dir + "/checkpoint_T" + std::to_string(horizon) +
                      ".dcnet",
                  best_stage);
  }

  result.best = best_params;
  result.best_loss = best_overall;
  if (!tc.out_dir.empty()) result.best.save(tc.out_dir + "/best.dcnet", best_overall);
  return result;
}

RolloutMetrics rollout_error(const SolverContext& ctx,
                             const std::vector<State>& reference, int horizon) {
  if (horizon < 1 || horizon >= (int)reference.size())
    throw std::invalid_argument("rollout_error: horizon exceeds reference length");
  RolloutMetrics m;
  State s = reference[0];
  double nx = 0, dx_ = 0, ny = 0, dy_ = 0;
  for (int j = 1; j <= horizon; ++j) {
    auto t0 = std::chrono::steady_clock::now();
    s = step(ctx, s);
    m.step_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count());
    nx += (reference[j].ux - s.ux).abs().sum();
    dx_ += reference[j].ux.abs().sum();
    ny += (reference[j].uy - s.uy).abs().sum();
    dy_ += reference[j].uy.abs().sum();
    m.psi_x.push_back(dx_ > 0 ? 100.0 * nx / dx_ : 0.0);
    m.psi_y.push_back(dy_ > 0 ? 100.0 * ny / dy_ : 0.0);
  }
  return m;
}

}  // namespace dcflow
