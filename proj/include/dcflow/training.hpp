#pragma once

#include <string>
#include <vector>

#include "dcflow/simulation.hpp"

namespace dcflow {

/// Time-ordered coarse reference states (projected fine data).
struct Dataset {
  std::vector<State> snapshots;
  int size() const { return static_cast<int>(snapshots.size()); }
};

/// Project a fine trajectory onto the pair's coarse mesh, discarding the
/// initial transient.
Dataset build_dataset(const MeshPair& pair, const std::vector<State>& fine_traj,
                      int discard);

/// n snapshots with accumulation horizon T yield n - T training windows;
/// window i starts at snapshot i and is scored against snapshots i+1 .. i+T.
int n_samples(int n_snapshots, int horizon);
std::vector<int> window_starts(int n_snapshots, int horizon);

/// Accumulated L1 percentage error of one rollout against the reference:
///   psi = 100 * sum_t ||truth_t - pred_t||_1 / sum_t ||truth_t||_1.
/// An identically-zero reference over the window is rejected.
double psi_loss(const std::vector<Eigen::ArrayXd>& pred,
                const std::vector<Eigen::ArrayXd>& truth);
ad::Var psi_traced(ad::Tape& t, const std::vector<ad::Var>& pred,
                   const std::vector<Eigen::ArrayXd>& truth);

struct LossWeights {
  double wx = 1.0, wy = 1.0;
};

/// Minimal Adam optimizer over a flat parameter vector.
struct AdamState {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Eigen::VectorXd m, v;
  int step = 0;
  void update(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr);
};

struct TrainConfig {
  std::vector<int> t_schedule = {1, 2, 3, 4};
  std::vector<int> epochs_per_stage = {40, 25, 25, 25};  // caps per stage
  int batch_size = 30;
  double lr0 = 0.01;
  int patience = 6;        // plateau length Z before decaying the rate
  double lr_decay = 0.5;
  double val_fraction = 0.1;       // validation split, last windows
  double rel_improvement = 1e-3;   // stage stops when best stalls this long
  bool auto_weights = true;        // wx, wy from the baseline component losses
  LossWeights weights;
  std::uint64_t seed = 0;
  std::string out_dir;             // checkpoints + CSV log; empty = no files
};

struct EpochLog {
  int stage_horizon = 0;
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0, val_loss = 0.0;
  double psi_x = 0.0, psi_y = 0.0;  // training means per component
  double seconds = 0.0;
};

struct TrainResult {
  MlpParams best;
  double best_loss = 0.0;
  LossWeights weights_used;
  std::vector<EpochLog> log;
  double baseline_loss_t1 = 0.0;      // frozen Upwind loss at horizon 1
  int epochs_to_beat_baseline = -1;   // -1 when never reached in stage 1
};

/// Weighted loss of one window (T coupled steps); fills the parameter
/// gradient when requested. Throws on solver failure or non-finite results.
double window_loss(const SolverContext& ctx, const MlpParams* params,
                   const ConstraintTransform& ct, const Dataset& data, int t0,
                   int horizon, const LossWeights& lw,
                   Eigen::VectorXd* grad = nullptr);

/// Mean loss of a scheme over the given windows (no gradients); psi_x/psi_y
/// receive the per-component means when non-null.
double eval_windows(const SolverContext& ctx, const Dataset& data,
                    const std::vector<int>& starts, int horizon,
                    const LossWeights& lw, double* psi_x = nullptr,
                    double* psi_y = nullptr);

/// Multi-step curriculum training: for each horizon in the schedule, rebuild
/// the windows, run mini-batched solver-in-the-loop epochs, decay the
/// learning rate and restore the best parameters on a Z-epoch plateau, and
/// warm-start the next stage from the best parameters so far.
TrainResult train(const StructuredMesh& coarse, const BoundarySet& bset,
                  const PimpleConfig& base_cfg, const Dataset& data,
                  const MlpArch& arch, const TrainConfig& tc);

/// Per-step cumulative psi of a rollout against a reference trajectory
/// (reference[0] is the initial state; horizon <= reference.size()-1).
struct RolloutMetrics {
  std::vector<double> psi_x, psi_y;
  std::vector<double> step_seconds;
};
RolloutMetrics rollout_error(const SolverContext& ctx,
                             const std::vector<State>& reference, int horizon);

}  // namespace dcflow
