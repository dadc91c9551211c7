#pragma once

#include <functional>
#include <vector>

#include "dcflow/neuralscheme.hpp"

namespace dcflow {

struct PimpleConfig {
  double dt = 0.05;
  double nu = 0.01;
  int n_correctors = 2;          // pressure corrector passes per step
  double tol_momentum = 1e-10;   // absolute inf-norm stopping criteria
  double tol_pressure = 1e-10;
  int max_iter_momentum = 2000;
  int max_iter_pressure = 20000;
  bool turbulence = false;
  SchemeKind scheme = SchemeKind::Upwind;
  bool limiter = true;           // boundary-patch bounding at inference
  double limiter_lambda = 0.3;
  double p_ref = 0.0;
  /// Test switch: run the deferred-correction plumbing with the high-order
  /// face value replaced by the Upwind value, so the correction is exactly
  /// zero and the step must reproduce the pure Upwind scheme.
  bool dc_freeze_upwind = false;
};

struct TurbulenceConstants {
  double beta_star = 0.09;
  double sigma_star = 0.5;
  double alpha = 5.0 / 9.0;
  double beta = 3.0 / 40.0;
  double sigma = 0.5;
  double k_floor = 1e-14;
  double omega_floor = 1e-10;
};

/// Everything a time step needs besides the state: mesh-derived index maps,
/// boundary conditions, numerics configuration and (for the learned scheme)
/// the network parameters.
struct SolverContext {
  const StructuredMesh* mesh = nullptr;
  BoundarySet bset;
  SolverMaps maps;
  PatchMaps pmaps;
  PimpleConfig cfg;
  TurbulenceConstants turb;
  const MlpParams* net = nullptr;
  const ConstraintTransform* ct = nullptr;

  static SolverContext build(const StructuredMesh& mesh, const BoundarySet& bset,
                             const PimpleConfig& cfg);
};

struct VarState {
  ad::Var ux, uy, p, k, w;
};

VarState lift_state(ad::Tape& t, const State& s);
State read_state(const ad::Tape& t, const VarState& s);

struct StepDiagnostics {
  double max_divergence = 0.0;  // max cell |sum of face fluxes| after correction
  SolveReport momentum_x, momentum_y, pressure;
  int pressure_solves = 0;
};

/// One PIMPLE step recorded on the tape. The convective flux, the
/// deferred-correction face values and (via `nv`) the learned interpolation
/// are all evaluated at the start-of-step state. `nv` may be null for
/// classical schemes.
VarState step_traced(ad::Tape& t, const SolverContext& ctx, const VarState& s,
                     const NetVars* nv, StepDiagnostics* diag = nullptr);

/// Plain (gradient-free) step; uses a scratch tape internally.
State step(const SolverContext& ctx, const State& s, StepDiagnostics* diag = nullptr);

/// n_steps plain steps from s0; returns the trajectory including s0.
/// `on_step(i, state, diag)` fires after each accepted step when provided.
std::vector<State> rollout(
    const SolverContext& ctx, const State& s0, int n_steps,
    const std::function<void(int, const State&, const StepDiagnostics&)>& on_step =
        nullptr);

}  // namespace dcflow
