#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dcflow/tape.hpp"

namespace dcflow {

/// Topology of the sparse 5-point system: one diagonal entry per cell and two
/// off-diagonal entries per internal face (owner row / neighbour row).
struct SystemTopology {
  std::vector<int> own;  // owner cell per internal face
  std::vector<int> nb;   // neighbour cell per internal face
  int n_cells = 0;
  int n_faces() const { return static_cast<int>(own.size()); }
};

/// Coefficient storage: A x = b with
///   row p: diag[p] x[p] + sum_f off[...] x[adj] = rhs[p]
/// off_own_nb[f] sits in the owner row, column neighbour; off_nb_own[f] in the
/// neighbour row, column owner.
struct SparseSystem {
  const SystemTopology* topo = nullptr;
  Eigen::VectorXd diag;
  Eigen::VectorXd off_own_nb;
  Eigen::VectorXd off_nb_own;
  Eigen::VectorXd rhs;
};

struct SolveReport {
  int iterations = 0;
  double residual_inf = 0.0;
  bool converged = false;
};

Eigen::VectorXd spmv(const SystemTopology& topo, const Eigen::VectorXd& diag,
                     const Eigen::VectorXd& off_own_nb,
                     const Eigen::VectorXd& off_nb_own, const Eigen::VectorXd& x);

/// Jacobi-preconditioned conjugate gradient; requires a symmetric system
/// (off_own_nb == off_nb_own). Stops on ||r||_inf <= tol_abs.
Eigen::VectorXd solve_cg(const SparseSystem& sys, double tol_abs, int max_iter,
                         SolveReport* report = nullptr,
                         const Eigen::VectorXd* x0 = nullptr);

/// Jacobi-preconditioned BiCGStab for the nonsymmetric momentum/turbulence
/// systems. Stops on ||r||_inf <= tol_abs.
Eigen::VectorXd solve_bicgstab(const SparseSystem& sys, double tol_abs,
                               int max_iter, SolveReport* report = nullptr,
                               const Eigen::VectorXd* x0 = nullptr);

/// Dense assembly for test oracles.
Eigen::MatrixXd dense_matrix(const SystemTopology& topo,
                             const Eigen::VectorXd& diag,
                             const Eigen::VectorXd& off_own_nb,
                             const Eigen::VectorXd& off_nb_own);

namespace ad_ops {

/// Linear solve as a differentiable black-box primitive. Forward runs CG or
/// BiCGStab on the plain coefficient values; backward solves the transposed
/// system A^T lam = xbar and accumulates
///   rhs_bar += lam,  diag_bar -= lam .* x,
///   off_own_nb_bar[f] -= lam[own] x[nb],  off_nb_own_bar[f] -= lam[nb] x[own].
ad::Var linear_solve(const SystemTopology& topo, ad::Var diag, ad::Var off_own_nb,
                     ad::Var off_nb_own, ad::Var rhs, bool symmetric,
                     double tol_abs, int max_iter, SolveReport* report = nullptr,
                     const Eigen::VectorXd* x0 = nullptr);

}  // namespace ad_ops
}  // namespace dcflow
