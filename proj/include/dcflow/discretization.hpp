#pragma once

#include <array>

#include "dcflow/fields.hpp"
#include "dcflow/linsolve.hpp"
#include "dcflow/mesh.hpp"
#include "dcflow/tape.hpp"

namespace dcflow {

/// Index maps precomputed from a mesh + boundary set so that every solver
/// stage is expressible as gather/scatter tape primitives. Read-only after
/// build.
struct SolverMaps {
  const StructuredMesh* mesh = nullptr;
  BoundarySet bset;
  int m = 0, nf = 0, nxf = 0, nyf = 0, nbf = 0;
  double h = 0, vol = 0;

  // internal faces, combined order (x-faces then y-faces)
  Eigen::MatrixXi own, nb;
  Eigen::MatrixXi own_x, nb_x, own_y, nb_y;
  // second cell upstream/downstream along the face normal; -1 when absent
  Eigen::MatrixXi own2_x, nb2_x, own2_y, nb2_y;
  // boundary-face fallback for the missing second cell
  Eigen::MatrixXi own2_bf_x, nb2_bf_x, own2_bf_y, nb2_bf_y;

  Eigen::MatrixXi bcell;                 // nbf x 1
  Eigen::MatrixXd barea;                 // nbf x 1
  Eigen::MatrixXd bnormal_x, bnormal_y;  // nbf x 1
  Eigen::MatrixXd area;                  // nf x 1

  // per-quantity boundary value maps: value = gather(cells, zg_idx) + fixed
  std::array<Eigen::MatrixXi, kNumQuantities> bval_zg_idx;
  std::array<Eigen::MatrixXd, kNumQuantities> bval_fixed;
  std::array<Eigen::ArrayXXd, kNumQuantities> b_fixed_mask;  // 1 = FixedValue

  // same-orientation face on the +axis side of each cell; -1 when absent
  Eigen::MatrixXi east_face_of_cell, north_face_of_cell;

  static SolverMaps build(const StructuredMesh& mesh, const BoundarySet& bset);
};

/// 5-point linear system under assembly. rhs excludes the pressure-gradient
/// source, which the PIMPLE loop handles separately.
struct SystemVars {
  ad::Var diag, off_own_nb, off_nb_own, rhs;
  static SystemVars zero(ad::Tape& t, const SolverMaps& maps);
};

struct FluxVars {
  ad::Var internal;  // nf x 1, positive owner -> neighbour
  ad::Var bound;     // nbf x 1, positive outward
};

/// Boundary face values for one quantity under the maps' boundary set.
ad::Var boundary_values(ad::Tape& t, const SolverMaps& maps, Quantity q,
                        ad::Var cells);

/// Linear interpolation of cell velocities to face mass fluxes (per unit
/// depth). Boundary fluxes honour the velocity boundary conditions.
FluxVars face_mass_flux(ad::Tape& t, const SolverMaps& maps, ad::Var ux,
                        ad::Var uy);

/// First-order Upwind convection: implicit coefficients from the face flux.
/// bq is the transported quantity's boundary values (inflow contributions).
void assemble_convection_upwind(ad::Tape& t, const SolverMaps& maps,
                                const FluxVars& flux, Quantity q, ad::Var bq,
                                SystemVars& sys);

/// Two-point diffusive flux with face viscosity nu_face (nf x 1) and cell
/// viscosity at boundary faces nu_bface (nbf x 1). Fixed-value boundary faces
/// use the half-cell distance.
void assemble_diffusion(ad::Tape& t, const SolverMaps& maps, ad::Var nu_face,
                        ad::Var nu_bface, Quantity q, ad::Var bq, SystemVars& sys);

/// Implicit Euler transient term.
void add_time_term(ad::Tape& t, const SolverMaps& maps, double dt, ad::Var u_old,
                   SystemVars& sys);

/// Deferred correction: adds F_F (u_F^DC - u_F^U) explicitly to the rhs,
/// leaving the matrix untouched.
void deferred_correction(ad::Tape& t, const SolverMaps& maps, ad::Var flux,
                         ad::Var u_face_dc, ad::Var u_face_upwind, SystemVars& sys);

/// Green-Gauss cell gradient component (axis 0 = x, 1 = y).
ad::Var green_gauss_grad(ad::Tape& t, const SolverMaps& maps, ad::Var cells,
                         ad::Var bvals, int axis);

/// Off-diagonal matvec of an assembled system (for the PISO H operator).
ad::Var apply_offdiag(ad::Tape& t, const SolverMaps& maps, const SystemVars& sys,
                      ad::Var x);

/// Per-cell divergence of a flux field (sum of outward face fluxes).
ad::Var cell_divergence(ad::Tape& t, const SolverMaps& maps, const FluxVars& flux);

}  // namespace dcflow
