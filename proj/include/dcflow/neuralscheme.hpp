#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcflow/discretization.hpp"
#include "dcflow/schemes.hpp"

namespace dcflow {

/// Layer sizes of the encoder/generator MLPs. The generator emits the raw
/// outputs for both velocity components jointly: 2*(stencil-1) values per
/// face. Hyperbolic tangent on every layer.
struct MlpArch {
  int stencil = 12;
  int channels = 5;  // r_x, r_y, ux_norm, uy_norm, p_norm
  std::vector<int> encoder = {53, 49, 45, 41};
  std::vector<int> generator = {31, 32};

  int inputs() const { return stencil * channels; }
  int latent() const { return encoder.back(); }
  int raw_outputs() const { return 2 * (stencil - 1); }
  bool operator==(const MlpArch&) const = default;
};

/// Two orientation encoders of identical shape plus one shared generator.
struct MlpParams {
  MlpArch arch;
  std::vector<Eigen::MatrixXd> w_ex, w_ey, w_g;  // weight matrices per layer
  std::vector<Eigen::MatrixXd> b_ex, b_ey, b_g;  // bias columns per layer

  /// Xavier-uniform init; the final generator layer starts at zero so the
  /// initial constrained weights equal the transform's base vector b.
  static MlpParams init(const MlpArch& arch, std::uint64_t seed);

  int count() const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& theta);
  bool finite() const;

  void save(const std::string& path, double best_loss = -1.0) const;
  static MlpParams load(const std::string& path, double* best_loss = nullptr);
};

/// Affine map w = A x + b enforcing sum(w) = 1 exactly: A spans the nullspace
/// of the first-order consistency constraint, b is the standard second-order
/// (midpoint) weight set on the two face-adjacent stencil slots.
struct ConstraintTransform {
  Eigen::MatrixXd a;                // stencil x (stencil-1)
  Eigen::MatrixXd b_vert, b_horz;   // stencil x 1
  static ConstraintTransform standard(int stencil = 12);
};

/// Stencil cell indices per internal face in the canonical patch ordering
/// (ordering version "rowmajor-v1"):
///   vertical faces: 4x3 block, rows by y-offset {-1,0,+1} relative to the
///   owner cell, columns by x-offset {-1,0,+1,+2}, slot = (ry+1)*4 + (cx+1);
///   horizontal faces: 3x4 block, rows by y-offset {-1..+2}, columns by
///   x-offset {-1,0,+1}, slot = (ry+1)*3 + (cx+1).
/// Out-of-domain or masked cells are -1 (zero-filled); a patch is a boundary
/// patch iff any slot is missing.
struct PatchMaps {
  Eigen::MatrixXi stencil_x;  // stencil x n_x_faces
  Eigen::MatrixXi stencil_y;  // stencil x n_y_faces
  Eigen::ArrayXXd bmask_x;    // n_x_faces x 1, 1 = boundary patch
  Eigen::ArrayXXd bmask_y;
  static PatchMaps build(const StructuredMesh& mesh);
};

/// Network parameters lifted as tape leaves; gradient read back after the
/// reverse sweep in the same flat order as MlpParams::flatten.
struct NetVars {
  const MlpParams* params = nullptr;
  std::vector<ad::Var> w_ex, b_ex, w_ey, b_ey, w_g, b_g;
  ad::Var a_basis, b_vert, b_horz;
};

NetVars lift_params(ad::Tape& t, const MlpParams& p, const ConstraintTransform& ct);
Eigen::VectorXd read_param_grad(const ad::Tape& t, const NetVars& nv);

/// Stacked patch matrix (inputs x n_faces) from cell-length channel fields.
ad::Var build_patches(ad::Tape& t, const Eigen::MatrixXi& stencil, ad::Var r1,
                      ad::Var r2, ad::Var uxn, ad::Var uyn, ad::Var pn);

/// Encoder + generator + constraint transform; returns the per-face weight
/// matrices (stencil x n_faces) for the x and y velocity components.
struct SchemeWeights {
  ad::Var wx, wy;
};
SchemeWeights generate_weights(ad::Tape& t, const NetVars& nv, ad::Var patches,
                               bool vertical);

/// u_F = sum_i w_i u_i in the canonical stencil order.
ad::Var face_velocity(ad::Tape& t, ad::Var weights, ad::Var u,
                      const Eigen::MatrixXi& stencil);

struct LimiterConfig {
  double lambda = 0.3;
};

/// Boundary-patch bounding limiter (inference only): out-of-bounds
/// predictions fall back to the Upwind face value; faces with mask 0 are
/// never altered. Applied independently per velocity component.
ad::Var bound_boundary_faces(ad::Tape& t, ad::Var u_face, ad::Var u_own,
                             ad::Var u_nb, ad::Var upwind, double lambda,
                             const Eigen::ArrayXXd& mask);

struct NeuralFaceVelocities {
  ad::Var ufx, ufy;  // combined internal-face order (x-faces then y-faces)
};

/// The full modified inverse operator: r -> clip -> normalize -> patches ->
/// weights -> face velocities (-> bounding limiter at inference).
NeuralFaceVelocities modified_inverse(ad::Tape& t, const SolverMaps& maps,
                                      const PatchMaps& pmaps, const NetVars& nv,
                                      ad::Var ux, ad::Var uy, ad::Var p,
                                      ad::Var flux_internal, double p_ref,
                                      bool apply_limiter, double lambda);

}  // namespace dcflow
