#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "dcflow/mesh.hpp"

namespace dcflow {

enum class Quantity { Ux = 0, Uy, P, K, Omega };
constexpr int kNumQuantities = 5;
const char* quantity_name(Quantity q);

enum class BCKind { FixedValue, ZeroGradient, SlipWall, NoSlipWall };

struct BoundaryCondition {
  BCKind kind = BCKind::ZeroGradient;
  double value = 0.0;
};

/// One condition per (boundary tag, quantity). SlipWall/NoSlipWall are
/// resolved per velocity component at lookup time: no-slip fixes both
/// components to zero; slip fixes the wall-normal component and leaves the
/// tangential one zero-gradient.
struct BoundarySet {
  std::array<std::array<BoundaryCondition, kNumQuantities>, kNumBoundaryTags> bc{};

  BoundaryCondition& at(BoundaryTag t, Quantity q) {
    return bc[static_cast<int>(t)][static_cast<int>(q)];
  }
  const BoundaryCondition& at(BoundaryTag t, Quantity q) const {
    return bc[static_cast<int>(t)][static_cast<int>(q)];
  }

  /// Effective condition for a quantity at a specific boundary face; resolves
  /// wall kinds into FixedValue / ZeroGradient using the face normal.
  BoundaryCondition resolve(const StructuredMesh::BoundaryFace& f, Quantity q) const;

  /// Inlet-driven channel with slip top/bottom walls, fixed-pressure outlet
  /// and a no-slip obstacle.
  static BoundarySet channel(double inlet_velocity, double k_in = 1e-4,
                             double omega_in = 1.0);
};

struct CellField {
  Quantity quantity = Quantity::Ux;
  Eigen::ArrayXd values;
};

struct FaceField {
  Eigen::ArrayXd internal;  // one per internal face (x-faces then y-faces)
  Eigen::ArrayXd boundary;  // one per boundary face; positive points outward
};

/// Full solver state at one time level.
struct State {
  Eigen::ArrayXd ux, uy, p, k, w;

  static State zero(const StructuredMesh& mesh, double k0 = 1e-4, double w0 = 1.0);
  static State uniform(const StructuredMesh& mesh, double ux0, double uy0,
                       double p0 = 0.0, double k0 = 1e-4, double w0 = 1.0);
  bool finite() const;
};

struct VelocityNorm {
  Eigen::ArrayXd values;
  double scale = 1.0;  // max |u| over the snapshot; 1 for an all-zero field
};

/// Zero-preserving rescale by the snapshot maximum of |u|; the result lies in
/// [-1, 1] and keeps the sign of the flow.
VelocityNorm normalize_velocity(const Eigen::ArrayXd& u);

Eigen::ArrayXd normalize_pressure(const Eigen::ArrayXd& p, double p_ref);
Eigen::ArrayXd denormalize_pressure(const Eigen::ArrayXd& p_norm, double p_ref);

/// Boundary face values of a field under the mesh's boundary set.
Eigen::ArrayXd apply_boundary(const StructuredMesh& mesh, const BoundarySet& bset,
                              Quantity q, const Eigen::ArrayXd& cell_values);

}  // namespace dcflow
