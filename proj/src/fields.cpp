#include "dcflow/fields.hpp"

#include <stdexcept>

namespace dcflow {

const char* quantity_name(Quantity q) {
  switch (q) {
    case Quantity::Ux: return "ux";
    case Quantity::Uy: return "uy";
    case Quantity::P: return "p";
    case Quantity::K: return "k";
    case Quantity::Omega: return "omega";
  }
  return "?";
}

BoundaryCondition BoundarySet::resolve(const StructuredMesh::BoundaryFace& f,
                                       Quantity q) const {
  BoundaryCondition c = at(f.tag, q);
  if (c.kind == BCKind::NoSlipWall) return {BCKind::FixedValue, 0.0};
  if (c.kind == BCKind::SlipWall) {
    bool normal_component = (q == Quantity::Ux && f.normal_x != 0) ||
                            (q == Quantity::Uy && f.normal_y != 0);
    if (normal_component) return {BCKind::FixedValue, 0.0};
    return {BCKind::ZeroGradient, 0.0};
  }
  return c;
}

BoundarySet BoundarySet::channel(double inlet_velocity, double k_in, double omega_in) {
  BoundarySet b;
  b.at(BoundaryTag::Inlet, Quantity::Ux) = {BCKind::FixedValue, inlet_velocity};
  b.at(BoundaryTag::Inlet, Quantity::Uy) = {BCKind::FixedValue, 0.0};
  b.at(BoundaryTag::Inlet, Quantity::P) = {BCKind::ZeroGradient, 0.0};
  b.at(BoundaryTag::Inlet, Quantity::K) = {BCKind::FixedValue, k_in};
  b.at(BoundaryTag::Inlet, Quantity::Omega) = {BCKind::FixedValue, omega_in};

  b.at(BoundaryTag::Outlet, Quantity::Ux) = {BCKind::ZeroGradient, 0.0};
  b.at(BoundaryTag::Outlet, Quantity::Uy) = {BCKind::ZeroGradient, 0.0};
  b.at(BoundaryTag::Outlet, Quantity::P) = {BCKind::FixedValue, 0.0};
  b.at(BoundaryTag::Outlet, Quantity::K) = {BCKind::ZeroGradient, 0.0};
  b.at(BoundaryTag::Outlet, Quantity::Omega) = {BCKind::ZeroGradient, 0.0};

  for (BoundaryTag wall : {BoundaryTag::Bottom, BoundaryTag::Top}) {
    b.at(wall, Quantity::Ux) = {BCKind::SlipWall, 0.0};
    b.at(wall, Quantity::Uy) = {BCKind::SlipWall, 0.0};
    b.at(wall, Quantity::P) = {BCKind::ZeroGradient, 0.0};
    b.at(wall, Quantity::K) = {BCKind::ZeroGradient, 0.0};
    b.at(wall, Quantity::Omega) = {BCKind::ZeroGradient, 0.0};
  }

  b.at(BoundaryTag::Obstacle, Quantity::Ux) = {BCKind::NoSlipWall, 0.0};
  b.at(BoundaryTag::Obstacle, Quantity::Uy) = {BCKind::NoSlipWall, 0.0};
  b.at(BoundaryTag::Obstacle, Quantity::P) = {BCKind::ZeroGradient, 0.0};
  b.at(BoundaryTag::Obstacle, Quantity::K) = {BCKind::FixedValue, k_in};
  b.at(BoundaryTag::Obstacle, Quantity::Omega) = {BCKind::FixedValue, omega_in};
  return b;
}

State State::zero(const StructuredMesh& mesh, double k0, double w0) {
  State s;
  s.ux = Eigen::ArrayXd::Zero(mesh.n_cells);
  s.uy = Eigen::ArrayXd::Zero(mesh.n_cells);
  s.p = Eigen::ArrayXd::Zero(mesh.n_cells);
  s.k = Eigen::ArrayXd::Constant(mesh.n_cells, k0);
  s.w = Eigen::ArrayXd::Constant(mesh.n_cells, w0);
  return s;
}

State State::uniform(const StructuredMesh& mesh, double ux0, double uy0, double p0,
                     double k0, double w0) {
  State s = zero(mesh, k0, w0);
  s.ux.setConstant(ux0);
  s.uy.setConstant(uy0);
  s.p.setConstant(p0);
  return s;
}

bool State::finite() const {
  return ux.isFinite().all() && uy.isFinite().all() && p.isFinite().all() &&
         k.isFinite().all() && w.isFinite().all();
}

VelocityNorm normalize_velocity(const Eigen::ArrayXd& u) {
  VelocityNorm out;
  double m = u.size() ? u.abs().maxCoeff() : 0.0;
  out.scale = m > 0.0 ? m : 1.0;
  out.values = u / out.scale;
  return out;
}

Eigen::ArrayXd normalize_pressure(const Eigen::ArrayXd& p, double p_ref) {
  return p - p_ref;
}

Eigen::ArrayXd denormalize_pressure(const Eigen::ArrayXd& p_norm, double p_ref) {
  return p_norm + p_ref;
}

Eigen::ArrayXd apply_boundary(const StructuredMesh& mesh, const BoundarySet& bset,
                              Quantity q, const Eigen::ArrayXd& cell_values) {
  if (cell_values.size() != mesh.n_cells)
    throw std::invalid_argument("apply_boundary: field/mesh mismatch");
  Eigen::ArrayXd out(mesh.n_boundary());
  for (int i = 0; i < mesh.n_boundary(); ++i) {
    const auto& f = mesh.boundary[i];
    BoundaryCondition c = bset.resolve(f, q);
    out[i] = c.kind == BCKind::FixedValue ? c.value : cell_values[f.cell];
  }
  return out;
}

}  // namespace dcflow
