#include "dcflow/discretization.hpp"

#include <stdexcept>

namespace dcflow {

using ad::Var;

SolverMaps SolverMaps::build(const StructuredMesh& mesh, const BoundarySet& bset) {
  SolverMaps s;
  s.mesh = &mesh;
  s.bset = bset;
  s.m = mesh.n_cells;
  s.nxf = mesh.n_x_faces();
  s.nyf = mesh.n_y_faces();
  s.nf = mesh.n_faces();
  s.nbf = mesh.n_boundary();
  s.h = mesh.dx;
  s.vol = mesh.cell_area();

  s.own.resize(s.nf, 1);
  s.nb.resize(s.nf, 1);
  s.own_x.resize(s.nxf, 1);
  s.nb_x.resize(s.nxf, 1);
  s.own_y.resize(s.nyf, 1);
  s.nb_y.resize(s.nyf, 1);
  s.area.resize(s.nf, 1);
  for (int f = 0; f < s.nxf; ++f) {
    s.own_x(f, 0) = mesh.x_faces[f].own;
    s.nb_x(f, 0) = mesh.x_faces[f].nb;
    s.own(f, 0) = mesh.x_faces[f].own;
    s.nb(f, 0) = mesh.x_faces[f].nb;
    s.area(f, 0) = mesh.dy;
  }
  for (int f = 0; f < s.nyf; ++f) {
    s.own_y(f, 0) = mesh.y_faces[f].own;
    s.nb_y(f, 0) = mesh.y_faces[f].nb;
    s.own(s.nxf + f, 0) = mesh.y_faces[f].own;
    s.nb(s.nxf + f, 0) = mesh.y_faces[f].nb;
    s.area(s.nxf + f, 0) = mesh.dx;
  }

  // boundary-face lookup per cell and direction: 0=W 1=E 2=S 3=N
  std::vector<std::array<int, 4>> bface_of_cell(s.m, {-1, -1, -1, -1});
  s.bcell.resize(s.nbf, 1);
  s.barea.resize(s.nbf, 1);
  s.bnormal_x.resize(s.nbf, 1);
  s.bnormal_y.resize(s.nbf, 1);
  for (int i = 0; i < s.nbf; ++i) {
    const auto& f = mesh.boundary[i];
    s.bcell(i, 0) = f.cell;
    s.bnormal_x(i, 0) = f.normal_x;
    s.bnormal_y(i, 0) = f.normal_y;
    s.barea(i, 0) = f.normal_x != 0 ? mesh.dy : mesh.dx;
    int dir = f.normal_x < 0 ? 0 : f.normal_x > 0 ? 1 : f.normal_y < 0 ? 2 : 3;
    bface_of_cell[f.cell][dir] = i;
  }

  auto second_cells = [&](const Eigen::MatrixXi& own_f, const Eigen::MatrixXi& nb_f,
                          int n, int dx_, int dy_, Eigen::MatrixXi& own2,
                          Eigen::MatrixXi& nb2, Eigen::MatrixXi& own2_bf,
                          Eigen::MatrixXi& nb2_bf, int dir_lo, int dir_hi) {
    own2.resize(n, 1);
    nb2.resize(n, 1);
    own2_bf.resize(n, 1);
    nb2_bf.resize(n, 1);
    for (int f = 0; f < n; ++f) {
      int o = own_f(f, 0), b = nb_f(f, 0);
      own2(f, 0) = mesh.cell_at(mesh.cell_ix[o] - dx_, mesh.cell_iy[o] - dy_);
      nb2(f, 0) = mesh.cell_at(mesh.cell_ix[b] + dx_, mesh.cell_iy[b] + dy_);
      own2_bf(f, 0) = own2(f, 0) >= 0 ? -1 : bface_of_cell[o][dir_lo];
      nb2_bf(f, 0) = nb2(f, 0) >= 0 ? -1 : bface_of_cell[b][dir_hi];
    }
  };
  second_cells(s.own_x, s.nb_x, s.nxf, 1, 0, s.own2_x, s.nb2_x, s.own2_bf_x,
               s.nb2_bf_x, 0, 1);
  second_cells(s.own_y, s.nb_y, s.nyf, 0, 1, s.own2_y, s.nb2_y, s.own2_bf_y,
               s.nb2_bf_y, 2, 3);

  for (int q = 0; q < kNumQuantities; ++q) {
    s.bval_zg_idx[q].resize(s.nbf, 1);
    s.bval_fixed[q] = Eigen::MatrixXd::Zero(s.nbf, 1);
    s.b_fixed_mask[q] = Eigen::ArrayXXd::Zero(s.nbf, 1);
    for (int i = 0; i < s.nbf; ++i) {
      BoundaryCondition c = bset.resolve(mesh.boundary[i], static_cast<Quantity>(q));
      if (c.kind == BCKind::FixedValue) {
        s.bval_zg_idx[q](i, 0) = -1;
        s.bval_fixed[q](i, 0) = c.value;
        s.b_fixed_mask[q](i, 0) = 1.0;
      } else {
        s.bval_zg_idx[q](i, 0) = mesh.boundary[i].cell;
      }
    }
  }

  s.east_face_of_cell = Eigen::MatrixXi::Constant(s.m, 1, -1);
  s.north_face_of_cell = Eigen::MatrixXi::Constant(s.m, 1, -1);
  for (int f = 0; f < s.nxf; ++f) s.east_face_of_cell(mesh.x_faces[f].own, 0) = f;
  for (int f = 0; f < s.nyf; ++f) s.north_face_of_cell(mesh.y_faces[f].own, 0) = f;
  return s;
}

SystemVars SystemVars::zero(ad::Tape& t, const SolverMaps& maps) {
  SystemVars s;
  s.diag = t.zeros(maps.m);
  s.off_own_nb = t.zeros(maps.nf);
  s.off_nb_own = t.zeros(maps.nf);
  s.rhs = t.zeros(maps.m);
  return s;
}

Var boundary_values(ad::Tape& t, const SolverMaps& maps, Quantity q, Var cells) {
  int qi = static_cast<int>(q);
  Var zg = ad::gather(cells, maps.bval_zg_idx[qi]);
  return zg + t.leaf(maps.bval_fixed[qi]);
}

FluxVars face_mass_flux(ad::Tape& t, const SolverMaps& maps, Var ux, Var uy) {
  // x-faces carry the x-velocity, y-faces the y-velocity
  Var ufx = 0.5 * (ad::gather(ux, maps.own_x) + ad::gather(ux, maps.nb_x));
  Var ufy = 0.5 * (ad::gather(uy, maps.own_y) + ad::gather(uy, maps.nb_y));
  Var internal = ad::vconcat({ufx * maps.mesh->dy, ufy * maps.mesh->dx});

  Var bvx = boundary_values(t, maps, Quantity::Ux, ux);
  Var bvy = boundary_values(t, maps, Quantity::Uy, uy);
  Var bound = bvx * t.leaf(maps.bnormal_x.cwiseProduct(maps.barea)) +
              bvy * t.leaf(maps.bnormal_y.cwiseProduct(maps.barea));
  return {internal, bound};
}

void assemble_convection_upwind(ad::Tape& t, const SolverMaps& maps,
                                const FluxVars& flux, Quantity q, ad::Var bq,
                                SystemVars& sys) {
  Var fpos = ad::pos_part(flux.internal);  // max(F,0)
  Var fneg = ad::neg_part(flux.internal);  // max(-F,0)
  sys.diag = sys.diag + ad::scatter_add(fpos, maps.own, maps.m) +
             ad::scatter_add(fneg, maps.nb, maps.m);
  sys.off_own_nb = sys.off_own_nb - fneg;
  sys.off_nb_own = sys.off_nb_own - fpos;

  // boundary: outflow upwinds the cell, inflow carries the boundary value
  Var bpos = ad::pos_part(flux.bound);
  Var bneg = ad::neg_part(flux.bound);
  sys.diag = sys.diag + ad::scatter_add(bpos, maps.bcell, maps.m);
  sys.rhs = sys.rhs + ad::scatter_add(bneg * bq, maps.bcell, maps.m);
  (void)q;
}

void assemble_diffusion(ad::Tape& t, const SolverMaps& maps, Var nu_face,
                        Var nu_bface, Quantity q, Var bq, SystemVars& sys) {
  if ((t.val(nu_face).array() <= 0.0).any())
    throw std::invalid_argument("assemble_diffusion: nonpositive viscosity");
  Var g = nu_face * t.leaf(maps.area) / maps.h;
  sys.diag = sys.diag + ad::scatter_add(g, maps.own, maps.m) +
             ad::scatter_add(g, maps.nb, maps.m);
  sys.off_own_nb = sys.off_own_nb - g;
  sys.off_nb_own = sys.off_nb_own - g;

  int qi = static_cast<int>(q);
  // fixed-value boundary faces: half-cell distance; zero-gradient: no flux
  Var gb = nu_bface * t.leaf((2.0 / maps.h) *
                             (maps.barea.array() * maps.b_fixed_mask[qi]).matrix());
  sys.diag = sys.diag + ad::scatter_add(gb, maps.bcell, maps.m);
  sys.rhs = sys.rhs + ad::scatter_add(gb * bq, maps.bcell, maps.m);
}

void add_time_term(ad::Tape& t, const SolverMaps& maps, double dt, Var u_old,
                   SystemVars& sys) {
  double a = maps.vol / dt;
  sys.diag = sys.diag + t.leaf(Eigen::MatrixXd::Constant(maps.m, 1, a));
  sys.rhs = sys.rhs + a * u_old;
}

void deferred_correction(ad::Tape& t, const SolverMaps& maps, Var flux,
                         Var u_face_dc, Var u_face_upwind, SystemVars& sys) {
  (void)t;
  Var d = flux * (u_face_dc - u_face_upwind);
  sys.rhs = sys.rhs - ad::scatter_add(d, maps.own, maps.m) +
            ad::scatter_add(d, maps.nb, maps.m);
}

Var green_gauss_grad(ad::Tape& t, const SolverMaps& maps, Var cells, Var bvals,
                     int axis) {
  Var grad = t.zeros(maps.m);
  if (axis == 0) {
    Var pf = 0.5 * (ad::gather(cells, maps.own_x) + ad::gather(cells, maps.nb_x)) *
             maps.mesh->dy;
    grad = grad + ad::scatter_add(pf, maps.own_x, maps.m) -
           ad::scatter_add(pf, maps.nb_x, maps.m);
    Var pb = bvals * t.leaf(maps.bnormal_x.cwiseProduct(maps.barea));
    grad = grad + ad::scatter_add(pb, maps.bcell, maps.m);
  } else {
    Var pf = 0.5 * (ad::gather(cells, maps.own_y) + ad::gather(cells, maps.nb_y)) *
             maps.mesh->dx;
    grad = grad + ad::scatter_add(pf, maps.own_y, maps.m) -
           ad::scatter_add(pf, maps.nb_y, maps.m);
    Var pb = bvals * t.leaf(maps.bnormal_y.cwiseProduct(maps.barea));
    grad = grad + ad::scatter_add(pb, maps.bcell, maps.m);
  }
  return grad / maps.vol;
}

Var apply_offdiag(ad::Tape& t, const SolverMaps& maps, const SystemVars& sys,
                  Var x) {
  (void)t;
  Var a = ad::scatter_add(sys.off_own_nb * ad::gather(x, maps.nb), maps.own, maps.m);
  Var b = ad::scatter_add(sys.off_nb_own * ad::gather(x, maps.own), maps.nb, maps.m);
  return a + b;
}

Var cell_divergence(ad::Tape& t, const SolverMaps& maps, const FluxVars& flux) {
  (void)t;
  return ad::scatter_add(flux.internal, maps.own, maps.m) -
         ad::scatter_add(flux.internal, maps.nb, maps.m) +
         ad::scatter_add(flux.bound, maps.bcell, maps.m);
}

}  // namespace dcflow
