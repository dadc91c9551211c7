#include "dcflow/linsolve.hpp"

#include <cmath>
#include <stdexcept>

namespace dcflow {

Eigen::VectorXd spmv(const SystemTopology& topo, const Eigen::VectorXd& diag,
                     const Eigen::VectorXd& off_own_nb,
                     const Eigen::VectorXd& off_nb_own, const Eigen::VectorXd& x) {
  Eigen::VectorXd y = diag.cwiseProduct(x);
  const int nf = topo.n_faces();
  for (int f = 0; f < nf; ++f) {
    y[topo.own[f]] += off_own_nb[f] * x[topo.nb[f]];
    y[topo.nb[f]] += off_nb_own[f] * x[topo.own[f]];
  }
  return y;
}

namespace {

Eigen::VectorXd residual(const SparseSystem& s, const Eigen::VectorXd& x) {
  return s.rhs - spmv(*s.topo, s.diag, s.off_own_nb, s.off_nb_own, x);
}

}  // namespace

Eigen::VectorXd solve_cg(const SparseSystem& sys, double tol_abs, int max_iter,
                         SolveReport* report, const Eigen::VectorXd* x0) {
  const int n = sys.topo->n_cells;
  Eigen::VectorXd x = x0 ? *x0 : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd inv_d = sys.diag.cwiseInverse();
  Eigen::VectorXd r = residual(sys, x);
  Eigen::VectorXd z = inv_d.cwiseProduct(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  int it = 0;
  double rinf = r.lpNorm<Eigen::Infinity>();
  while (rinf > tol_abs && it < max_iter) {
    Eigen::VectorXd ap = spmv(*sys.topo, sys.diag, sys.off_own_nb, sys.off_nb_own, p);
    double alpha = rz / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    rinf = r.lpNorm<Eigen::Infinity>();
    z = inv_d.cwiseProduct(r);
    double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
    ++it;
  }
  if (report) *report = SolveReport{it, rinf, rinf <= tol_abs};
  return x;
}

Eigen::VectorXd solve_bicgstab(const SparseSystem& sys, double tol_abs,
                               int max_iter, SolveReport* report,
                               const Eigen::VectorXd* x0) {
  const int n = sys.topo->n_cells;
  Eigen::VectorXd x = x0 ? *x0 : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd inv_d = sys.diag.cwiseInverse();
  Eigen::VectorXd r = residual(sys, x);
  Eigen::VectorXd r0 = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  int it = 0;
  double rinf = r.lpNorm<Eigen::Infinity>();
  while (rinf > tol_abs && it < max_iter) {
    double rho_new = r0.dot(r);
    if (std::abs(rho_new) < 1e-300) break;  // breakdown; restart from residual
    double beta = (rho_new / rho) * (alpha / omega);
    p = r + beta * (p - omega * v);
    Eigen::VectorXd ph = inv_d.cwiseProduct(p);
    v = spmv(*sys.topo, sys.diag, sys.off_own_nb, sys.off_nb_own, ph);
    alpha = rho_new / r0.dot(v);
    Eigen::VectorXd s = r - alpha * v;
    if (s.lpNorm<Eigen::Infinity>() <= tol_abs) {
      x += alpha * ph;
      r = s;
      rho = rho_new;
      ++it;
      rinf = r.lpNorm<Eigen::Infinity>();
      break;
    }
    Eigen::VectorXd sh = inv_d.cwiseProduct(s);
    Eigen::VectorXd tv = spmv(*sys.topo, sys.diag, sys.off_own_nb, sys.off_nb_own, sh);
    omega = tv.dot(s) / tv.dot(tv);
    x += alpha * ph + omega * sh;
    r = s - omega * tv;
    rho = rho_new;
    rinf = r.lpNorm<Eigen::Infinity>();
    ++it;
  }
  if (report) *report = SolveReport{it, rinf, rinf <= tol_abs};
  return x;
}

Eigen::MatrixXd dense_matrix(const SystemTopology& topo,
                             const Eigen::VectorXd& diag,
                             const Eigen::VectorXd& off_own_nb,
                             const Eigen::VectorXd& off_nb_own) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(topo.n_cells, topo.n_cells);
  for (int i = 0; i < topo.n_cells; ++i) a(i, i) = diag[i];
  for (int f = 0; f < topo.n_faces(); ++f) {
    a(topo.own[f], topo.nb[f]) += off_own_nb[f];
    a(topo.nb[f], topo.own[f]) += off_nb_own[f];
  }
  return a;
}

namespace ad_ops {

ad::Var linear_solve(const SystemTopology& topo, ad::Var diag, ad::Var off_own_nb,
                     ad::Var off_nb_own, ad::Var rhs, bool symmetric,
                     double tol_abs, int max_iter, SolveReport* report,
                     const Eigen::VectorXd* x0) {
  ad::Tape& t = *diag.tape;
  SparseSystem sys;
  sys.topo = &topo;
  sys.diag = t.val(diag).col(0);
  sys.off_own_nb = t.val(off_own_nb).col(0);
  sys.off_nb_own = t.val(off_nb_own).col(0);
  sys.rhs = t.val(rhs).col(0);
  SolveReport rep;
  Eigen::VectorXd x = symmetric ? solve_cg(sys, tol_abs, max_iter, &rep, x0)
                                : solve_bicgstab(sys, tol_abs, max_iter, &rep, x0);
  if (report) *report = rep;
  if (!rep.converged)
    throw std::runtime_error("linear_solve: no convergence after " +
                             std::to_string(rep.iterations) +
                             " iterations, residual " + std::to_string(rep.residual_inf));
  auto bw = [&topo, diag = diag.id, o1 = off_own_nb.id, o2 = off_nb_own.id,
             rhs = rhs.id, symmetric, tol_abs, max_iter,
             out = (int)t.size()](ad::Tape& t) {
    const Eigen::MatrixXd& xbar = t.adjoint(ad::Var{&t, out});
    const Eigen::MatrixXd& x = t.val(out);
    SparseSystem tr;  // transposed system: swap the off-diagonal roles
    SystemTopology const* topo_p = &topo;
    tr.topo = topo_p;
    tr.diag = t.val(diag).col(0);
    tr.off_own_nb = t.val(o2).col(0);
    tr.off_nb_own = t.val(o1).col(0);
    tr.rhs = xbar.col(0);
    SolveReport rep;
    Eigen::VectorXd lam = symmetric ? solve_cg(tr, tol_abs, max_iter, &rep)
                                    : solve_bicgstab(tr, tol_abs, max_iter, &rep);
    if (!rep.converged)
      throw std::runtime_error("linear_solve adjoint: transpose solve stalled");
    t.accumulate(rhs, lam);
    t.accumulate(diag, -lam.cwiseProduct(x.col(0)));
    const int nf = topo_p->n_faces();
    Eigen::MatrixXd g1(nf, 1), g2(nf, 1);
    for (int f = 0; f < nf; ++f) {
      g1(f, 0) = -lam[topo_p->own[f]] * x(topo_p->nb[f], 0);
      g2(f, 0) = -lam[topo_p->nb[f]] * x(topo_p->own[f], 0);
    }
    t.accumulate(o1, g1);
    t.accumulate(o2, g2);
  };
  return t.push(Eigen::MatrixXd(x), std::move(bw));
}

}  // namespace ad_ops
}  // namespace dcflow
