/// @file test_linsolve.cpp
/// @brief Sparse 5-point solvers against a dense Eigen oracle, and the
/// adjoint of the black-box linear-solve primitive against finite
/// differences.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "dcflow/linsolve.hpp"

using namespace dcflow;

namespace {

/// Small structured topology: a 1D chain of n cells (n-1 faces), which is a
/// valid degenerate 5-point pattern.
SystemTopology chain(int n) {
  SystemTopology t;
  t.n_cells = n;
  for (int i = 0; i + 1 < n; ++i) {
    t.own.push_back(i);
    t.nb.push_back(i + 1);
  }
  return t;
}

SparseSystem random_system(const SystemTopology& topo, std::uint64_t seed,
                           bool symmetric) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.1, 1.0);
  SparseSystem s;
  s.topo = &topo;
  int n = topo.n_cells, nf = topo.n_faces();
  s.off_own_nb.resize(nf);
  s.off_nb_own.resize(nf);
  for (int f = 0; f < nf; ++f) {
    s.off_own_nb(f) = -d(rng);
    s.off_nb_own(f) = symmetric ? s.off_own_nb(f) : -d(rng);
  }
  // strictly diagonally dominant, hence nonsingular (SPD when symmetric)
  s.diag = Eigen::VectorXd::Zero(n);
  for (int f = 0; f < nf; ++f) {
    s.diag(topo.own[f]) += std::abs(s.off_own_nb(f)) + std::abs(s.off_nb_own(f));
    s.diag(topo.nb[f]) += std::abs(s.off_own_nb(f)) + std::abs(s.off_nb_own(f));
  }
  s.diag.array() += 0.5;
  s.rhs.resize(n);
  for (int i = 0; i < n; ++i) s.rhs(i) = d(rng) - 0.5;
  return s;
}

}  // namespace

TEST_CASE("spmv matches the dense assembly") {
  SystemTopology topo = chain(7);
  SparseSystem s = random_system(topo, 1, false);
  Eigen::VectorXd x = Eigen::VectorXd::Random(7);
  Eigen::MatrixXd a = dense_matrix(topo, s.diag, s.off_own_nb, s.off_nb_own);
  Eigen::VectorXd y = spmv(topo, s.diag, s.off_own_nb, s.off_nb_own, x);
  CHECK((y - a * x).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("CG solves random SPD systems to the dense-oracle solution") {
  for (std::uint64_t seed : {2, 3, 4}) {
    SystemTopology topo = chain(12);
    SparseSystem s = random_system(topo, seed, true);
    SolveReport rep;
    Eigen::VectorXd x = solve_cg(s, 1e-12, 500, &rep);
    CHECK(rep.converged);
    Eigen::MatrixXd a = dense_matrix(topo, s.diag, s.off_own_nb, s.off_nb_own);
    Eigen::VectorXd oracle = a.fullPivLu().solve(s.rhs);
    CHECK((x - oracle).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("BiCGStab solves random nonsymmetric systems") {
  for (std::uint64_t seed : {5, 6, 7}) {
    SystemTopology topo = chain(12);
    SparseSystem s = random_system(topo, seed, false);
    SolveReport rep;
    Eigen::VectorXd x = solve_bicgstab(s, 1e-12, 500, &rep);
    CHECK(rep.converged);
    Eigen::MatrixXd a = dense_matrix(topo, s.diag, s.off_own_nb, s.off_nb_own);
    Eigen::VectorXd oracle = a.fullPivLu().solve(s.rhs);
    CHECK((x - oracle).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("stopping criterion is the absolute infinity norm of the residual") {
  SystemTopology topo = chain(10);
  SparseSystem s = random_system(topo, 8, true);
  SolveReport rep;
  Eigen::VectorXd x = solve_cg(s, 1e-10, 500, &rep);
  Eigen::VectorXd r =
      s.rhs - spmv(topo, s.diag, s.off_own_nb, s.off_nb_own, x);
  CHECK(r.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(rep.residual_inf <= 1e-10);
}

TEST_CASE("linear-solve primitive: adjoint matches finite differences") {
  SystemTopology topo = chain(6);
  SparseSystem s0 = random_system(topo, 9, false);

  auto loss = [&](const Eigen::VectorXd& diag, const Eigen::VectorXd& oon,
                  const Eigen::VectorXd& ono, const Eigen::VectorXd& rhs) {
    ad::Tape t;
    t.grad_enabled = false;
    ad::Var x = ad_ops::linear_solve(topo, t.leaf(diag), t.leaf(oon),
                                     t.leaf(ono), t.leaf(rhs), false, 1e-13, 500);
    return t.val(ad::sum(ad::square(x)))(0, 0);
  };

  ad::Tape t;
  ad::Var diag = t.leaf(s0.diag), oon = t.leaf(s0.off_own_nb),
          ono = t.leaf(s0.off_nb_own), rhs = t.leaf(s0.rhs);
  ad::Var x = ad_ops::linear_solve(topo, diag, oon, ono, rhs, false, 1e-13, 500);
  t.backward(ad::sum(ad::square(x)));

  double h = 1e-6;
  auto fd_check = [&](ad::Var v, Eigen::VectorXd base, int which) {
    for (int i = 0; i < base.size(); ++i) {
      auto eval = [&](double delta) {
        Eigen::VectorXd p = base;
        p(i) += delta;
        switch (which) {
          case 0: return loss(p, s0.off_own_nb, s0.off_nb_own, s0.rhs);
          case 1: return loss(s0.diag, p, s0.off_nb_own, s0.rhs);
          case 2: return loss(s0.diag, s0.off_own_nb, p, s0.rhs);
          default: return loss(s0.diag, s0.off_own_nb, s0.off_nb_own, p);
        }
      };
      double fd = (eval(h) - eval(-h)) / (2 * h);
      CHECK(t.adjoint(v)(i, 0) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
  };
  fd_check(diag, s0.diag, 0);
  fd_check(oon, s0.off_own_nb, 1);
  fd_check(ono, s0.off_nb_own, 2);
  fd_check(rhs, s0.rhs, 3);
}

TEST_CASE("non-convergence throws instead of returning garbage") {
  SystemTopology topo = chain(12);
  SparseSystem s = random_system(topo, 10, true);
  ad::Tape t;
  CHECK_THROWS(ad_ops::linear_solve(topo, t.leaf(s.diag), t.leaf(s.off_own_nb),
                                    t.leaf(s.off_nb_own), t.leaf(s.rhs), true,
                                    1e-16, 1));
}
