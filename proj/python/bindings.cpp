/// Python bindings for the main solver operations: mesh construction,
/// time stepping with classical or learned convection schemes, fine-to-coarse
/// projection, the rollout error metric and parameter-file handling.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dcflow/config.hpp"
#include "dcflow/snapshot_io.hpp"

namespace py = pybind11;
using namespace dcflow;

namespace {

/// Owns everything a rollout needs so Python only juggles one object.
struct Simulator {
  StructuredMesh mesh;
  SolverContext ctx;
  MlpParams net;
  ConstraintTransform ct = ConstraintTransform::standard();
  bool has_net = false;

  Simulator(int nx, int ny, double lx, double ly, py::object obstacle,
            double dt, double nu, const std::string& scheme,
            double inlet_velocity, bool turbulence, int n_correctors) {
    ObstacleSpec obst;
    if (!obstacle.is_none()) {
      auto t = obstacle.cast<std::tuple<double, double, double, double>>();
      obst = {true, std::get<0>(t), std::get<1>(t), std::get<2>(t),
              std::get<3>(t)};
    }
    mesh = build_mesh(nx, ny, lx, ly, obst);
    PimpleConfig cfg;
    cfg.dt = dt;
    cfg.nu = nu;
    cfg.scheme = scheme_from_name(scheme);
    cfg.turbulence = turbulence;
    cfg.n_correctors = n_correctors;
    ctx = SolverContext::build(mesh, BoundarySet::channel(inlet_velocity), cfg);
  }

  void load_network(const std::string& path) {
    net = MlpParams::load(path);
    has_net = true;
    ctx.net = &net;
    ctx.ct = &ct;
  }

  State initial_state(double ux, double uy) const {
    return State::uniform(mesh, ux, uy);
  }

  std::pair<State, double> step_once(const State& s) {
    StepDiagnostics diag;
    State out = step(ctx, s, &diag);
    return {out, diag.max_divergence};
  }

  std::vector<State> run(const State& s0, int n_steps) {
    return rollout(ctx, s0, n_steps);
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Differentiable finite-volume flow solver with a learned "
            "convection scheme";

  py::class_<State>(m, "State")
      .def_readwrite("ux", &State::ux)
      .def_readwrite("uy", &State::uy)
      .def_readwrite("p", &State::p)
      .def_readwrite("k", &State::k)
      .def_readwrite("omega", &State::w)
      .def("finite", &State::finite);

  py::class_<StructuredMesh>(m, "Mesh")
      .def_readonly("nx", &StructuredMesh::nx)
      .def_readonly("ny", &StructuredMesh::ny)
      .def_readonly("n_cells", &StructuredMesh::n_cells)
      .def_readonly("dx", &StructuredMesh::dx)
      .def_readonly("dy", &StructuredMesh::dy)
      .def("cell_at", &StructuredMesh::cell_at, py::arg("ix"), py::arg("iy"));

  py::class_<MeshPair>(m, "MeshPair")
      .def_readonly("coarse", &MeshPair::coarse)
      .def_readonly("fine", &MeshPair::fine)
      .def_readonly("reduction_factor", &MeshPair::reduction_factor);

  py::class_<Simulator>(m, "Simulator")
      .def(py::init<int, int, double, double, py::object, double, double,
                    const std::string&, double, bool, int>(),
           py::arg("nx"), py::arg("ny"), py::arg("lx"), py::arg("ly"),
           py::arg("obstacle") = py::none(), py::arg("dt") = 0.05,
           py::arg("nu") = 0.01, py::arg("scheme") = "upwind",
           py::arg("inlet_velocity") = 1.0, py::arg("turbulence") = false,
           py::arg("n_correctors") = 2)
      .def_readonly("mesh", &Simulator::mesh)
      .def("load_network", &Simulator::load_network, py::arg("path"))
      .def("initial_state", &Simulator::initial_state, py::arg("ux") = 1.0,
           py::arg("uy") = 0.0)
      .def("step", &Simulator::step_once, py::arg("state"),
           "One PIMPLE step; returns (new_state, max_divergence).")
      .def("rollout", &Simulator::run, py::arg("state"), py::arg("n_steps"),
           "n_steps plain steps; returns the trajectory including the start.");

  py::class_<ObstacleSpec>(m, "ObstacleSpec")
      .def(py::init([](double x0, double y0, double x1, double y1) {
             return ObstacleSpec{true, x0, y0, x1, y1};
           }),
           py::arg("x0"), py::arg("y0"), py::arg("x1"), py::arg("y1"));

  m.def("build_pair", &build_pair, py::arg("coarse_nx"), py::arg("coarse_ny"),
        py::arg("factor"), py::arg("lx"), py::arg("ly"),
        py::arg("obstacle") = ObstacleSpec{},
        "Coarse/fine mesh pair with an isotropic reduction factor.");
  m.def(
      "project",
      [](const Eigen::ArrayXd& fine_values, const MeshPair& pair) {
        return project(fine_values, pair);
      },
      py::arg("fine_values"), py::arg("pair"),
      "Conservative restriction of a fine field by per-coarse-cell means.");
  m.def("psi_loss", &psi_loss, py::arg("pred"), py::arg("truth"),
        "Accumulated L1 percentage error of a rollout against a reference.");

  m.def(
      "network_info",
      [](const std::string& path) {
        double best = -1.0;
        MlpParams p = MlpParams::load(path, &best);
        return py::dict(py::arg("param_count") = p.count(),
                        py::arg("best_loss") = best,
                        py::arg("encoder") = p.arch.encoder,
                        py::arg("generator") = p.arch.generator);
      },
      py::arg("path"), "Header summary of a saved parameter file.");

  m.def(
      "read_snapshot",
      [](const std::string& path, const StructuredMesh& mesh) {
        double time = 0.0;
        State s = read_snapshot(path, mesh, &time);
        return py::make_tuple(s, time);
      },
      py::arg("path"), py::arg("mesh"));
  m.def("write_snapshot", &write_snapshot, py::arg("path"), py::arg("mesh"),
        py::arg("state"), py::arg("time"), py::arg("ascii") = false);
}
