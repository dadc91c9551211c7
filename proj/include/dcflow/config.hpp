#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcflow/training.hpp"

namespace dcflow {

/// Thrown for malformed or inconsistent run configuration (CLI exit 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Thrown for file-system and serialization failures (CLI exit 3).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One declarative file drives a whole run: case geometry, physics, meshes,
/// time stepping, numerics, network architecture and training schedule.
struct RunConfig {
  double lx = 16.0, ly = 8.0;
  ObstacleSpec obstacle;

  double nu = 0.01;
  double inlet_velocity = 1.0;
  bool turbulence = false;

  int fine_nx = 256, fine_ny = 128;
  int reduction_factor = 4;

  double dt = 0.05;
  int steps = 200;
  int discard = 50;

  std::string scheme = "upwind";
  int n_correctors = 2;
  double tol_pressure = 1e-10;
  double tol_momentum = 1e-10;
  bool limiter = true;
  double limiter_lambda = 0.3;
  double p_ref = 0.0;

  MlpArch arch;
  TrainConfig training;

  std::uint64_t seed = 0;
  std::string data_dir = "data";
  std::string out_dir = "out";
  int horizon = 100;
  double profile_y = 4.0;  // y = const line for profile extraction

  nlohmann::json raw;  // fully-merged document, echoed into manifests

  PimpleConfig numerics() const;
  BoundarySet boundaries() const;
  MeshPair meshes() const;
  double cfl_fine() const { return inlet_velocity * dt / (lx / fine_nx); }
};

/// Parse + env-override + validate. Unknown keys are rejected (fail-fast on
/// typos). `warnings` collects non-fatal notices such as CFL > 1.
RunConfig load_config(const std::string& path,
                      std::vector<std::string>* warnings = nullptr);
RunConfig config_from_json(nlohmann::json doc,
                           std::vector<std::string>* warnings = nullptr);

/// Applies DCFLOW_-prefixed environment variables onto the document;
/// double underscores nest: DCFLOW_TIME__DT=0.01 sets time.dt. Values are
/// parsed as JSON scalars when possible, otherwise taken as strings.
void apply_env_overrides(nlohmann::json& doc);

}  // namespace dcflow
