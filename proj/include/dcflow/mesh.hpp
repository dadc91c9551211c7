#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dcflow/linsolve.hpp"

namespace dcflow {

enum class BoundaryTag { Inlet, Outlet, Bottom, Top, Obstacle };
constexpr int kNumBoundaryTags = 5;

/// Axis-aligned rectangular obstacle, in domain coordinates. Must coincide
/// with cell boundaries of every mesh it is placed on.
struct ObstacleSpec {
  bool present = false;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

/// Uniform structured 2D mesh with obstacle cells masked out of the unknown
/// set. Cells are numbered row-major over the full grid, skipping masked
/// cells; this ordering is canonical for files and linear systems.
/// Immutable after construction.
struct StructuredMesh {
  int nx = 0, ny = 0;
  double dx = 0, dy = 0;
  double lx = 0, ly = 0;
  ObstacleSpec obstacle;

  std::vector<int> cell_id;       // nx*ny entries, -1 for masked cells
  std::vector<int> cell_ix, cell_iy;  // grid coordinates per active cell
  int n_cells = 0;

  struct Face {
    int own, nb;  // owner is the lower-index (west/south) cell
  };
  std::vector<Face> x_faces;  // vertical faces, normal +x
  std::vector<Face> y_faces;  // horizontal faces, normal +y

  struct BoundaryFace {
    int cell;
    BoundaryTag tag;
    int normal_x, normal_y;  // outward unit normal, one of (+-1,0),(0,+-1)
  };
  std::vector<BoundaryFace> boundary;

  /// Combined internal-face topology (x-faces first, then y-faces) for the
  /// 5-point linear systems.
  SystemTopology topo;

  int n_x_faces() const { return static_cast<int>(x_faces.size()); }
  int n_y_faces() const { return static_cast<int>(y_faces.size()); }
  int n_faces() const { return n_x_faces() + n_y_faces(); }
  int n_boundary() const { return static_cast<int>(boundary.size()); }
  double cell_area() const { return dx * dy; }

  /// Active-cell index at grid position, -1 if out of range or masked.
  int cell_at(int ix, int iy) const {
    if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return -1;
    return cell_id[static_cast<std::size_t>(iy) * nx + ix];
  }
  bool is_masked(int ix, int iy) const {
    return ix >= 0 && ix < nx && iy >= 0 && iy < ny &&
           cell_id[static_cast<std::size_t>(iy) * nx + ix] < 0;
  }
  double cell_cx(int c) const { return (cell_ix[c] + 0.5) * dx; }
  double cell_cy(int c) const { return (cell_iy[c] + 0.5) * dy; }
};

StructuredMesh build_mesh(int nx, int ny, double lx, double ly,
                          const ObstacleSpec& obstacle = {});

/// Coarse/fine pairing with an isotropic reduction factor.
struct MeshPair {
  StructuredMesh fine;
  StructuredMesh coarse;
  int reduction_factor = 0;
  /// fine cell ids contained in each coarse cell, F_r^2 per coarse cell
  std::vector<std::vector<int>> fine_in_coarse;
};

MeshPair build_pair(int coarse_nx, int coarse_ny, int reduction_factor,
                    double lx, double ly, const ObstacleSpec& obstacle = {});

/// Conservative restriction: per-coarse-cell arithmetic mean of the contained
/// fine values. Preserves the area-weighted integral exactly.
Eigen::ArrayXd project(const Eigen::ArrayXd& fine_values, const MeshPair& pair);

}  // namespace dcflow
