#include "dcflow/mesh.hpp"

#include <cmath>
#include <stdexcept>

namespace dcflow {

namespace {

constexpr double kAlignTol = 1e-9;

/// Obstacle extent in cell indices; throws if edges do not coincide with
/// cell boundaries.
struct ObstacleCells {
  int ix0, ix1, iy0, iy1;  // inclusive cell ranges
};

ObstacleCells obstacle_cells(const ObstacleSpec& o, double dx, double dy) {
  auto snap = [](double v, double h, const char* what) {
    double q = v / h;
    double r = std::round(q);
    if (std::abs(q - r) > kAlignTol)
      throw std::invalid_argument(std::string("obstacle edge ") + what +
                                  " does not align with the grid");
    return static_cast<int>(r);
  };
  ObstacleCells c;
  c.ix0 = snap(o.x0, dx, "x0");
  c.ix1 = snap(o.x1, dx, "x1") - 1;
  c.iy0 = snap(o.y0, dy, "y0");
  c.iy1 = snap(o.y1, dy, "y1") - 1;
  if (c.ix1 < c.ix0 || c.iy1 < c.iy0)
    throw std::invalid_argument("obstacle has non-positive extent");
  return c;
}

}  // namespace

StructuredMesh build_mesh(int nx, int ny, double lx, double ly,
                          const ObstacleSpec& obstacle) {
  if (nx < 4 || ny < 4) throw std::invalid_argument("mesh: nx, ny must be >= 4");
  if (lx <= 0 || ly <= 0) throw std::invalid_argument("mesh: domain size must be positive");
  StructuredMesh m;
  m.nx = nx;
  m.ny = ny;
  m.lx = lx;
  m.ly = ly;
  m.dx = lx / nx;
  m.dy = ly / ny;
  if (std::abs(m.dx - m.dy) > kAlignTol * std::max(m.dx, m.dy))
    throw std::invalid_argument("mesh: cells must be square (dx == dy)");
  m.obstacle = obstacle;

  std::vector<bool> masked(static_cast<std::size_t>(nx) * ny, false);
  if (obstacle.present) {
    if (obstacle.x0 < 0 || obstacle.x1 > lx || obstacle.y0 < 0 || obstacle.y1 > ly)
      throw std::invalid_argument("obstacle outside domain");
    ObstacleCells c = obstacle_cells(obstacle, m.dx, m.dy);
    if (c.ix0 <= 0 || c.ix1 >= nx - 1 || c.iy0 <= 0 || c.iy1 >= ny - 1)
      throw std::invalid_argument("obstacle touches the domain boundary");
    for (int iy = c.iy0; iy <= c.iy1; ++iy)
      for (int ix = c.ix0; ix <= c.ix1; ++ix)
        masked[static_cast<std::size_t>(iy) * nx + ix] = true;
  }

  m.cell_id.assign(static_cast<std::size_t>(nx) * ny, -1);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      std::size_t k = static_cast<std::size_t>(iy) * nx + ix;
      if (!masked[k]) {
        m.cell_id[k] = m.n_cells++;
        m.cell_ix.push_back(ix);
        m.cell_iy.push_back(iy);
      }
    }

  // Internal faces between pairs of active cells; faces touching a masked
  // cell become obstacle-boundary faces.
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix + 1 < nx; ++ix) {
      int a = m.cell_at(ix, iy), b = m.cell_at(ix + 1, iy);
      if (a >= 0 && b >= 0) m.x_faces.push_back({a, b});
    }
  for (int iy = 0; iy + 1 < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      int a = m.cell_at(ix, iy), b = m.cell_at(ix, iy + 1);
      if (a >= 0 && b >= 0) m.y_faces.push_back({a, b});
    }

  for (int c = 0; c < m.n_cells; ++c) {
    int ix = m.cell_ix[c], iy = m.cell_iy[c];
    auto add = [&](int jx, int jy, int nxn, int nyn, BoundaryTag edge_tag) {
      if (jx < 0 || jx >= nx || jy < 0 || jy >= ny)
        m.boundary.push_back({c, edge_tag, nxn, nyn});
      else if (m.is_masked(jx, jy))
        m.boundary.push_back({c, BoundaryTag::Obstacle, nxn, nyn});
    };
    add(ix - 1, iy, -1, 0, BoundaryTag::Inlet);
    add(ix + 1, iy, +1, 0, BoundaryTag::Outlet);
    add(ix, iy - 1, 0, -1, BoundaryTag::Bottom);
    add(ix, iy + 1, 0, +1, BoundaryTag::Top);
  }

  m.topo.n_cells = m.n_cells;
  for (const auto& f : m.x_faces) {
    m.topo.own.push_back(f.own);
    m.topo.nb.push_back(f.nb);
  }
  for (const auto& f : m.y_faces) {
    m.topo.own.push_back(f.own);
    m.topo.nb.push_back(f.nb);
  }
  return m;
}

MeshPair build_pair(int coarse_nx, int coarse_ny, int reduction_factor,
                    double lx, double ly, const ObstacleSpec& obstacle) {
  if (reduction_factor < 2)
    throw std::invalid_argument("reduction factor must be >= 2");
  MeshPair p;
  p.reduction_factor = reduction_factor;
  // Building the coarse mesh first enforces that the obstacle aligns with
  // coarse-cell boundaries, so no coarse cell straddles the solid region.
  p.coarse = build_mesh(coarse_nx, coarse_ny, lx, ly, obstacle);
  p.fine = build_mesh(coarse_nx * reduction_factor, coarse_ny * reduction_factor,
                      lx, ly, obstacle);
  p.fine_in_coarse.resize(p.coarse.n_cells);
  const int fr = reduction_factor;
  for (int c = 0; c < p.coarse.n_cells; ++c) {
    int cx = p.coarse.cell_ix[c], cy = p.coarse.cell_iy[c];
    auto& list = p.fine_in_coarse[c];
    list.reserve(static_cast<std::size_t>(fr) * fr);
    for (int jy = cy * fr; jy < (cy + 1) * fr; ++jy)
      for (int jx = cx * fr; jx < (cx + 1) * fr; ++jx) {
        int fc = p.fine.cell_at(jx, jy);
        if (fc < 0)
          throw std::logic_error("mesh pair: fine cell masked inside active coarse cell");
        list.push_back(fc);
      }
  }
  return p;
}

Eigen::ArrayXd project(const Eigen::ArrayXd& fine_values, const MeshPair& pair) {
  if (fine_values.size() != pair.fine.n_cells)
    throw std::invalid_argument("project: field does not live on the fine mesh");
  Eigen::ArrayXd out(pair.coarse.n_cells);
  const double inv_n = 1.0 / (static_cast<double>(pair.reduction_factor) *
                              pair.reduction_factor);
  for (int c = 0; c < pair.coarse.n_cells; ++c) {
    double s = 0.0;
    for (int fc : pair.fine_in_coarse[c]) s += fine_values[fc];
    out[c] = s * inv_n;
  }
  return out;
}

}  // namespace dcflow
