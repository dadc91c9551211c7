#include "dcflow/neuralscheme.hpp"

#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace dcflow {

namespace {

std::vector<int> layer_sizes(const MlpArch& arch, bool encoder) {
  std::vector<int> s;
  if (encoder) {
    s.push_back(arch.inputs());
    s.insert(s.end(), arch.encoder.begin(), arch.encoder.end());
  } else {
    s.push_back(arch.latent());
    s.insert(s.end(), arch.generator.begin(), arch.generator.end());
    s.push_back(arch.raw_outputs());
  }
  return s;
}

void init_stack(std::vector<Eigen::MatrixXd>& w, std::vector<Eigen::MatrixXd>& b,
                const std::vector<int>& sizes, std::mt19937_64& rng,
                bool zero_last) {
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    int fan_in = sizes[l], fan_out = sizes[l + 1];
    Eigen::MatrixXd wl(fan_out, fan_in);
    if (zero_last && l + 2 == sizes.size()) {
      wl.setZero();
    } else {
      double limit = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (Eigen::Index j = 0; j < wl.cols(); ++j)
        for (Eigen::Index i = 0; i < wl.rows(); ++i) wl(i, j) = dist(rng);
    }
    w.push_back(std::move(wl));
    b.push_back(Eigen::MatrixXd::Zero(fan_out, 1));
  }
}

template <typename Fn>
void for_each_block(const MlpParams& p, Fn&& fn) {
  auto stack = [&](const std::vector<Eigen::MatrixXd>& w,
                   const std::vector<Eigen::MatrixXd>& b) {
    for (std::size_t l = 0; l < w.size(); ++l) {
      fn(w[l]);
      fn(b[l]);
    }
  };
  stack(p.w_ex, p.b_ex);
  stack(p.w_ey, p.b_ey);
  stack(p.w_g, p.b_g);
}

template <typename Fn>
void for_each_block(MlpParams& p, Fn&& fn) {
  auto stack = [&](std::vector<Eigen::MatrixXd>& w,
                   std::vector<Eigen::MatrixXd>& b) {
    for (std::size_t l = 0; l < w.size(); ++l) {
      fn(w[l]);
      fn(b[l]);
    }
  };
  stack(p.w_ex, p.b_ex);
  stack(p.w_ey, p.b_ey);
  stack(p.w_g, p.b_g);
}

ad::Var mlp_forward(const std::vector<ad::Var>& w, const std::vector<ad::Var>& b,
                    ad::Var x) {
  ad::Tape& t = *x.tape;
  if (!t.grad_enabled) {
    // inference fast path: single-precision matmuls and packet-math tanh,
    // matching the usual NN-framework numerics; the exactness-critical affine
    // constraint transform downstream stays in double
    Eigen::MatrixXf xf = t.val(x).cast<float>(), yf;
    for (std::size_t l = 0; l < w.size(); ++l) {
      Eigen::MatrixXf wf = t.val(w[l]).cast<float>();
      Eigen::VectorXf bf = t.val(b[l]).cast<float>();
      yf.resize(wf.rows(), xf.cols());
      yf.noalias() = wf * xf;
      yf.colwise() += bf;
      yf.array() = yf.array().tanh();
      xf.swap(yf);
    }
    return t.leaf(xf.cast<double>());
  }
  for (std::size_t l = 0; l < w.size(); ++l)
    x = tanh_(add_cols(matmul(w[l], x), b[l]));
  return x;
}

ad::Var abs_(ad::Tape& t, ad::Var a) {
  Eigen::ArrayXXd nonneg = (t.val(a).array() >= 0.0).cast<double>();
  return select(nonneg, a, -a);
}

}  // namespace

MlpParams MlpParams::init(const MlpArch& arch, std::uint64_t seed) {
  MlpParams p;
  p.arch = arch;
  std::mt19937_64 rng(seed);
  init_stack(p.w_ex, p.b_ex, layer_sizes(arch, true), rng, false);
  init_stack(p.w_ey, p.b_ey, layer_sizes(arch, true), rng, false);
  init_stack(p.w_g, p.b_g, layer_sizes(arch, false), rng, true);
  return p;
}

int MlpParams::count() const {
  int n = 0;
  for_each_block(*this, [&](const Eigen::MatrixXd& m) { n += (int)m.size(); });
  return n;
}

Eigen::VectorXd MlpParams::flatten() const {
  Eigen::VectorXd theta(count());
  Eigen::Index at = 0;
  for_each_block(*this, [&](const Eigen::MatrixXd& m) {
    theta.segment(at, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    at += m.size();
  });
  return theta;
}

void MlpParams::unflatten(const Eigen::VectorXd& theta) {
  if (theta.size() != count())
    throw std::invalid_argument("parameter vector length mismatch");
  Eigen::Index at = 0;
  for_each_block(*this, [&](Eigen::MatrixXd& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = theta.segment(at, m.size());
    at += m.size();
  });
}

bool MlpParams::finite() const {
  bool ok = true;
  for_each_block(*this, [&](const Eigen::MatrixXd& m) { ok = ok && m.allFinite(); });
  return ok;
}

static constexpr char kNetMagic[8] = {'D', 'C', 'N', 'E', 'T', '0', '0', '1'};

void MlpParams::save(const std::string& path, double best_loss) const {
  nlohmann::json desc;
  desc["arch"] = {{"stencil", arch.stencil},
                  {"channels", arch.channels},
                  {"encoder", arch.encoder},
                  {"generator", arch.generator}};
  desc["joint_emission"] = true;
  desc["ordering"] = "rowmajor-v1";
  desc["param_count"] = count();
  if (best_loss >= 0) desc["best_loss"] = best_loss;
  std::string header = desc.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(kNetMagic, 8);
  std::uint32_t hlen = (std::uint32_t)header.size();
  out.write(reinterpret_cast<const char*>(&hlen), 4);
  out.write(header.data(), hlen);
  Eigen::VectorXd theta = flatten();
  out.write(reinterpret_cast<const char*>(theta.data()),
            (std::streamsize)theta.size() * 8);
  if (!out) throw std::runtime_error("write failed: " + path);
}

MlpParams MlpParams::load(const std::string& path, double* best_loss) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || !std::equal(magic, magic + 8, kNetMagic))
    throw std::runtime_error(path + ": not a network parameter file");
  std::uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 4);
  std::string header(hlen, '\0');
  in.read(header.data(), hlen);
  if (!in) throw std::runtime_error(path + ": truncated header");
  nlohmann::json desc = nlohmann::json::parse(header);

  MlpArch arch;
  arch.stencil = desc["arch"]["stencil"].get<int>();
  arch.channels = desc["arch"]["channels"].get<int>();
  arch.encoder = desc["arch"]["encoder"].get<std::vector<int>>();
  arch.generator = desc["arch"]["generator"].get<std::vector<int>>();
  if (desc.value("ordering", "") != "rowmajor-v1")
    throw std::runtime_error(path + ": unknown parameter ordering");

  MlpParams p = MlpParams::init(arch, 0);
  Eigen::VectorXd theta(p.count());
  if (desc["param_count"].get<int>() != p.count())
    throw std::runtime_error(path + ": parameter count mismatch");
  in.read(reinterpret_cast<char*>(theta.data()), (std::streamsize)theta.size() * 8);
  if (!in) throw std::runtime_error(path + ": truncated parameter block");
  p.unflatten(theta);
  if (best_loss) *best_loss = desc.value("best_loss", -1.0);
  return p;
}

ConstraintTransform ConstraintTransform::standard(int stencil) {
  ConstraintTransform ct;
  int n = stencil;
  ct.a = Eigen::MatrixXd::Zero(n, n - 1);
  for (int i = 0; i < n - 1; ++i) {
    ct.a(i, i) = 1.0;
    ct.a(n - 1, i) = -1.0;
  }
  ct.b_vert = Eigen::MatrixXd::Zero(n, 1);
  ct.b_vert(5, 0) = 0.5;  // owner slot of a vertical-face patch
  ct.b_vert(6, 0) = 0.5;  // neighbour slot
  ct.b_horz = Eigen::MatrixXd::Zero(n, 1);
  ct.b_horz(4, 0) = 0.5;
  ct.b_horz(7, 0) = 0.5;
  return ct;
}

PatchMaps PatchMaps::build(const StructuredMesh& mesh) {
  PatchMaps pm;
  int nxf = mesh.n_x_faces(), nyf = mesh.n_y_faces();
  pm.stencil_x.setConstant(12, nxf, -1);
  pm.stencil_y.setConstant(12, nyf, -1);
  pm.bmask_x.setZero(nxf, 1);
  pm.bmask_y.setZero(nyf, 1);

  for (int f = 0; f < nxf; ++f) {
    int c = mesh.x_faces[f].own;
    int ix = mesh.cell_ix[c], iy = mesh.cell_iy[c];
    bool missing = false;
    for (int ry = -1; ry <= 1; ++ry)
      for (int cx = -1; cx <= 2; ++cx) {
        int id = mesh.cell_at(ix + cx, iy + ry);
        pm.stencil_x((ry + 1) * 4 + (cx + 1), f) = id;
        missing = missing || id < 0;
      }
    pm.bmask_x(f, 0) = missing ? 1.0 : 0.0;
  }
  for (int f = 0; f < nyf; ++f) {
    int c = mesh.y_faces[f].own;
    int ix = mesh.cell_ix[c], iy = mesh.cell_iy[c];
    bool missing = false;
    for (int ry = -1; ry <= 2; ++ry)
      for (int cx = -1; cx <= 1; ++cx) {
        int id = mesh.cell_at(ix + cx, iy + ry);
        pm.stencil_y((ry + 1) * 3 + (cx + 1), f) = id;
        missing = missing || id < 0;
      }
    pm.bmask_y(f, 0) = missing ? 1.0 : 0.0;
  }
  return pm;
}

NetVars lift_params(ad::Tape& t, const MlpParams& p, const ConstraintTransform& ct) {
  NetVars nv;
  nv.params = &p;
  auto lift = [&](const std::vector<Eigen::MatrixXd>& src, std::vector<ad::Var>& dst) {
    for (const auto& m : src) dst.push_back(t.leaf(m));
  };
  lift(p.w_ex, nv.w_ex);
  lift(p.b_ex, nv.b_ex);
  lift(p.w_ey, nv.w_ey);
  lift(p.b_ey, nv.b_ey);
  lift(p.w_g, nv.w_g);
  lift(p.b_g, nv.b_g);
  nv.a_basis = t.leaf(ct.a);
  nv.b_vert = t.leaf(ct.b_vert);
  nv.b_horz = t.leaf(ct.b_horz);
  return nv;
}

Eigen::VectorXd read_param_grad(const ad::Tape& t, const NetVars& nv) {
  Eigen::VectorXd g(nv.params->count());
  Eigen::Index at = 0;
  auto pull = [&](const std::vector<ad::Var>& w, const std::vector<ad::Var>& b) {
    for (std::size_t l = 0; l < w.size(); ++l)
      for (ad::Var v : {w[l], b[l]}) {
        Eigen::Index n = t.val(v).size();
        if (t.has_adjoint(v.id)) {
          const auto& a = t.adjoint(v);
          g.segment(at, n) = Eigen::Map<const Eigen::VectorXd>(a.data(), n);
        } else {
          g.segment(at, n).setZero();
        }
        at += n;
      }
  };
  pull(nv.w_ex, nv.b_ex);
  pull(nv.w_ey, nv.b_ey);
  pull(nv.w_g, nv.b_g);
  return g;
}

ad::Var build_patches(ad::Tape& t, const Eigen::MatrixXi& stencil, ad::Var r1,
                      ad::Var r2, ad::Var uxn, ad::Var uyn, ad::Var pn) {
  (void)t;
  return ad::vconcat({gather(r1, stencil), gather(r2, stencil),
                      gather(uxn, stencil), gather(uyn, stencil),
                      gather(pn, stencil)});
}

SchemeWeights generate_weights(ad::Tape& t, const NetVars& nv, ad::Var patches,
                               bool vertical) {
  (void)t;
  ad::Var latent = vertical ? mlp_forward(nv.w_ex, nv.b_ex, patches)
                            : mlp_forward(nv.w_ey, nv.b_ey, patches);
  ad::Var raw = mlp_forward(nv.w_g, nv.b_g, latent);
  int n = nv.params->arch.stencil;
  ad::Var b = vertical ? nv.b_vert : nv.b_horz;
  SchemeWeights sw;
  sw.wx = add_cols(matmul(nv.a_basis, rows(raw, 0, n - 1)), b);
  sw.wy = add_cols(matmul(nv.a_basis, rows(raw, n - 1, n - 1)), b);
  return sw;
}

ad::Var face_velocity(ad::Tape& t, ad::Var weights, ad::Var u,
                      const Eigen::MatrixXi& stencil) {
  (void)t;
  return colsum_t(weights * gather(u, stencil));
}

ad::Var bound_boundary_faces(ad::Tape& t, ad::Var u_face, ad::Var u_own,
                             ad::Var u_nb, ad::Var upwind, double lambda,
                             const Eigen::ArrayXXd& mask) {
  Eigen::ArrayXXd own_le = (t.val(u_own).array() <= t.val(u_nb).array()).cast<double>();
  ad::Var lo = select(own_le, u_own, u_nb);
  ad::Var hi = select(own_le, u_nb, u_own);
  lo = lo - lambda * abs_(t, lo);
  hi = hi + lambda * abs_(t, hi);
  Eigen::ArrayXXd out_of_bounds =
      (t.val(u_face).array() < t.val(lo).array() ||
       t.val(u_face).array() > t.val(hi).array())
          .cast<double>();
  return select(mask * out_of_bounds, upwind, u_face);
}

NeuralFaceVelocities modified_inverse(ad::Tape& t, const SolverMaps& maps,
                                      const PatchMaps& pmaps, const NetVars& nv,
                                      ad::Var ux, ad::Var uy, ad::Var p,
                                      ad::Var flux_internal, double p_ref,
                                      bool apply_limiter, double lambda) {
  ad::Var bvx = boundary_values(t, maps, Quantity::Ux, ux);
  ad::Var bvy = boundary_values(t, maps, Quantity::Uy, uy);
  ad::Var r_x = compute_r(t, maps, ux, bvx, flux_internal);
  ad::Var r_y = compute_r(t, maps, uy, bvy, flux_internal);

  // Each stencil cell carries the r pair of its own face on the +axis side in
  // the patch's orientation; cells without that internal face read as smooth
  // data (r = 1), zero-filled slots as 0 via the patch gather.
  ad::Var r_xv = rows(r_x, 0, maps.nxf), r_xh = rows(r_x, maps.nxf, maps.nyf);
  ad::Var r_yv = rows(r_y, 0, maps.nxf), r_yh = rows(r_y, maps.nxf, maps.nyf);
  ad::Var r1_v = gather(r_xv, maps.east_face_of_cell, 1.0);
  ad::Var r2_v = gather(r_yv, maps.east_face_of_cell, 1.0);
  ad::Var r1_h = gather(r_xh, maps.north_face_of_cell, 1.0);
  ad::Var r2_h = gather(r_yh, maps.north_face_of_cell, 1.0);

  // Zero-preserving per-component velocity scaling by the snapshot maximum.
  ad::Var one = t.scalar(1.0);
  ad::Var sx = max_abs(ux), sy = max_abs(uy);
  ad::Var uxn = t.val(sx)(0, 0) > 0 ? bcast_mul(ux, one / sx) : ux;
  ad::Var uyn = t.val(sy)(0, 0) > 0 ? bcast_mul(uy, one / sy) : uy;
  ad::Var pn = p - p_ref;

  ad::Var patches_v = build_patches(t, pmaps.stencil_x, r1_v, r2_v, uxn, uyn, pn);
  ad::Var patches_h = build_patches(t, pmaps.stencil_y, r1_h, r2_h, uxn, uyn, pn);
  SchemeWeights sw_v = generate_weights(t, nv, patches_v, true);
  SchemeWeights sw_h = generate_weights(t, nv, patches_h, false);

  // Face velocities combine the generated weights with the raw (unscaled)
  // cell velocities; sum(w) = 1 makes the result scale-consistent.
  NeuralFaceVelocities out;
  out.ufx = ad::vconcat({face_velocity(t, sw_v.wx, ux, pmaps.stencil_x),
                         face_velocity(t, sw_h.wx, ux, pmaps.stencil_y)});
  out.ufy = ad::vconcat({face_velocity(t, sw_v.wy, uy, pmaps.stencil_x),
                         face_velocity(t, sw_h.wy, uy, pmaps.stencil_y)});
  if (!t.val(out.ufx).allFinite() || !t.val(out.ufy).allFinite())
    throw std::runtime_error("neural scheme produced non-finite face values");

  if (apply_limiter) {
    Eigen::ArrayXXd bmask(maps.nf, 1);
    bmask.topRows(maps.nxf) = pmaps.bmask_x;
    bmask.bottomRows(maps.nyf) = pmaps.bmask_y;
    ad::Var up_x = upwind_face_values(t, maps, ux, flux_internal);
    ad::Var up_y = upwind_face_values(t, maps, uy, flux_internal);
    ad::Var ox = gather(ux, maps.own), nxv = gather(ux, maps.nb);
    ad::Var oy = gather(uy, maps.own), nyv = gather(uy, maps.nb);
    out.ufx = bound_boundary_faces(t, out.ufx, ox, nxv, up_x, lambda, bmask);
    out.ufy = bound_boundary_faces(t, out.ufy, oy, nyv, up_y, lambda, bmask);
  }
  return out;
}

}  // namespace dcflow
