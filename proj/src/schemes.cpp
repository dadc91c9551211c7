#include "dcflow/schemes.hpp"

#include <stdexcept>

namespace dcflow {

using ad::Var;

SchemeKind scheme_from_name(const std::string& name) {
  if (name == "upwind") return SchemeKind::Upwind;
  if (name == "linear") return SchemeKind::Linear;
  if (name == "tvd_minmod") return SchemeKind::TvdMinmod;
  if (name == "tvd_vanleer") return SchemeKind::TvdVanleer;
  if (name == "deep_convection") return SchemeKind::DeepConvection;
  throw std::invalid_argument("unknown scheme: " + name);
}

const char* scheme_name(SchemeKind k) {
  switch (k) {
    case SchemeKind::Upwind: return "upwind";
    case SchemeKind::Linear: return "linear";
    case SchemeKind::TvdMinmod: return "tvd_minmod";
    case SchemeKind::TvdVanleer: return "tvd_vanleer";
    case SchemeKind::DeepConvection: return "deep_convection";
  }
  return "?";
}

namespace {

constexpr double kREps = 1e-12;

struct UpDown {
  Var u_p, u_d, u_u;  // upwind cell, downwind cell, second upstream value
  Eigen::ArrayXXd pos;
};

Eigen::MatrixXi vcat_i(const Eigen::MatrixXi& a, const Eigen::MatrixXi& b) {
  Eigen::MatrixXi o(a.rows() + b.rows(), 1);
  o << a, b;
  return o;
}

UpDown updown(ad::Tape& t, const SolverMaps& maps, Var u, Var u_bvals,
              Var flux_internal) {
  Eigen::MatrixXi own2 = vcat_i(maps.own2_x, maps.own2_y);
  Eigen::MatrixXi nb2 = vcat_i(maps.nb2_x, maps.nb2_y);
  Eigen::MatrixXi own2_bf = vcat_i(maps.own2_bf_x, maps.own2_bf_y);
  Eigen::MatrixXi nb2_bf = vcat_i(maps.nb2_bf_x, maps.nb2_bf_y);

  Var u_own = ad::gather(u, maps.own);
  Var u_nb = ad::gather(u, maps.nb);
  Var u_own2 = ad::gather(u, own2) + ad::gather(u_bvals, own2_bf);
  Var u_nb2 = ad::gather(u, nb2) + ad::gather(u_bvals, nb2_bf);

  UpDown r;
  r.pos = (t.val(flux_internal).array() >= 0.0).cast<double>();
  r.u_p = ad::select(r.pos, u_own, u_nb);
  r.u_d = ad::select(r.pos, u_nb, u_own);
  r.u_u = ad::select(r.pos, u_own2, u_nb2);
  return r;
}

}  // namespace

Var compute_r(ad::Tape& t, const SolverMaps& maps, Var u, Var u_bvals,
              Var flux_internal) {
  UpDown ud = updown(t, maps, u, u_bvals, flux_internal);
  Var num = ud.u_p - ud.u_u;
  Var den = ud.u_d - ud.u_p;

  Eigen::ArrayXXd den_ok = (t.val(den).array().abs() >= kREps).cast<double>();
  Eigen::ArrayXXd num_small = (t.val(num).array().abs() < kREps).cast<double>();
  Var den_safe = ad::select(den_ok, den, 1.0);
  Var r_smooth = ad::clip(num / den_safe, 0.0, 2.0);
  // degenerate: 0/0 -> 1, finite/0 -> clip ceiling 2
  Eigen::MatrixXd degenerate = (2.0 - num_small).matrix();
  return ad::select(den_ok, r_smooth, t.leaf(degenerate));
}

Var upwind_face_values(ad::Tape& t, const SolverMaps& maps, Var u,
                       Var flux_internal) {
  Eigen::ArrayXXd pos = (t.val(flux_internal).array() >= 0.0).cast<double>();
  return ad::select(pos, ad::gather(u, maps.own), ad::gather(u, maps.nb));
}

Var linear_face_values(ad::Tape& t, const SolverMaps& maps, Var u) {
  (void)t;
  return 0.5 * (ad::gather(u, maps.own) + ad::gather(u, maps.nb));
}

Var tvd_face_values(ad::Tape& t, const SolverMaps& maps, Var u, Var u_bvals,
                    Var flux_internal, SchemeKind limiter) {
  UpDown ud = updown(t, maps, u, u_bvals, flux_internal);
  Var r = compute_r(t, maps, u, u_bvals, flux_internal);
  Var psi{};
  switch (limiter) {
    case SchemeKind::TvdMinmod:
      psi = ad::clip(r, 0.0, 1.0);
      break;
    case SchemeKind::TvdVanleer:
      // r is already clipped nonnegative, so (r+|r|)/(1+r) = 2r/(1+r)
      psi = (2.0 * r) / (1.0 + r);
      break;
    default:
      throw std::invalid_argument("tvd_face_values: not a TVD limiter");
  }
  return ud.u_p + 0.5 * psi * (ud.u_d - ud.u_p);
}

Var interpolate_face(ad::Tape& t, const SolverMaps& maps, Var u, Var u_bvals,
                     Var flux_internal, SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Upwind:
      return upwind_face_values(t, maps, u, flux_internal);
    case SchemeKind::Linear:
      return linear_face_values(t, maps, u);
    case SchemeKind::TvdMinmod:
    case SchemeKind::TvdVanleer:
      return tvd_face_values(t, maps, u, u_bvals, flux_internal, kind);
    case SchemeKind::DeepConvection:
      throw std::invalid_argument("deep_convection is handled by the neural module");
  }
  throw std::invalid_argument("interpolate_face: bad scheme");
}

}  // namespace dcflow
