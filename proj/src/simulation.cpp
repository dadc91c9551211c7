#include "dcflow/simulation.hpp"

#include <stdexcept>

namespace dcflow {

using ad::Var;

SolverContext SolverContext::build(const StructuredMesh& mesh,
                                   const BoundarySet& bset,
                                   const PimpleConfig& cfg) {
  SolverContext ctx;
  ctx.mesh = &mesh;
  ctx.bset = bset;
  ctx.maps = SolverMaps::build(mesh, bset);
  ctx.pmaps = PatchMaps::build(mesh);
  ctx.cfg = cfg;
  return ctx;
}

VarState lift_state(ad::Tape& t, const State& s) {
  return {t.leaf(s.ux.matrix()), t.leaf(s.uy.matrix()), t.leaf(s.p.matrix()),
          t.leaf(s.k.matrix()), t.leaf(s.w.matrix())};
}

State read_state(const ad::Tape& t, const VarState& s) {
  State out;
  out.ux = t.val(s.ux).col(0).array();
  out.uy = t.val(s.uy).col(0).array();
  out.p = t.val(s.p).col(0).array();
  out.k = t.val(s.k).col(0).array();
  out.w = t.val(s.w).col(0).array();
  return out;
}

namespace {

Var face_interp(ad::Tape& t, const SolverMaps& maps, Var cells) {
  (void)t;
  return 0.5 * (ad::gather(cells, maps.own) + ad::gather(cells, maps.nb));
}

Var constant(ad::Tape& t, int m, double v) {
  return t.leaf(Eigen::MatrixXd::Constant(m, 1, v));
}

/// High-order face values of one velocity component at the start-of-step
/// state, or invalid Var for pure Upwind (no deferred correction).
struct DcFaces {
  Var x, y;
  bool active = false;
};

DcFaces dc_face_values(ad::Tape& t, const SolverContext& ctx, const NetVars* nv,
                       const VarState& s, const FluxVars& flux) {
  const auto& maps = ctx.maps;
  DcFaces dc;
  if (ctx.cfg.scheme == SchemeKind::Upwind && !ctx.cfg.dc_freeze_upwind) return dc;
  dc.active = true;
  if (ctx.cfg.dc_freeze_upwind) {
    dc.x = upwind_face_values(t, maps, s.ux, flux.internal);
    dc.y = upwind_face_values(t, maps, s.uy, flux.internal);
  } else if (ctx.cfg.scheme == SchemeKind::DeepConvection) {
    if (!nv) throw std::invalid_argument("learned scheme requires network parameters");
    bool limit = ctx.cfg.limiter && !t.grad_enabled;
    NeuralFaceVelocities nf =
        modified_inverse(t, maps, ctx.pmaps, *nv, s.ux, s.uy, s.p, flux.internal,
                         ctx.cfg.p_ref, limit, ctx.cfg.limiter_lambda);
    dc.x = nf.ufx;
    dc.y = nf.ufy;
  } else {
    Var bvx = boundary_values(t, maps, Quantity::Ux, s.ux);
    Var bvy = boundary_values(t, maps, Quantity::Uy, s.uy);
    dc.x = interpolate_face(t, maps, s.ux, bvx, flux.internal, ctx.cfg.scheme);
    dc.y = interpolate_face(t, maps, s.uy, bvy, flux.internal, ctx.cfg.scheme);
  }
  return dc;
}

void turbulence_step(ad::Tape& t, const SolverContext& ctx, const FluxVars& flux,
                     Var nu_t, VarState& s) {
  const auto& maps = ctx.maps;
  const auto& tc = ctx.turb;
  double vol = maps.vol;

  // strain-rate magnitude squared from the updated velocity field
  Var bvx = boundary_values(t, maps, Quantity::Ux, s.ux);
  Var bvy = boundary_values(t, maps, Quantity::Uy, s.uy);
  Var dudx = green_gauss_grad(t, maps, s.ux, bvx, 0);
  Var dudy = green_gauss_grad(t, maps, s.ux, bvx, 1);
  Var dvdx = green_gauss_grad(t, maps, s.uy, bvy, 0);
  Var dvdy = green_gauss_grad(t, maps, s.uy, bvy, 1);
  Var s2 = 2.0 * ad::square(dudx) + 2.0 * ad::square(dvdy) +
           ad::square(dudy + dvdx);

  auto scalar_transport = [&](Quantity q, Var field_old, double sigma,
                              Var destr_coeff, Var production) {
    SystemVars sys = SystemVars::zero(t, maps);
    Var bq = boundary_values(t, maps, q, field_old);
    assemble_convection_upwind(t, maps, flux, q, bq, sys);
    Var nu_eff = constant(t, maps.m, ctx.cfg.nu) + sigma * nu_t;
    Var nu_bf = ad::gather(nu_eff, maps.bcell);
    assemble_diffusion(t, maps, face_interp(t, maps, nu_eff), nu_bf, q, bq, sys);
    add_time_term(t, maps, ctx.cfg.dt, field_old, sys);
    sys.diag = sys.diag + vol * destr_coeff;
    sys.rhs = sys.rhs + vol * production;
    SolveReport rep;
    Eigen::VectorXd g0 = t.val(field_old).col(0);
    Var out = ad_ops::linear_solve(maps.mesh->topo, sys.diag, sys.off_own_nb,
                                   sys.off_nb_own, sys.rhs, false,
                                   ctx.cfg.tol_momentum,
                                   ctx.cfg.max_iter_momentum, &rep, &g0);
    if (!rep.converged)
      throw std::runtime_error("turbulence solve failed to converge");
    return out;
  };

  // k first (implicit destruction beta* omega k), then omega (beta omega^2)
  Var k_new = scalar_transport(Quantity::K, s.k, tc.sigma_star,
                               tc.beta_star * s.w, nu_t * s2);
  Var w_new = scalar_transport(Quantity::Omega, s.w, tc.sigma, tc.beta * s.w,
                               ad::clip(tc.alpha * s2, 0, 1e300));
  s.k = ad::clip(k_new, tc.k_floor, 1e300);
  s.w = ad::clip(w_new, tc.omega_floor, 1e300);
}

}  // namespace

VarState step_traced(ad::Tape& t, const SolverContext& ctx, const VarState& s,
                     const NetVars* nv, StepDiagnostics* diag) {
  const auto& maps = ctx.maps;
  const auto& cfg = ctx.cfg;
  if (cfg.n_correctors < 1)
    throw std::invalid_argument("at least one pressure corrector is required");
  double vol = maps.vol;

  // everything convective is linearized about the start-of-step state
  FluxVars flux0 = face_mass_flux(t, maps, s.ux, s.uy);
  DcFaces dc = dc_face_values(t, ctx, nv, s, flux0);

  Var nu_t;
  Var nu_eff = constant(t, maps.m, cfg.nu);
  if (cfg.turbulence) {
    nu_t = s.k / s.w;
    nu_eff = nu_eff + nu_t;
  }
  Var nu_face = face_interp(t, maps, nu_eff);
  Var nu_bf = ad::gather(nu_eff, maps.bcell);

  // shared momentum matrix (coefficients are component-independent),
  // component-specific right-hand sides excluding the pressure source
  SystemVars sys = SystemVars::zero(t, maps);
  Var bvx = boundary_values(t, maps, Quantity::Ux, s.ux);
  Var bvy = boundary_values(t, maps, Quantity::Uy, s.uy);
  Var zero_b = t.zeros(maps.nbf);
  assemble_convection_upwind(t, maps, flux0, Quantity::Ux, zero_b, sys);
  assemble_diffusion(t, maps, nu_face, nu_bf, Quantity::Ux, zero_b, sys);
  add_time_term(t, maps, cfg.dt, t.zeros(maps.m), sys);
  Var a_p = sys.diag;

  auto component_rhs = [&](Quantity q, Var u_old, Var bv, Var dc_face) {
    SystemVars r = SystemVars::zero(t, maps);
    assemble_convection_upwind(t, maps, flux0, q, bv, r);
    assemble_diffusion(t, maps, nu_face, nu_bf, q, bv, r);
    add_time_term(t, maps, cfg.dt, u_old, r);
    if (dc.active) {
      Var up = upwind_face_values(t, maps, u_old, flux0.internal);
      deferred_correction(t, maps, flux0.internal, dc_face, up, r);
    }
    return r.rhs;
  };
  Var rhs_x = component_rhs(Quantity::Ux, s.ux, bvx, dc.x);
  Var rhs_y = component_rhs(Quantity::Uy, s.uy, bvy, dc.y);

  // predictor with the old pressure gradient
  Var bp = boundary_values(t, maps, Quantity::P, s.p);
  Var gpx = green_gauss_grad(t, maps, s.p, bp, 0);
  Var gpy = green_gauss_grad(t, maps, s.p, bp, 1);
  SolveReport rx, ry;
  // previous velocities warm-start the predictor solves
  Eigen::VectorXd gx = t.val(s.ux).col(0), gy = t.val(s.uy).col(0);
  Var ux = ad_ops::linear_solve(maps.mesh->topo, sys.diag, sys.off_own_nb,
                                sys.off_nb_own, rhs_x - vol * gpx, false,
                                cfg.tol_momentum, cfg.max_iter_momentum, &rx,
                                &gx);
  Var uy = ad_ops::linear_solve(maps.mesh->topo, sys.diag, sys.off_own_nb,
                                sys.off_nb_own, rhs_y - vol * gpy, false,
                                cfg.tol_momentum, cfg.max_iter_momentum, &ry,
                                &gy);
  if (!rx.converged || !ry.converged)
    throw std::runtime_error("momentum solve failed to converge");

  // Rhie-Chow face coefficient D_f = interp(V/a_p) A / h; fixed-pressure
  // boundary faces use the half-cell distance
  Var rv = constant(t, maps.m, vol) / a_p;
  Var d_f = face_interp(t, maps, rv) * t.leaf(maps.area) / maps.h;
  const auto& pmaskd = maps.b_fixed_mask[static_cast<int>(Quantity::P)];
  Var d_b = ad::gather(rv, maps.bcell) *
            t.leaf((maps.barea.array() * pmaskd * (2.0 / maps.h)).matrix());
  Var bp_fixed = t.leaf(maps.bval_fixed[static_cast<int>(Quantity::P)]);

  Var p = s.p;
  FluxVars corrected{};
  SolveReport pr;
  for (int corr = 0; corr < cfg.n_correctors; ++corr) {
    Var hx = (rhs_x - apply_offdiag(t, maps, sys, ux)) / a_p;
    Var hy = (rhs_y - apply_offdiag(t, maps, sys, uy)) / a_p;
    FluxVars flux_hat = face_mass_flux(t, maps, hx, hy);

    SystemVars psys = SystemVars::zero(t, maps);
    psys.diag = ad::scatter_add(d_f, maps.own, maps.m) +
                ad::scatter_add(d_f, maps.nb, maps.m) +
                ad::scatter_add(d_b, maps.bcell, maps.m);
    psys.off_own_nb = -d_f;
    psys.off_nb_own = -d_f;
    psys.rhs = ad::scatter_add(d_b * bp_fixed, maps.bcell, maps.m) -
               cell_divergence(t, maps, flux_hat);
    Eigen::VectorXd gp = t.val(p).col(0);  // previous iterate / old pressure
    p = ad_ops::linear_solve(maps.mesh->topo, psys.diag, psys.off_own_nb,
                             psys.off_nb_own, psys.rhs, true, cfg.tol_pressure,
                             cfg.max_iter_pressure, &pr, &gp);
    if (!pr.converged)
      throw std::runtime_error("pressure solve failed to converge");

    Var bpv = boundary_values(t, maps, Quantity::P, p);
    ux = hx - rv * green_gauss_grad(t, maps, p, bpv, 0);
    uy = hy - rv * green_gauss_grad(t, maps, p, bpv, 1);

    corrected.internal =
        flux_hat.internal -
        d_f * (ad::gather(p, maps.nb) - ad::gather(p, maps.own));
    corrected.bound = flux_hat.bound - d_b * (bp_fixed - ad::gather(p, maps.bcell));
  }

  VarState out{ux, uy, p, s.k, s.w};
  if (cfg.turbulence) turbulence_step(t, ctx, corrected, nu_t, out);

  if (!t.val(out.ux).allFinite() || !t.val(out.uy).allFinite() ||
      !t.val(out.p).allFinite())
    throw std::runtime_error("time step produced non-finite values");

  if (diag) {
    diag->momentum_x = rx;
    diag->momentum_y = ry;
    diag->pressure = pr;
    diag->pressure_solves = cfg.n_correctors;
    Var div = cell_divergence(t, maps, corrected);
    diag->max_divergence = t.val(div).cwiseAbs().maxCoeff();
  }
  return out;
}

State step(const SolverContext& ctx, const State& s, StepDiagnostics* diag) {
  ad::Tape t;
  t.grad_enabled = false;
  NetVars nv;
  const NetVars* nvp = nullptr;
  ConstraintTransform ct_local;
  if (ctx.cfg.scheme == SchemeKind::DeepConvection) {
    if (!ctx.net) throw std::invalid_argument("learned scheme requires network parameters");
    ct_local = ctx.ct ? *ctx.ct : ConstraintTransform::standard(ctx.net->arch.stencil);
    nv = lift_params(t, *ctx.net, ct_local);
    nvp = &nv;
  }
  VarState out = step_traced(t, ctx, lift_state(t, s), nvp, diag);
  return read_state(t, out);
}

std::vector<State> rollout(
    const SolverContext& ctx, const State& s0, int n_steps,
    const std::function<void(int, const State&, const StepDiagnostics&)>& on_step) {
  std::vector<State> traj;
  traj.reserve(n_steps + 1);
  traj.push_back(s0);
  for (int i = 0; i < n_steps; ++i) {
    StepDiagnostics diag;
    traj.push_back(step(ctx, traj.back(), &diag));
    if (on_step) on_step(i + 1, traj.back(), diag);
  }
  return traj;
}

}  // namespace dcflow
