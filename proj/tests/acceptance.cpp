/// @file acceptance.cpp
/// @brief End-to-end acceptance gate: one pass/fail line per criterion.
///
/// Expensive desk-scale artifacts (fine-mesh reference data, trained
/// parameter sets, measured metrics) are cached under acceptance_work/ in the
/// working directory, so reruns only redo the cheap checks.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <vector>

#include "json.hpp"

#include "dcflow/config.hpp"
#include "dcflow/gradcheck.hpp"
#include "dcflow/snapshot_io.hpp"

using namespace dcflow;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int id;
  bool pass;
  bool gating;  // best-effort criteria report but do not fail the binary
  std::string detail;
};

std::vector<Outcome> results;

void report(int id, bool pass, const std::string& detail, bool gating = true) {
  results.push_back({id, pass, gating, detail});
  std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL")
            << (gating ? "" : " (best-effort)") << " - " << detail << std::endl;
}

fs::path work_dir() {
  fs::path p = "acceptance_work";
  fs::create_directories(p);
  return p;
}

/// Shared desk-scale artifacts, produced lazily and cached on disk.
struct Desk {
  RunConfig rc;
  double max_divergence = 0.0;  // worst over every rollout executed here
  std::map<int, Dataset> data;  // per reduction factor
  std::map<int, MeshPair> pairs;
  State fine_last;  // developed fine state for the benchmark
  bool have_fine_last = false;

  Desk() : rc(config_from_json(json::object())) {}

  MeshPair& pair(int fr) {
    auto it = pairs.find(fr);
    if (it != pairs.end()) return it->second;
    RunConfig r = rc;
    r.reduction_factor = fr;
    return pairs.emplace(fr, r.meshes()).first->second;
  }

  SolverContext coarse_ctx(int fr, SchemeKind scheme) {
    SolverContext ctx =
        SolverContext::build(pair(fr).coarse, rc.boundaries(), rc.numerics());
    ctx.cfg.scheme = scheme;
    return ctx;
  }

  /// Coarse reference datasets for every reduction factor, projected from a
  /// single fine run (generated once, then read back from disk).
  void ensure_data() {
    if (!data.empty()) return;
    const std::vector<int> frs = {2, 4, 8};
    bool cached = fs::exists(work_dir() / "fine_last.dcsnap");
    for (int fr : frs)
      cached = cached && fs::exists(work_dir() / ("data_fr" + std::to_string(fr)) /
                                    "manifest.json");
    if (cached) {
      for (int fr : frs) {
        Dataset d;
        d.snapshots = read_rollout((work_dir() / ("data_fr" + std::to_string(fr)))
                                       .string(),
                                   pair(fr).coarse);
        data.emplace(fr, std::move(d));
      }
      fine_last = read_snapshot((work_dir() / "fine_last.dcsnap").string(),
                                pair(2).fine);
      have_fine_last = true;
      return;
    }

    std::cout << "[desk] generating " << rc.steps << "-step fine reference ("
              << rc.fine_nx << "x" << rc.fine_ny << ") ..." << std::endl;
    SolverContext fine_ctx =
        SolverContext::build(pair(2).fine, rc.boundaries(), rc.numerics());
    State s = State::uniform(pair(2).fine, rc.inlet_velocity, 0.0);
    for (int fr : frs) data.emplace(fr, Dataset{});
    auto record = [&](const State& st) {
      for (int fr : frs) {
        State c;
        const MeshPair& mp = pair(fr);
        c.ux = project(st.ux, mp);
        c.uy = project(st.uy, mp);
        c.p = project(st.p, mp);
        c.k = project(st.k, mp);
        c.w = project(st.w, mp);
        data[fr].snapshots.push_back(std::move(c));
      }
    };
    if (rc.discard == 0) record(s);
    for (int i = 1; i <= rc.steps; ++i) {
      StepDiagnostics diag;
      s = step(fine_ctx, s, &diag);
      max_divergence = std::max(max_divergence, diag.max_divergence);
      if (i >= rc.discard) record(s);
      if (i % 50 == 0) std::cout << "[desk]   step " << i << std::endl;
    }
    fine_last = s;
    have_fine_last = true;
    write_snapshot((work_dir() / "fine_last.dcsnap").string(), pair(2).fine, s,
                   rc.steps * rc.dt);
    for (int fr : frs) {
      fs::path dir = work_dir() / ("data_fr" + std::to_string(fr));
      fs::create_directories(dir);
      const auto& snaps = data[fr].snapshots;
      for (std::size_t i = 0; i < snaps.size(); ++i)
        write_snapshot((dir / snapshot_filename(static_cast<int>(i))).string(),
                       pair(fr).coarse, snaps[i],
                       (rc.discard + static_cast<double>(i)) * rc.dt);
      write_rollout_manifest(dir.string(), pair(fr).coarse, rc.dt,
                             static_cast<int>(snaps.size()), rc.raw);
    }
  }

  /// Trained parameters per tag, cached as .dcnet plus a JSON summary.
  MlpParams train_cached(const std::string& tag, int fr, const TrainConfig& tc,
                         json* summary_out = nullptr) {
    fs::path dir = work_dir() / ("train_" + tag);
    fs::path net = dir / "best.dcnet";
    fs::path summary = dir / "summary.json";
    if (fs::exists(net) && fs::exists(summary)) {
      if (summary_out) {
        std::ifstream in(summary);
        in >> *summary_out;
      }
      return MlpParams::load(net.string());
    }
    ensure_data();
    fs::create_directories(dir);
    TrainConfig cfg = tc;
    cfg.out_dir = dir.string();
    std::cout << "[desk] training '" << tag << "' (F_r=" << fr << ", "
              << cfg.t_schedule.size() << " stage(s)) ..." << std::endl;
    TrainResult r = train(pair(fr).coarse, rc.boundaries(), rc.numerics(),
                          data[fr], rc.arch, cfg);
    json js = {{"best_loss", r.best_loss},
               {"baseline_loss_t1", r.baseline_loss_t1},
               {"epochs_to_beat_baseline", r.epochs_to_beat_baseline},
               {"wx", r.weights_used.wx},
               {"wy", r.weights_used.wy},
               {"epochs", r.log.size()}};
    std::ofstream(summary) << js.dump(2) << "\n";
    if (summary_out) *summary_out = js;
    return r.best;
  }
};

Eigen::MatrixXd random_mat(int r, int c, std::mt19937_64& rng, double lo = -1.0,
                           double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::MatrixXd m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = d(rng);
  return m;
}

// ---------------------------------------------------------------- criterion 1
void criterion_constraint_exactness() {
  MlpArch arch;
  ConstraintTransform ct = ConstraintTransform::standard();
  std::mt19937_64 rng(1);
  double worst = 0.0;
  const int chunks = 10, faces = 1000;
  for (int c = 0; c < chunks; ++c) {
    MlpParams p = MlpParams::init(arch, 100 + c);
    p.unflatten(Eigen::VectorXd(random_mat(p.count(), 1, rng, -1.0, 1.0)));
    ad::Tape t;
    NetVars nv = lift_params(t, p, ct);
    ad::Var patches = t.leaf(random_mat(arch.inputs(), faces, rng, -1.0, 1.0));
    for (bool vertical : {true, false}) {
      SchemeWeights sw = generate_weights(t, nv, patches, vertical);
      worst = std::max(worst,
                       (t.val(sw.wx).colwise().sum().array() - 1.0).abs().maxCoeff());
      worst = std::max(worst,
                       (t.val(sw.wy).colwise().sum().array() - 1.0).abs().maxCoeff());
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "max |sum(w)-1| = %.3e over %d weight vectors (tol 1e-12)", worst,
                chunks * faces * 4);
  report(1, worst <= 1e-12, buf);
}

// ---------------------------------------------------------------- criterion 2
void criterion_projection_conservation(Desk& desk) {
  std::mt19937_64 rng(2);
  double worst_rel = 0.0, worst_const = 0.0;
  for (int fr : {2, 4, 8}) {
    const MeshPair& mp = desk.pair(fr);
    Eigen::ArrayXd f = random_mat(mp.fine.n_cells, 1, rng).col(0).array();
    Eigen::ArrayXd c = project(f, mp);
    double fine_int = (f * mp.fine.cell_area()).sum();
    double coarse_int = (c * mp.coarse.cell_area()).sum();
    worst_rel = std::max(worst_rel, std::abs(fine_int - coarse_int) /
                                        std::max(1.0, std::abs(fine_int)));
    Eigen::ArrayXd ones = Eigen::ArrayXd::Constant(mp.fine.n_cells, 0.37);
    worst_const =
        std::max(worst_const, (project(ones, mp) - 0.37).abs().maxCoeff());
  }
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "integral mismatch rel %.3e, constant error %.3e (tol 1e-12)",
                worst_rel, worst_const);
  report(2, worst_rel <= 1e-12 && worst_const <= 1e-12, buf);
}

// ---------------------------------------------------------------- criterion 3
void criterion_upwind_recovery(Desk& desk) {
  SolverContext up = desk.coarse_ctx(8, SchemeKind::Upwind);  // 32x16 mesh
  SolverContext fr = desk.coarse_ctx(8, SchemeKind::Upwind);
  fr.cfg.dc_freeze_upwind = true;
  State s = State::uniform(desk.pair(8).coarse, desk.rc.inlet_velocity, 0.0);
  State a = s, b = s;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    StepDiagnostics da, db;
    a = step(up, a, &da);
    b = step(fr, b, &db);
    desk.max_divergence =
        std::max({desk.max_divergence, da.max_divergence, db.max_divergence});
    double d = (a.ux - b.ux).abs().maxCoeff();
    d = std::max(d, (a.uy - b.uy).abs().maxCoeff());
    d = std::max(d, (a.p - b.p).abs().maxCoeff());
    worst = std::max(worst, d);
  }
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "50-step frozen-correction vs upwind: max discrepancy %.3e "
                "(tol 1e-8)", worst);
  report(3, worst <= 1e-8, buf);
}

// ---------------------------------------------------------------- criterion 4
void criterion_gradient_correctness() {
  ObstacleSpec obst{true, 0.25, 0.375, 0.375, 0.5};
  StructuredMesh mesh = build_mesh(8, 8, 1.0, 1.0, obst);
  BoundarySet bset = BoundarySet::channel(1.0);
  PimpleConfig num;
  num.dt = 0.01;
  SolverContext up = SolverContext::build(mesh, bset, num);
  auto traj = rollout(up, State::uniform(mesh, 1.0, 0.0), 6);
  Dataset data;
  data.snapshots.assign(traj.begin() + 2, traj.end());

  PimpleConfig dc_num = num;
  dc_num.scheme = SchemeKind::DeepConvection;
  SolverContext ctx = SolverContext::build(mesh, bset, dc_num);
  ConstraintTransform ct = ConstraintTransform::standard();

  // every parameter of a reduced network
  MlpArch small;
  small.encoder = {12, 8};
  small.generator = {8};
  MlpParams ps = MlpParams::init(small, 3);
  GradCheckReport reduced = gradcheck(ctx, ps, ct, data, 0, 2, {1.0, 1.0}, {});

  // spot-check 50 random parameters of the full-size network
  MlpParams pf = MlpParams::init({}, 4);
  std::mt19937_64 rng(5);
  std::vector<int> idx;
  for (int i = 0; i < 50; ++i)
    idx.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(pf.count())));
  GradCheckReport full = gradcheck(ctx, pf, ct, data, 0, 2, {1.0, 1.0}, idx);

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "reduced net (%zu params) max rel err %.3e; full-size spot-check "
                "(50 params) %.3e (tol 1e-4)",
                reduced.rows.size(), reduced.max_rel_error, full.max_rel_error);
  report(4, reduced.pass && full.pass, buf);
}

// ---------------------------------------------------------------- criterion 10
void criterion_dataset_arithmetic() {
  std::mt19937_64 rng(10);
  bool ok = true;
  for (int trial = 0; trial < 200 && ok; ++trial) {
    int n = 2 + static_cast<int>(rng() % 200);
    int T = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
    auto w = window_starts(n, T);
    ok = ok && static_cast<int>(w.size()) == n - T;
    ok = ok && n_samples(n, T) == n - T;
    for (std::size_t i = 0; i < w.size(); ++i) {
      ok = ok && w[i] == static_cast<int>(i);       // contiguous starts
      ok = ok && w[i] + T <= n - 1;                 // last scored index exists
    }
  }
  report(10, ok, "n - T window count and contents over 200 random (n, T) pairs");
}

// ---------------------------------------------------------------- criterion 11
void criterion_limiter_behaviour() {
  ad::Tape t;
  auto leaf = [&](std::initializer_list<double> v) {
    Eigen::MatrixXd m(static_cast<int>(v.size()), 1);
    int i = 0;
    for (double x : v) m(i++, 0) = x;
    return t.leaf(m);
  };
  // faces: in-bounds / above / below / degenerate 0,0 wall / unmasked
  ad::Var u_face = leaf({0.5, 3.0, -2.0, 0.1, 5.0});
  ad::Var u_own = leaf({0.0, 1.0, 0.0, 0.0, 1.0});
  ad::Var u_nb = leaf({1.0, 2.0, 1.0, 0.0, 2.0});
  ad::Var upwind = leaf({0.0, 1.0, 0.0, 0.0, 1.0});
  Eigen::ArrayXXd mask(5, 1);
  mask << 1, 1, 1, 1, 0;
  ad::Var out = bound_boundary_faces(t, u_face, u_own, u_nb, upwind, 0.3, mask);
  bool ok = t.val(out)(0, 0) == 0.5     // in bounds: untouched
            && t.val(out)(1, 0) == 1.0  // above hi + lambda|hi|: upwind
            && t.val(out)(2, 0) == 0.0  // below lo - lambda|lo|: upwind
            && t.val(out)(3, 0) == 0.0  // wall case u_o = u_n = 0: any
                                        // nonzero prediction is replaced
            && t.val(out)(4, 0) == 5.0; // mask 0: never altered
  report(11, ok, "pass-through, replacement, zero-wall and mask invariants");
}

// --------------------------------------------------- criterion 12 (TVD gate)
/// Effectively 1D advection channel: nx-by-4 mesh, fields constant along y.
struct Advect1D {
  StructuredMesh mesh;
  SolverMaps maps;
  explicit Advect1D(int nx)
      : mesh(build_mesh(nx, 4, nx, 4.0)),
        maps(SolverMaps::build(mesh, BoundarySet::channel(1.0))) {}

  int face(int i, int iy = 0) const {
    return maps.east_face_of_cell(mesh.cell_at(i, iy), 0);
  }
  Eigen::MatrixXd field(const Eigen::VectorXd& cols) const {
    Eigen::MatrixXd u(mesh.n_cells, 1);
    for (int iy = 0; iy < mesh.ny; ++iy)
      for (int ix = 0; ix < mesh.nx; ++ix)
        u(mesh.cell_at(ix, iy), 0) = cols(ix);
    return u;
  }
};

int count_new_extrema(const Eigen::VectorXd& u) {
  // profile starts monotone non-increasing in x; count interior local extrema
  int n = 0;
  for (int i = 1; i + 1 < u.size(); ++i) {
    bool mx = u(i) > u(i - 1) + 1e-10 && u(i) > u(i + 1) + 1e-10;
    bool mn = u(i) < u(i - 1) - 1e-10 && u(i) < u(i + 1) - 1e-10;
    if (mx || mn) ++n;
  }
  return n;
}

void criterion_tvd_monotonicity(Desk& desk, const MlpParams* trained) {
  // gate: TVD advection of a step creates no new extrema in 200 steps
  Advect1D row(100);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(100);
  for (int i = 0; i < 10; ++i) u(i) = 1.0;
  for (int s = 0; s < 200; ++s) {
    ad::Tape t;
    t.grad_enabled = false;
    ad::Var uv = t.leaf(row.field(u));
    ad::Var bv = boundary_values(t, row.maps, Quantity::Ux, uv);
    ad::Var flux = t.leaf(Eigen::MatrixXd::Constant(row.maps.nf, 1, 1.0));
    ad::Var uf =
        tvd_face_values(t, row.maps, uv, bv, flux, SchemeKind::TvdVanleer);
    Eigen::VectorXd un(100);
    for (int i = 0; i < 100; ++i) {
      double out = i + 1 < 100 ? t.val(uf)(row.face(i), 0) : u(99);
      double in = i > 0 ? t.val(uf)(row.face(i - 1), 0) : 1.0;
      un(i) = u(i) - 0.4 * (out - in);
    }
    u = un;
  }
  int extrema = count_new_extrema(u);
  bool bounded = u.minCoeff() >= -1e-10 && u.maxCoeff() <= 1.0 + 1e-10;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "TVD 200-step advection: %d new extrema, range [%.3e, %.3e]",
                extrema, u.minCoeff(), u.maxCoeff());
  report(12, extrema == 0 && bounded, buf);

  // report-only: the trained scheme on the same profile; faces are read from
  // an interior row so the patches carry full 4x3 stencils
  if (!trained) return;
  Advect1D chan(100);
  ConstraintTransform ct = ConstraintTransform::standard();
  PatchMaps pm = PatchMaps::build(chan.mesh);
  Eigen::VectorXd mid = Eigen::VectorXd::Zero(100);
  for (int i = 0; i < 10; ++i) mid(i) = 1.0;
  for (int s = 0; s < 200; ++s) {
    ad::Tape t;
    t.grad_enabled = false;
    NetVars nv = lift_params(t, *trained, ct);
    ad::Var uv = t.leaf(chan.field(mid));
    ad::Var zero = t.zeros(chan.maps.m);
    ad::Var flux = t.leaf(Eigen::MatrixXd::Constant(chan.maps.nf, 1, 1.0));
    NeuralFaceVelocities nf = modified_inverse(t, chan.maps, pm, nv, uv, zero,
                                               zero, flux, 0.0, true, 0.3);
    Eigen::VectorXd un(100);
    for (int i = 0; i < 100; ++i) {
      double out = i + 1 < 100 ? t.val(nf.ufx)(chan.face(i, 1), 0) : mid(99);
      double in = i > 0 ? t.val(nf.ufx)(chan.face(i - 1, 1), 0) : 1.0;
      un(i) = mid(i) - 0.4 * (out - in);
    }
    mid = un;
    if (!mid.allFinite()) break;
  }
  if (mid.allFinite())
    std::cout << "criterion 12 note: trained scheme on the same profile: "
              << count_new_extrema(mid) << " new extrema, range ["
              << mid.minCoeff() << ", " << mid.maxCoeff() << "]" << std::endl;
  else
    std::cout << "criterion 12 note: trained scheme advection diverged on the "
                 "1D profile (outside its training distribution)" << std::endl;
}

// ------------------------------------------------------------ criteria 6 + 7
void criterion_desk_training(Desk& desk, MlpParams& best_out, bool& have_best) {
  desk.ensure_data();
  TrainConfig tc = desk.rc.training;
  json summary;
  MlpParams best = desk.train_cached("fr4_full", 4, tc, &summary);
  best_out = best;
  have_best = true;

  // 100-step rollout comparison from the first post-transient snapshot
  SolverContext up = desk.coarse_ctx(4, SchemeKind::Upwind);
  SolverContext dc = desk.coarse_ctx(4, SchemeKind::DeepConvection);
  ConstraintTransform ct = ConstraintTransform::standard();
  dc.net = &best;
  dc.ct = &ct;
  int horizon = desk.rc.horizon;
  RolloutMetrics mu = rollout_error(up, desk.data[4].snapshots, horizon);
  RolloutMetrics md = rollout_error(dc, desk.data[4].snapshots, horizon);
  double rx = 100.0 * (1.0 - md.psi_x.back() / mu.psi_x.back());
  double ry = 100.0 * (1.0 - md.psi_y.back() / mu.psi_y.back());
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%d-step psi upwind (x %.2f%%, y %.2f%%) vs learned (x %.2f%%, "
                "y %.2f%%): reduction x %.1f%%, y %.1f%% (gate >= 25%%, stretch "
                "target 50%%)",
                horizon, mu.psi_x.back(), mu.psi_y.back(), md.psi_x.back(),
                md.psi_y.back(), rx, ry);
  report(6, rx >= 25.0 && ry >= 25.0, buf);

  std::ofstream csv((work_dir() / "criterion6_summary.csv").string());
  csv << "step,psi_x_upwind,psi_y_upwind,psi_x_learned,psi_y_learned\n";
  for (int i = 0; i < horizon; ++i)
    csv << i + 1 << ',' << mu.psi_x[i] << ',' << mu.psi_y[i] << ','
        << md.psi_x[i] << ',' << md.psi_y[i] << "\n";

  int epochs = summary.value("epochs_to_beat_baseline", -1);
  std::snprintf(buf, sizeof buf,
                "training loss beat the frozen baseline after %d epoch(s) "
                "(target <= 10)", epochs);
  report(7, epochs >= 1 && epochs <= 10, buf, /*gating=*/false);
}

// ---------------------------------------------------------------- criterion 8
void criterion_sensitivity_trend(Desk& desk) {
  desk.ensure_data();
  ConstraintTransform ct = ConstraintTransform::standard();
  std::map<int, double> base_psi, dc_psi;
  std::string detail;
  for (int fr : {2, 4, 8}) {
    const Dataset& d = desk.data[fr];
    auto starts = window_starts(d.size(), 1);
    SolverContext up = desk.coarse_ctx(fr, SchemeKind::Upwind);
    base_psi[fr] = eval_windows(up, d, starts, 1, {1.0, 1.0});

    TrainConfig tc = desk.rc.training;
    tc.t_schedule = {1};
    tc.epochs_per_stage = {8};
    MlpParams net =
        desk.train_cached("fr" + std::to_string(fr) + "_t1", fr, tc);
    SolverContext dc = desk.coarse_ctx(fr, SchemeKind::DeepConvection);
    dc.net = &net;
    dc.ct = &ct;
    dc_psi[fr] = eval_windows(dc, d, starts, 1, {1.0, 1.0});
    char buf[96];
    std::snprintf(buf, sizeof buf, "F_r=%d base %.4f learned %.4f; ", fr,
                  base_psi[fr], dc_psi[fr]);
    detail += buf;
  }
  bool monotone = base_psi[2] < base_psi[4] && base_psi[4] < base_psi[8];
  bool learned_wins =
      dc_psi[2] <= base_psi[2] && dc_psi[4] <= base_psi[4] && dc_psi[8] <= base_psi[8];
  report(8, monotone && learned_wins,
         detail + (monotone ? "baseline monotone in F_r" : "NOT monotone"));
}

// ---------------------------------------------------------------- criterion 9
// median of the individual step times; a lone scheduler hiccup inside the
// timing window must not decide the criterion
double time_steps(const SolverContext& ctx, State s, int warmup, int timed) {
  for (int i = 0; i < warmup; ++i) s = step(ctx, s);
  std::vector<double> ts(timed);
  for (int i = 0; i < timed; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    s = step(ctx, s);
    ts[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
  }
  std::sort(ts.begin(), ts.end());
  return ts[timed / 2];
}

void criterion_runtime_overhead(Desk& desk, const MlpParams* best) {
  desk.ensure_data();
  SolverContext fine_ctx =
      SolverContext::build(desk.pair(4).fine, desk.rc.boundaries(),
                           desk.rc.numerics());
  double t_fine = time_steps(fine_ctx, desk.fine_last, 1, 5);

  State c0 = desk.data[4].snapshots.front();
  SolverContext up = desk.coarse_ctx(4, SchemeKind::Upwind);
  double t_coarse = time_steps(up, c0, 2, 20);

  SolverContext dc = desk.coarse_ctx(4, SchemeKind::DeepConvection);
  ConstraintTransform ct = ConstraintTransform::standard();
  dc.net = best;
  dc.ct = &ct;
  double t_dc = time_steps(dc, c0, 2, 20);

  double overhead = t_dc / t_coarse;
  double speed_up = t_fine / t_dc, speed_base = t_fine / t_coarse;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "s/step fine %.3f, coarse %.4f, learned %.4f; learned/coarse "
                "%.2fx (gate <= 3), fine/learned %.1fx, fine/coarse %.1fx "
                "(gate >= 20)",
                t_fine, t_coarse, t_dc, overhead, speed_up, speed_base);
  report(9, overhead <= 3.0 && speed_up >= 20.0 && speed_base >= 20.0, buf);
}

// ---------------------------------------------------------------- criterion 5
void criterion_continuity(Desk& desk) {
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "max cell |sum of corrected face fluxes| over all rollouts "
                "%.3e (tol 1e-8)", desk.max_divergence);
  report(5, desk.max_divergence <= 1e-8 && desk.max_divergence > 0.0, buf);
}

}  // namespace

int main() {
  std::cout.setf(std::ios::unitbuf);  // line-by-line progress under ctest
  Desk desk;
  MlpParams best;
  bool have_best = false;

  auto guarded = [&](int id, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what());
    }
  };

  guarded(1, [&] { criterion_constraint_exactness(); });
  guarded(2, [&] { criterion_projection_conservation(desk); });
  guarded(10, [&] { criterion_dataset_arithmetic(); });
  guarded(11, [&] { criterion_limiter_behaviour(); });
  guarded(4, [&] { criterion_gradient_correctness(); });
  guarded(3, [&] { criterion_upwind_recovery(desk); });
  guarded(6, [&] { criterion_desk_training(desk, best, have_best); });
  guarded(8, [&] { criterion_sensitivity_trend(desk); });
  guarded(9, [&] { criterion_runtime_overhead(desk, have_best ? &best : nullptr); });
  guarded(12, [&] { criterion_tvd_monotonicity(desk, have_best ? &best : nullptr); });
  guarded(5, [&] { criterion_continuity(desk); });

  int failed = 0;
  for (const auto& r : results)
    if (!r.pass && r.gating) ++failed;
  std::cout << "\n" << results.size() << " criteria evaluated, " << failed
            << " gating failure(s)" << std::endl;
  return failed == 0 ? 0 : 1;
}
