#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "dcflow/gradcheck.hpp"
#include "dcflow/snapshot_io.hpp"

#ifdef DCFLOW_OPENMP
#include <omp.h>
#endif

namespace dcflow {
namespace {

struct CliOptions {
  std::string config_path;
  std::string checkpoint;
  int threads = 0;
  bool verbose = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int horizon = 0;  // 0 = use config
};

RunConfig load(const CliOptions& opt) {
  std::vector<std::string> warnings;
  RunConfig cfg = load_config(opt.config_path, &warnings);
  if (opt.seed_set) {
    cfg.seed = opt.seed;
    cfg.training.seed = opt.seed;
  }
  if (opt.horizon > 0) cfg.horizon = opt.horizon;
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  if (opt.verbose)
    std::cerr << "fine-mesh CFL = " << cfg.cfl_fine() << "\n";
#ifdef DCFLOW_OPENMP
  if (opt.threads > 0) omp_set_num_threads(opt.threads);
#endif
  return cfg;
}

int cmd_generate(const CliOptions& opt) {
  RunConfig cfg = load(opt);
  MeshPair pair = cfg.meshes();
  PimpleConfig num = cfg.numerics();
  if (num.scheme == SchemeKind::DeepConvection)
    throw ConfigError("data generation runs a classical scheme; pick upwind/linear/tvd");
  SolverContext ctx = SolverContext::build(pair.fine, cfg.boundaries(), num);

  std::filesystem::create_directories(cfg.data_dir);
  std::ofstream res_log(cfg.data_dir + "/residuals.csv");
  res_log << "step,time,max_divergence,pressure_iters,momentum_iters\n";

  State s = State::uniform(pair.fine, cfg.inlet_velocity, 0.0);
  int written = 0;
  try {
    for (int i = 0; i < cfg.steps; ++i) {
      StepDiagnostics diag;
      s = step(ctx, s, &diag);
      write_snapshot(cfg.data_dir + "/" + snapshot_filename(i), pair.fine, s,
                     (i + 1) * cfg.dt);
      ++written;
      res_log << i + 1 << ',' << (i + 1) * cfg.dt << ',' << diag.max_divergence
              << ',' << diag.pressure.iterations << ','
              << diag.momentum_x.iterations << '\n';
      if (opt.verbose && (i + 1) % 10 == 0)
        std::cerr << "step " << i + 1 << "/" << cfg.steps
                  << " max_div=" << diag.max_divergence << "\n";
    }
  } catch (const std::exception& e) {
    // keep the partial rollout on disk so the failure can be inspected
    write_rollout_manifest(cfg.data_dir, pair.fine, cfg.dt, written, cfg.raw);
    std::cerr << "solver failure after " << written << " steps: " << e.what()
              << "\n";
    return 2;
  }
  write_rollout_manifest(cfg.data_dir, pair.fine, cfg.dt, written, cfg.raw);
  std::cout << "wrote " << written << " snapshots to " << cfg.data_dir << "\n";
  return 0;
}

int cmd_train(const CliOptions& opt) {
  RunConfig cfg = load(opt);
  MeshPair pair = cfg.meshes();
  std::vector<State> fine = read_rollout(cfg.data_dir, pair.fine);
  Dataset data = build_dataset(pair, fine, cfg.discard);

  TrainResult result = train(pair.coarse, cfg.boundaries(), cfg.numerics(), data,
                             cfg.arch, cfg.training);
  std::cout << "parameters: " << result.best.count() << "\n"
            << "loss weights: wx=" << result.weights_used.wx
            << " wy=" << result.weights_used.wy << "\n"
            << "baseline loss (horizon 1): " << result.baseline_loss_t1 << "\n"
            << "epochs to beat baseline: " << result.epochs_to_beat_baseline
            << "\n"
            << "best loss: " << result.best_loss << "\n"
            << "checkpoint: " << cfg.out_dir << "/best.dcnet\n";
  return 0;
}

double cum_ratio(double num, double den) { return den > 0 ? 100.0 * num / den : 0.0; }

int cmd_evaluate(const CliOptions& opt) {
  RunConfig cfg = load(opt);
  if (opt.checkpoint.empty()) throw ConfigError("evaluate requires --checkpoint");
  MeshPair pair = cfg.meshes();
  std::vector<State> fine = read_rollout(cfg.data_dir, pair.fine);
  Dataset data = build_dataset(pair, fine, cfg.discard);
  int horizon = std::min(cfg.horizon, data.size() - 1);
  if (horizon < 1) throw ConfigError("not enough snapshots for the horizon");

  MlpParams net = MlpParams::load(opt.checkpoint);
  ConstraintTransform ct = ConstraintTransform::standard(net.arch.stencil);

  PimpleConfig base_num = cfg.numerics();
  if (base_num.scheme == SchemeKind::DeepConvection)
    base_num.scheme = SchemeKind::Upwind;
  SolverContext ctx_base = SolverContext::build(pair.coarse, cfg.boundaries(),
                                                base_num);
  PimpleConfig dc_num = base_num;
  dc_num.scheme = SchemeKind::DeepConvection;
  SolverContext ctx_dc = SolverContext::build(pair.coarse, cfg.boundaries(), dc_num);
  ctx_dc.net = &net;
  ctx_dc.ct = &ct;

  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream csv(cfg.out_dir + "/evaluate.csv");
  csv << "step,time";
  for (const char* m : {"base", "dc"})
    for (const char* q : {"ux", "uy", "p", "k", "omega"})
      csv << ",psi_" << q << "_" << m << ",psi_inst_" << q << "_" << m;
  csv << "\n";

  State s_base = data.snapshots[0], s_dc = data.snapshots[0];
  constexpr int kq = kNumQuantities;
  double num[2][kq] = {}, den[2][kq] = {};
  auto fields = [](const State& s) {
    return std::array<const Eigen::ArrayXd*, kq>{&s.ux, &s.uy, &s.p, &s.k, &s.w};
  };
  for (int j = 1; j <= horizon; ++j) {
    s_base = step(ctx_base, s_base);
    s_dc = step(ctx_dc, s_dc);
    csv << j << ',' << j * cfg.dt;
    const State* preds[2] = {&s_base, &s_dc};
    auto truth = fields(data.snapshots[j]);
    for (int m = 0; m < 2; ++m) {
      auto pred = fields(*preds[m]);
      for (int q = 0; q < kq; ++q) {
        double n1 = (*truth[q] - *pred[q]).abs().sum();
        double d1 = truth[q]->abs().sum();
        num[m][q] += n1;
        den[m][q] += d1;
        csv << ',' << cum_ratio(num[m][q], den[m][q]) << ',' << cum_ratio(n1, d1);
      }
    }
    csv << "\n";
  }

  // velocity profile along the configured y = const line at the horizon
  std::ofstream prof(cfg.out_dir + "/profile.csv");
  prof << "x,ux_truth,ux_base,ux_dc,uy_truth,uy_base,uy_dc\n";
  const StructuredMesh& cm = pair.coarse;
  int iy = std::clamp((int)(cfg.profile_y / cm.dy), 0, cm.ny - 1);
  for (int ix = 0; ix < cm.nx; ++ix) {
    int c = cm.cell_at(ix, iy);
    if (c < 0) continue;
    const State& tr = data.snapshots[horizon];
    prof << cm.cell_cx(c) << ',' << tr.ux(c) << ',' << s_base.ux(c) << ','
         << s_dc.ux(c) << ',' << tr.uy(c) << ',' << s_base.uy(c) << ','
         << s_dc.uy(c) << "\n";
  }

  double px_b = cum_ratio(num[0][0], den[0][0]), px_d = cum_ratio(num[1][0], den[1][0]);
  double py_b = cum_ratio(num[0][1], den[0][1]), py_d = cum_ratio(num[1][1], den[1][1]);
  std::cout << "horizon " << horizon << " cumulative psi:\n"
            << "  ux: baseline " << px_b << "  learned " << px_d << "\n"
            << "  uy: baseline " << py_b << "  learned " << py_d << "\n"
            << "wrote " << cfg.out_dir << "/evaluate.csv and profile.csv\n";
  return 0;
}

int cmd_benchmark(const CliOptions& opt) {
  RunConfig cfg = load(opt);
  MeshPair pair = cfg.meshes();
  PimpleConfig num = cfg.numerics();
  if (num.scheme == SchemeKind::DeepConvection) num.scheme = SchemeKind::Upwind;

  MlpParams net = opt.checkpoint.empty()
                      ? MlpParams::init(cfg.arch, cfg.seed)
                      : MlpParams::load(opt.checkpoint);
  ConstraintTransform ct = ConstraintTransform::standard(net.arch.stencil);
  PimpleConfig dc_num = num;
  dc_num.scheme = SchemeKind::DeepConvection;

  auto time_per_step = [&](const StructuredMesh& mesh, const PimpleConfig& pc,
                           bool with_net, int steps, int warmup) {
    SolverContext ctx = SolverContext::build(mesh, cfg.boundaries(), pc);
    if (with_net) {
      ctx.net = &net;
      ctx.ct = &ct;
    }
    State s = State::uniform(mesh, cfg.inlet_velocity, 0.0);
    for (int i = 0; i < warmup; ++i) s = step(ctx, s);
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < steps; ++i) s = step(ctx, s);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
               .count() /
           steps;
  };

  int steps = 10, warmup = 2;
  double t_fine = time_per_step(pair.fine, num, false, steps, warmup);
  double t_coarse = time_per_step(pair.coarse, num, false, steps, warmup);
  double t_dc = time_per_step(pair.coarse, dc_num, true, steps, warmup);

  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream csv(cfg.out_dir + "/benchmark.csv");
  csv << "model,seconds_per_step\n"
      << "fine_baseline," << t_fine << "\n"
      << "coarse_baseline," << t_coarse << "\n"
      << "deep_convection," << t_dc << "\n";
  std::cout << "seconds per step: fine " << t_fine << ", coarse " << t_coarse
            << ", learned " << t_dc << "\n"
            << "ratios: learned/coarse " << t_dc / t_coarse
            << ", fine/coarse " << t_fine / t_coarse << ", fine/learned "
            << t_fine / t_dc << "\n";
  return 0;
}

int cmd_gradcheck(const CliOptions& opt) {
  RunConfig cfg = load(opt);
  // self-contained small laminar case: a one-cell obstacle makes the flow
  // genuinely two-dimensional; the truth trajectory is a short baseline
  // rollout on the same mesh
  ObstacleSpec obst{true, 0.25, 0.375, 0.375, 0.5};
  StructuredMesh mesh = build_mesh(8, 8, 1.0, 1.0, obst);
  BoundarySet bset = BoundarySet::channel(cfg.inlet_velocity);
  PimpleConfig num = cfg.numerics();
  num.turbulence = false;
  num.scheme = SchemeKind::Upwind;
  num.dt = 0.01;
  SolverContext ctx_up = SolverContext::build(mesh, bset, num);
  std::vector<State> traj =
      rollout(ctx_up, State::uniform(mesh, cfg.inlet_velocity, 0.0), 6);
  Dataset data;
  data.snapshots.assign(traj.begin() + 2, traj.end());

  PimpleConfig dc_num = num;
  dc_num.scheme = SchemeKind::DeepConvection;
  SolverContext ctx = SolverContext::build(mesh, bset, dc_num);
  MlpParams params = MlpParams::init(cfg.arch, cfg.seed + 1);
  ConstraintTransform ct = ConstraintTransform::standard(cfg.arch.stencil);
  GradCheckReport rep =
      gradcheck(ctx, params, ct, data, 0, 2, {1.0, 1.0}, {});

  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream csv(cfg.out_dir + "/gradcheck.csv");
  csv << "param_index,analytic,finite_diff,rel_error\n";
  for (const auto& r : rep.rows)
    csv << r.param_index << ',' << r.analytic << ',' << r.finite_diff << ','
        << r.rel_error << "\n";
  std::cout << "checked " << rep.rows.size() << " parameters, max rel error "
            << rep.max_rel_error << " (worst index " << rep.worst_index << "): "
            << (rep.pass ? "PASS" : "FAIL") << "\n";
  return rep.pass ? 0 : 2;
}

int run(int argc, char** argv) {
  CLI::App app{"Differentiable finite-volume flow solver with a learned "
               "convection scheme"};
  app.require_subcommand(1);
  CliOptions opt;

  auto add_common = [&](CLI::App* sub, bool need_config = true) {
    auto* c = sub->add_option("--config", opt.config_path, "run configuration file");
    if (need_config) c->required();
    sub->add_option("--checkpoint", opt.checkpoint, "network parameter file");
    sub->add_option("--seed", opt.seed, "override the run seed")
        ->each([&](const std::string&) { opt.seed_set = true; });
    sub->add_option("--threads", opt.threads, "worker thread count");
    sub->add_option("--horizon", opt.horizon, "evaluation horizon override");
    sub->add_flag("--verbose", opt.verbose, "chatty progress output");
  };

  auto* gen = app.add_subcommand("generate", "run the fine-mesh rollout and write snapshots");
  auto* tr = app.add_subcommand("train", "train the learned scheme on a rollout");
  auto* ev = app.add_subcommand("evaluate", "compare learned vs baseline rollouts");
  auto* be = app.add_subcommand("benchmark", "per-step timing of fine/coarse/learned");
  auto* gc = app.add_subcommand("gradcheck", "tape gradient vs finite differences");
  for (auto* sub : {gen, tr, ev, be, gc}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) return cmd_generate(opt);
    if (tr->parsed()) return cmd_train(opt);
    if (ev->parsed()) return cmd_evaluate(opt);
    if (be->parsed()) return cmd_benchmark(opt);
    if (gc->parsed()) return cmd_gradcheck(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace
}  // namespace dcflow

int main(int argc, char** argv) { return dcflow::run(argc, argv); }
