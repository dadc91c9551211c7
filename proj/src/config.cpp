#include "dcflow/config.hpp"

#include <cctype>
#include <fstream>

extern char** environ;

namespace dcflow {

namespace {

using nlohmann::json;

json default_doc() {
  return {
      {"case",
       {{"lx", 16.0},
        {"ly", 8.0},
        {"obstacle",
         {{"present", true},
          {"x0", 3.0},
          {"y0", 3.5},
          {"x1", 4.0},
          {"y1", 4.5}}}}},
      {"physics", {{"nu", 0.01}, {"inlet_velocity", 1.0}, {"turbulence", false}}},
      {"mesh", {{"fine_nx", 256}, {"fine_ny", 128}, {"reduction_factor", 4}}},
      {"time", {{"dt", 0.05}, {"steps", 200}, {"discard", 50}}},
      {"numerics",
       {{"scheme", "upwind"},
        {"n_correctors", 2},
        {"tol_pressure", 1e-10},
        {"tol_momentum", 1e-10},
        {"limiter", true},
        {"limiter_lambda", 0.3},
        {"p_ref", 0.0}}},
      {"network", {{"encoder", {53, 49, 45, 41}}, {"generator", {31, 32}}}},
      {"training",
       {{"t_schedule", {1, 2, 3, 4}},
        {"epochs_per_stage", {40, 25, 25, 25}},
        {"batch_size", 30},
        {"lr0", 0.01},
        {"patience", 6},
        {"lr_decay", 0.5},
        {"val_fraction", 0.1},
        {"rel_improvement", 1e-3},
        {"auto_weights", true},
        {"wx", 1.0},
        {"wy", 1.0}}},
      {"evaluate", {{"horizon", 100}, {"profile_y", 4.0}}},
      {"paths", {{"data_dir", "data"}, {"out_dir", "out"}}},
      {"seed", 0}};
}

void merge_into(json& base, const json& user, const std::string& where) {
  if (!user.is_object())
    throw ConfigError(where + ": expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    std::string path = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key()))
      throw ConfigError("unknown config key: " + path);
    if (base[it.key()].is_object() && !it.value().is_null()) {
      merge_into(base[it.key()], it.value(), path);
    } else {
      base[it.key()] = it.value();
    }
  }
}

template <typename T>
T get(const json& doc, const json::json_pointer& p) {
  try {
    return doc.at(p).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key " + p.to_string() + ": " + e.what());
  }
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace

PimpleConfig RunConfig::numerics() const {
  PimpleConfig c;
  c.dt = dt;
  c.nu = nu;
  c.n_correctors = n_correctors;
  c.tol_momentum = tol_momentum;
  c.tol_pressure = tol_pressure;
  c.turbulence = turbulence;
  c.scheme = scheme_from_name(scheme);
  c.limiter = limiter;
  c.limiter_lambda = limiter_lambda;
  c.p_ref = p_ref;
  return c;
}

BoundarySet RunConfig::boundaries() const {
  return BoundarySet::channel(inlet_velocity);
}

MeshPair RunConfig::meshes() const {
  require(fine_nx % reduction_factor == 0 && fine_ny % reduction_factor == 0,
          "fine mesh dimensions must be divisible by the reduction factor");
  try {
    return build_pair(fine_nx / reduction_factor, fine_ny / reduction_factor,
                      reduction_factor, lx, ly, obstacle);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("mesh construction: ") + e.what());
  }
}

void apply_env_overrides(nlohmann::json& doc) {
  const std::string prefix = "DCFLOW_";
  for (char** env = environ; *env; ++env) {
    std::string entry(*env);
    auto eq = entry.find('=');
    if (eq == std::string::npos || entry.rfind(prefix, 0) != 0) continue;
    std::string key = entry.substr(prefix.size(), eq - prefix.size());
    std::string value = entry.substr(eq + 1);

    std::string pointer;
    std::string part;
    auto flush = [&]() {
      for (auto& ch : part) ch = (char)std::tolower((unsigned char)ch);
      pointer += "/" + part;
      part.clear();
    };
    for (std::size_t i = 0; i < key.size(); ++i) {
      if (i + 1 < key.size() && key[i] == '_' && key[i + 1] == '_') {
        flush();
        ++i;
      } else {
        part += key[i];
      }
    }
    flush();

    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(value);
    } catch (const nlohmann::json::exception&) {
      parsed = value;
    }
    doc[nlohmann::json::json_pointer(pointer)] = parsed;
  }
}

RunConfig config_from_json(nlohmann::json user, std::vector<std::string>* warnings) {
  json doc = default_doc();
  merge_into(doc, user, "");
  apply_env_overrides(doc);

  using jp = json::json_pointer;
  RunConfig c;
  c.lx = get<double>(doc, jp("/case/lx"));
  c.ly = get<double>(doc, jp("/case/ly"));
  c.obstacle.present = get<bool>(doc, jp("/case/obstacle/present"));
  c.obstacle.x0 = get<double>(doc, jp("/case/obstacle/x0"));
  c.obstacle.y0 = get<double>(doc, jp("/case/obstacle/y0"));
  c.obstacle.x1 = get<double>(doc, jp("/case/obstacle/x1"));
  c.obstacle.y1 = get<double>(doc, jp("/case/obstacle/y1"));
  c.nu = get<double>(doc, jp("/physics/nu"));
  c.inlet_velocity = get<double>(doc, jp("/physics/inlet_velocity"));
  c.turbulence = get<bool>(doc, jp("/physics/turbulence"));
  c.fine_nx = get<int>(doc, jp("/mesh/fine_nx"));
  c.fine_ny = get<int>(doc, jp("/mesh/fine_ny"));
  c.reduction_factor = get<int>(doc, jp("/mesh/reduction_factor"));
  c.dt = get<double>(doc, jp("/time/dt"));
  c.steps = get<int>(doc, jp("/time/steps"));
  c.discard = get<int>(doc, jp("/time/discard"));
  c.scheme = get<std::string>(doc, jp("/numerics/scheme"));
  c.n_correctors = get<int>(doc, jp("/numerics/n_correctors"));
  c.tol_pressure = get<double>(doc, jp("/numerics/tol_pressure"));
  c.tol_momentum = get<double>(doc, jp("/numerics/tol_momentum"));
  c.limiter = get<bool>(doc, jp("/numerics/limiter"));
  c.limiter_lambda = get<double>(doc, jp("/numerics/limiter_lambda"));
  c.p_ref = get<double>(doc, jp("/numerics/p_ref"));
  c.arch.encoder = get<std::vector<int>>(doc, jp("/network/encoder"));
  c.arch.generator = get<std::vector<int>>(doc, jp("/network/generator"));
  c.training.t_schedule = get<std::vector<int>>(doc, jp("/training/t_schedule"));
  c.training.epochs_per_stage =
      get<std::vector<int>>(doc, jp("/training/epochs_per_stage"));
  c.training.batch_size = get<int>(doc, jp("/training/batch_size"));
  c.training.lr0 = get<double>(doc, jp("/training/lr0"));
  c.training.patience = get<int>(doc, jp("/training/patience"));
  c.training.lr_decay = get<double>(doc, jp("/training/lr_decay"));
  c.training.val_fraction = get<double>(doc, jp("/training/val_fraction"));
  c.training.rel_improvement = get<double>(doc, jp("/training/rel_improvement"));
  c.training.auto_weights = get<bool>(doc, jp("/training/auto_weights"));
  c.training.weights.wx = get<double>(doc, jp("/training/wx"));
  c.training.weights.wy = get<double>(doc, jp("/training/wy"));
  c.seed = get<std::uint64_t>(doc, jp("/seed"));
  c.training.seed = c.seed;
  c.data_dir = get<std::string>(doc, jp("/paths/data_dir"));
  c.out_dir = get<std::string>(doc, jp("/paths/out_dir"));
  c.training.out_dir = c.out_dir;
  c.horizon = get<int>(doc, jp("/evaluate/horizon"));
  c.profile_y = get<double>(doc, jp("/evaluate/profile_y"));
  c.raw = doc;

  require(c.lx > 0 && c.ly > 0, "domain size must be positive");
  require(c.nu > 0, "viscosity must be positive");
  require(c.fine_nx >= 4 && c.fine_ny >= 4, "fine mesh must be at least 4x4");
  require(c.reduction_factor >= 1, "reduction factor must be >= 1");
  require(c.dt > 0, "dt must be positive");
  require(c.steps > 0 && c.discard >= 0 && c.discard < c.steps,
          "need steps > discard >= 0");
  require(c.n_correctors >= 1, "need at least one pressure corrector");
  require(c.tol_pressure > 0 && c.tol_momentum > 0,
          "solver tolerances must be positive");
  require(!c.arch.encoder.empty() && !c.arch.generator.empty(),
          "network layer lists must be non-empty");
  require(!c.training.t_schedule.empty(), "stage schedule must be non-empty");
  require(c.training.batch_size >= 1, "batch size must be >= 1");
  require(c.training.lr0 >= 0 && c.training.lr_decay > 0 &&
              c.training.lr_decay <= 1,
          "bad learning-rate settings");
  require(c.training.patience >= 1, "patience must be >= 1");
  require(c.training.val_fraction >= 0 && c.training.val_fraction < 1,
          "validation fraction must lie in [0, 1)");
  if (c.obstacle.present)
    require(c.obstacle.x0 < c.obstacle.x1 && c.obstacle.y0 < c.obstacle.y1,
            "obstacle corners must be ordered");
  try {
    scheme_from_name(c.scheme);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (warnings) {
    if (c.cfl_fine() > 1.0)
      warnings->push_back("fine-mesh CFL " + std::to_string(c.cfl_fine()) +
                          " exceeds 1.0");
  }
  return c;
}

RunConfig load_config(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(doc, warnings);
}

}  // namespace dcflow
