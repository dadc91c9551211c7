#include "dcflow/snapshot_io.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace dcflow {

namespace {

constexpr char kSnapMagic[8] = {'D', 'C', 'S', 'N', 'A', 'P', '0', '1'};
const char* const kQuantities[] = {"ux", "uy", "p", "k", "omega"};

const Eigen::ArrayXd& field_of(const State& s, int q) {
  switch (q) {
    case 0: return s.ux;
    case 1: return s.uy;
    case 2: return s.p;
    case 3: return s.k;
    default: return s.w;
  }
}

Eigen::ArrayXd& field_of(State& s, int q) {
  switch (q) {
    case 0: return s.ux;
    case 1: return s.uy;
    case 2: return s.p;
    case 3: return s.k;
    default: return s.w;
  }
}

static_assert(std::endian::native == std::endian::little,
              "little-endian host assumed for the binary snapshot format");

}  // namespace

nlohmann::json mesh_descriptor(const StructuredMesh& mesh) {
  nlohmann::json m = {{"nx", mesh.nx},
                      {"ny", mesh.ny},
                      {"lx", mesh.lx},
                      {"ly", mesh.ly},
                      {"n_cells", mesh.n_cells},
                      {"obstacle", nullptr}};
  if (mesh.obstacle.present)
    m["obstacle"] = {{"x0", mesh.obstacle.x0},
                     {"y0", mesh.obstacle.y0},
                     {"x1", mesh.obstacle.x1},
                     {"y1", mesh.obstacle.y1}};
  return m;
}

std::string snapshot_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%06d.dcsnap", index);
  return buf;
}

void write_snapshot(const std::string& path, const StructuredMesh& mesh,
                    const State& s, double time, bool ascii) {
  if ((int)s.ux.size() != mesh.n_cells)
    throw IoError("snapshot state does not match the mesh");
  nlohmann::json header = {{"version", 1},
                           {"mode", ascii ? "ascii" : "binary"},
                           {"mesh", mesh_descriptor(mesh)},
                           {"quantities", kQuantities},
                           {"time", time},
                           {"scales",
                            {{"ux", normalize_velocity(s.ux).scale},
                             {"uy", normalize_velocity(s.uy).scale}}}};
  std::string htext = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kSnapMagic, 8);
  std::uint32_t hlen = (std::uint32_t)htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), 4);
  out.write(htext.data(), hlen);
  for (int q = 0; q < kNumQuantities; ++q) {
    const Eigen::ArrayXd& v = field_of(s, q);
    if (ascii) {
      char buf[40];
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v(i));
        out << buf;
      }
    } else {
      out.write(reinterpret_cast<const char*>(v.data()),
                (std::streamsize)v.size() * 8);
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

State read_snapshot(const std::string& path, const StructuredMesh& mesh,
                    double* time) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kSnapMagic, 8) != 0)
    throw IoError(path + ": not a snapshot file");
  std::uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 4);
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  if (!in) throw IoError(path + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(htext);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": bad header: " + e.what());
  }
  if (header["mesh"] != mesh_descriptor(mesh))
    throw IoError(path + ": snapshot mesh does not match the expected mesh");
  bool ascii = header["mode"] == "ascii";
  if (time) *time = header["time"].get<double>();

  State s = State::zero(mesh);
  for (int q = 0; q < kNumQuantities; ++q) {
    Eigen::ArrayXd& v = field_of(s, q);
    if (ascii) {
      for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!(in >> v(i))) throw IoError(path + ": truncated ascii payload");
    } else {
      in.read(reinterpret_cast<char*>(v.data()), (std::streamsize)v.size() * 8);
      if (!in) throw IoError(path + ": truncated binary payload");
    }
  }
  return s;
}

void write_rollout_manifest(const std::string& dir, const StructuredMesh& mesh,
                            double dt, int count,
                            const nlohmann::json& config_echo) {
  nlohmann::json m = {{"version", 1},
                      {"count", count},
                      {"dt", dt},
                      {"mesh", mesh_descriptor(mesh)},
                      {"config", config_echo}};
  std::ofstream out(dir + "/manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir);
  out << m.dump(2) << '\n';
}

std::vector<State> read_rollout(const std::string& dir, const StructuredMesh& mesh,
                                double* dt) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw IoError("missing rollout manifest in " + dir);
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(dir + "/manifest.json: " + e.what());
  }
  if (m["mesh"] != mesh_descriptor(mesh))
    throw IoError(dir + ": rollout mesh does not match the expected mesh");
  if (dt) *dt = m["dt"].get<double>();
  int count = m["count"].get<int>();
  std::vector<State> states;
  states.reserve(count);
  for (int i = 0; i < count; ++i)
    states.push_back(
        read_snapshot(dir + "/" + snapshot_filename(i), mesh));
  return states;
}

}  // namespace dcflow
