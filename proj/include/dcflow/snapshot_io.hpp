#pragma once

#include <string>
#include <vector>

#include "dcflow/config.hpp"

namespace dcflow {

/// One state per file: an 8-byte magic, a JSON header (format version, mesh
/// descriptor, quantity list, time, velocity normalization scales) and the
/// cell values per quantity in canonical row-major active-cell order.
/// Binary mode is explicit little-endian doubles and round-trips bitwise;
/// ASCII mode stores full-precision decimal text.
void write_snapshot(const std::string& path, const StructuredMesh& mesh,
                    const State& s, double time, bool ascii = false);

/// Reads and validates against the expected mesh (mismatch throws IoError).
State read_snapshot(const std::string& path, const StructuredMesh& mesh,
                    double* time = nullptr);

std::string snapshot_filename(int index);

/// Rollout directory bookkeeping: manifest.json records the snapshot count,
/// the time step and the mesh so later commands can validate compatibility.
void write_rollout_manifest(const std::string& dir, const StructuredMesh& mesh,
                            double dt, int count, const nlohmann::json& config_echo);
std::vector<State> read_rollout(const std::string& dir, const StructuredMesh& mesh,
                                double* dt = nullptr);

nlohmann::json mesh_descriptor(const StructuredMesh& mesh);

}  // namespace dcflow
