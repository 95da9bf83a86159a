#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qflow/config.hpp"
#include "qflow/sphere.hpp"

namespace qflow {

// Portable binary snapshot of a flow state: fixed little-endian layout,
// version byte, FNV-1a checksum over the coefficient payload.
struct Snapshot {
  static constexpr std::uint32_t kVersion = 1;
  int n = 0;
  GridMode mode = GridMode::Full2D;
  int L = 0;
  double t = 0.0;
  double dt = 0.0;
  long long step_index = 0;
  int accept_streak = 0;
  unsigned long long config_hash = 0;
  std::vector<double> coeffs;
};

void write_snapshot(const std::string& path, const Snapshot& snap);
Snapshot read_snapshot(const std::string& path);

std::string format_g17(double v);

// CLI entry points. Each returns a process exit code (0 on success; nonzero
// on NumericFailure / InitialDataRejected and on input errors).
int command_run(const RunConfig& cfg, const std::optional<std::string>& resume_path);
int command_morse(const RunConfig& cfg);
int command_normalize(const std::string& snapshot_path, const std::string& out_path);
int command_bubble_fit(const std::string& snapshot_path);
int command_sweep(const RunConfig& base, const std::string& key,
                  const std::vector<std::string>& values, int jobs);

// Output root override: QFLOW_OUTPUT_ROOT environment variable, prefixed to
// the config's output_dir when set.
std::string resolve_output_dir(const std::string& output_dir);

} // namespace qflow
