#pragma once

#include <string>
#include <vector>

#include "nqdyn/config.hpp"
#include "nqdyn/observables.hpp"

namespace nqdyn {

extern const char* kCodeVersion;

struct JobOptions {
  std::string out_dir = ".";
  long checkpoint_every = 0;  // steps between snapshots; 0 disables
  int threads = 1;            // affects speed only, never results
  long max_steps = 0;  // stop after this many steps, leaving a resumable
                       // checkpoint and an incomplete manifest; 0 disables
};

struct JobResult {
  std::string manifest_path;
  std::vector<std::string> outputs;  // trajectory / report files written
};

// Self-describing columnar text: '#' provenance lines (key = value, sorted,
// including grid_t0/grid_dt/grid_n_steps), a units line, a column-name header,
// then one row per grid point at 17 significant digits.
void write_trajectory_file(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_file(const std::string& path);

// Runs one expanded job and writes its trajectory (or report), a JSON
// manifest with parameter echo, code version, wall time, and sha256 of every
// output, plus periodic checkpoints for the two-time solvers.
JobResult run_job(const RunConfig& cfg, const JobOptions& opt);

// Continues an interrupted run from its manifest; the completed trajectory is
// bit-identical to an uninterrupted run.
JobResult resume_job(const std::string& manifest_path, const JobOptions& opt);

}  // namespace nqdyn
