#pragma once

#include <map>
#include <string>
#include <vector>

#include "nqdyn/config.hpp"
#include "nqdyn/observables.hpp"

namespace nqdyn {

// Per-trajectory summary against the oracle (if one is present).
struct SchemeReport {
  std::string label;
  std::string file_hash;                      // sha256 of the source file, if known
  double norm_N = 1.0;                        // per-run normalization of observables
  double rate = 0.0;                          // exponential damping rate of the envelope
  double t_coll = 0.0;                        // Gaussian collapse time of the envelope
  int n_extrema = 0;
  bool envelope_ok = false;                   // false when too few extrema to fit
  std::map<std::string, double> max_deviation;  // per common column, after /N
  double number_drift = 0.0;
  double energy_drift = 0.0;
  std::string damping_verdict;                // underdamping | overdamping | matched
  std::string h_theorem;                      // nondecreasing | violated ('' if no entropy)
};

struct ComparisonReport {
  std::string observable;
  bool has_oracle = false;
  SchemeReport oracle;
  std::vector<SchemeReport> entries;
  bool has_collapse_slope = false;
  double collapse_log_slope = 0.0;  // d ln(t_coll) / d ln(N); sqrt(N) scaling gives 0.5

  std::string to_json() const;
};

// Compares loaded trajectories on a shared grid.  `oracle` may be null; then
// per-column deviations and damping verdicts are omitted.  Hashes are carried
// through verbatim (one per run, aligned with `runs`; empty strings allowed).
ComparisonReport compare_trajectories(
    const Trajectory* oracle, const std::string& oracle_hash,
    const std::vector<std::pair<std::string, Trajectory>>& runs,
    const std::vector<std::string>& run_hashes, const CompareConfig& cfg);

}  // namespace nqdyn
