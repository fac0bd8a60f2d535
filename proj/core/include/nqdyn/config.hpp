#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nqdyn/bose_hubbard.hpp"
#include "nqdyn/qmon.hpp"
#include "nqdyn/spectral.hpp"
#include "nqdyn/twopi_solver.hpp"

namespace nqdyn {

enum class JobKind { Exact, Twopi, Qmon, Spectral, Compare };

std::string to_string(JobKind k);
JobKind job_kind_from_string(const std::string& s);

struct GridConfig {
  double t0 = 0.0;
  double dt = 0.0;
  long n_steps = 0;
};

enum class QmonOrder { LO, NLO, Radial };

struct QmonConfig {
  QmonParams params;
  QmonInitial init;
  QmonOrder order = QmonOrder::NLO;
  RadialOptions radial;
};

struct SpectralConfig {
  double a1 = 1.0, a2 = 1.0, M2sq = 0.0, Lambda = 10.0;
  bool zeta = false;
  double zeta_nu = 2.0, zeta_mu = 1.0;
  bool zeta_allow_formal = false;
  bool eird = false;
  double M_eff = 1.0;
  int noncompact_dims = 0;
  std::vector<CompactScale> scales;
  EirdOptions eird_opt;
};

struct CompareConfig {
  std::string oracle_path;                // optional trajectory file
  std::vector<std::string> labels;
  std::vector<std::string> paths;
  std::string observable = "n_1";
  double norm_N = 0.0;                    // 0: read N from each trajectory's provenance
};

// One fully-specified job.  Units: times in hbar/J for the lattice model and
// 1/sqrt(M^2) for the oscillator model; couplings J, U, eps in the energy
// unit fixed by hbar = 1 defaults; all observables dimensionless counts.
struct RunConfig {
  JobKind kind = JobKind::Exact;
  std::string label = "run";
  BoseHubbardParams bh;
  InitialStateSpec bh_initial;
  TwopiScheme scheme = TwopiScheme::HFB;
  bool force_two_time = false;
  QmonConfig qmon;
  SpectralConfig spectral;
  CompareConfig compare;
  GridConfig grid;
  std::size_t budget_bytes = std::size_t(4) << 30;
  std::size_t dim_cap = 2000000;
  bool verify = false;
};

// Parses one config document (strict: unknown keys rejected with their path)
// and expands an optional sweep block into one job per parameter value.
std::vector<RunConfig> parse_config(const std::string& text);

// Canonical JSON echo of a single expanded job; parse_config of this string
// reproduces the config (used in manifests and for resume).
std::string serialize_config(const RunConfig& cfg);

}  // namespace nqdyn
