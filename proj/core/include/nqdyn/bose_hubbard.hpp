#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "nqdyn/fock_basis.hpp"
#include "nqdyn/observables.hpp"
#include "nqdyn/time_grid.hpp"

namespace nqdyn {

// H = -J sum_links (a_i^+ a_{i+1} + h.c.) + sum_i eps_i n_i + (U/2) sum_i n_i(n_i-1)
struct BoseHubbardParams {
  int N = 1;
  int I = 2;
  double J = 1.0;
  double U = 0.0;
  std::vector<double> eps;  // empty means all zero
  bool periodic = false;    // I=2 default open: a single link (see double_link)
  bool double_link = false; // literal periodic sum for I=2 (doubles the link)
  double hbar = 1.0;
};

struct HamiltonianMatrix {
  std::size_t dim = 0;
  Eigen::SparseMatrix<double> mat;  // real symmetric in the Fock basis
  BoseHubbardParams params;
};

HamiltonianMatrix build_hamiltonian(const FockBasis& basis, const BoseHubbardParams& p);

enum class InitialKind { AllInOneWell, FockVector, CoherentProjection };

struct InitialStateSpec {
  InitialKind kind = InitialKind::AllInOneWell;
  std::vector<int> occupations;                  // FockVector
  std::vector<std::complex<double>> amplitudes;  // CoherentProjection
};

Eigen::VectorXcd initial_state(const FockBasis& basis, const InitialStateSpec& spec);

struct Measurement {
  std::vector<double> populations;
  Eigen::MatrixXcd spdm;  // <a_i^+ a_j>, Hermitian, trace N
  double energy = 0.0;
};

Measurement measure(const FockBasis& basis, const HamiltonianMatrix& H,
                    const Eigen::VectorXcd& psi);

struct ExactEvolveResult {
  Trajectory traj;
  Eigen::VectorXcd psi_final;
};

// Dense eigendecomposition below dimension 4000, Lanczos short-time
// propagation (per-step tolerance 1e-10) above.
ExactEvolveResult evolve_exact(const FockBasis& basis, const HamiltonianMatrix& H,
                               const Eigen::VectorXcd& psi0, const TimeGrid& grid);

}  // namespace nqdyn
