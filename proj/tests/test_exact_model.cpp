#include <cmath>
#include <complex>

#include <doctest.h>

#include "nqdyn/bose_hubbard.hpp"

using namespace nqdyn;

namespace {

BoseHubbardParams free_params(int N) {
  BoseHubbardParams p;
  p.N = N;
  p.I = 2;
  p.J = 1.0;
  p.U = 0.0;
  return p;
}

}  // namespace

TEST_CASE("free double well populations follow the Rabi law") {
  // Noninteracting bosons all tunnel coherently: n_1(t) = N cos^2(J t / hbar).
  BoseHubbardParams p = free_params(12);
  FockBasis basis(p.N, p.I);
  HamiltonianMatrix H = build_hamiltonian(basis, p);
  Eigen::VectorXcd psi0 = initial_state(basis, InitialStateSpec{});
  TimeGrid grid(0.0, 0.05, 200);
  Trajectory tr = evolve_exact(basis, H, psi0, grid).traj;
  const auto& n1 = tr.column("n_1");
  const auto& n2 = tr.column("n_2");
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    double c = std::cos(tr.t[k]);
    CHECK(std::abs(n1[k] - p.N * c * c) < 1e-9);
    CHECK(std::abs(n1[k] + n2[k] - p.N) < 1e-9);
  }
}

TEST_CASE("measurement invariants: trace, populations, energy") {
  BoseHubbardParams p;
  p.N = 5;
  p.I = 3;
  p.J = 0.7;
  p.U = 0.3;
  p.eps = {0.1, -0.2, 0.05};
  FockBasis basis(p.N, p.I);
  HamiltonianMatrix H = build_hamiltonian(basis, p);

  InitialStateSpec spec;
  spec.kind = InitialKind::FockVector;
  spec.occupations = {2, 2, 1};
  Eigen::VectorXcd psi = initial_state(basis, spec);
  CHECK(std::abs(psi.norm() - 1.0) < 1e-14);

  Measurement m = measure(basis, H, psi);
  double tr = m.spdm.trace().real();
  CHECK(std::abs(tr - 5.0) < 1e-12);
  double pops = 0.0;
  for (double v : m.populations) pops += v;
  CHECK(std::abs(pops - 5.0) < 1e-12);
  CHECK(std::abs(m.populations[0] - 2.0) < 1e-12);

  // Energy must match the quadratic form of the Hamiltonian.
  std::complex<double> e = psi.dot(H.mat.cast<std::complex<double>>() * psi);
  CHECK(std::abs(m.energy - e.real()) < 1e-12);
}

TEST_CASE("exact evolution conserves norm, number, and energy") {
  BoseHubbardParams p;
  p.N = 8;
  p.I = 2;
  p.J = 1.0;
  p.U = 0.5;  // UN/J = 4
  FockBasis basis(p.N, p.I);
  HamiltonianMatrix H = build_hamiltonian(basis, p);
  Eigen::VectorXcd psi0 = initial_state(basis, InitialStateSpec{});
  TimeGrid grid(0.0, 0.02, 400);
  Trajectory tr = evolve_exact(basis, H, psi0, grid).traj;
  const auto& N = tr.column("N_total");
  const auto& E = tr.column("energy");
  const auto& norm = tr.column("norm");
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    CHECK(std::abs(N[k] - 8.0) < 1e-10);
    CHECK(std::abs(E[k] - E[0]) < 1e-10);
    CHECK(std::abs(norm[k] - 1.0) < 1e-12);
  }
}

TEST_CASE("coherent projection initial state is normalized with expected mean") {
  BoseHubbardParams p = free_params(10);
  FockBasis basis(p.N, p.I);
  HamiltonianMatrix H = build_hamiltonian(basis, p);
  InitialStateSpec spec;
  spec.kind = InitialKind::CoherentProjection;
  // Equal-weight coherent amplitudes projected on the N-particle sector give
  // a binomial occupation profile: <n_1> = N/2.
  spec.amplitudes = {std::complex<double>(1.0, 0.0), std::complex<double>(1.0, 0.0)};
  Eigen::VectorXcd psi = initial_state(basis, spec);
  CHECK(std::abs(psi.norm() - 1.0) < 1e-12);
  Measurement m = measure(basis, H, psi);
  CHECK(std::abs(m.populations[0] - 5.0) < 1e-10);
}
