#include "nqdyn/bose_hubbard.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "nqdyn/errors.hpp"
#include "nqdyn/krylov.hpp"

namespace nqdyn {

namespace {

std::vector<std::pair<int, int>> hopping_links(const BoseHubbardParams& p) {
  std::vector<std::pair<int, int>> links;
  for (int i = 0; i + 1 < p.I; ++i) links.emplace_back(i, i + 1);
  if (p.I == 2) {
    if (p.double_link) links.emplace_back(1, 0);  // literal periodic sum on 2 sites
  } else if (p.periodic && p.I > 2) {
    links.emplace_back(p.I - 1, 0);
  }
  return links;
}

}  // namespace

HamiltonianMatrix build_hamiltonian(const FockBasis& basis, const BoseHubbardParams& p) {
  if (!p.eps.empty() && static_cast<int>(p.eps.size()) != p.I)
    throw ValidationError("build_hamiltonian: eps length must equal I");
  const std::size_t dim = basis.dim();
  const auto links = hopping_links(p);

  std::vector<Eigen::Triplet<double>> trip;
  std::vector<int> occ(p.I), occ2(p.I);
  for (std::size_t s = 0; s < dim; ++s) {
    basis.occupation(s, occ.data());
    double diag = 0.0;
    for (int i = 0; i < p.I; ++i) {
      double n = occ[i];
      if (!p.eps.empty()) diag += p.eps[i] * n;
      diag += 0.5 * p.U * n * (n - 1.0);
    }
    trip.emplace_back(static_cast<int>(s), static_cast<int>(s), diag);
    for (auto [i, j] : links) {
      // a_j^+ a_i and a_i^+ a_j on state s
      for (int dir = 0; dir < 2; ++dir) {
        int from = dir == 0 ? i : j;
        int to = dir == 0 ? j : i;
        if (occ[from] == 0) continue;
        occ2 = occ;
        occ2[from] -= 1;
        occ2[to] += 1;
        std::size_t s2 = basis.index(occ2.data());
        double amp = -p.J * std::sqrt(static_cast<double>(occ[from]) * (occ[to] + 1.0));
        trip.emplace_back(static_cast<int>(s2), static_cast<int>(s), amp);
      }
    }
  }
  HamiltonianMatrix H;
  H.dim = dim;
  H.params = p;
  H.mat.resize(static_cast<long>(dim), static_cast<long>(dim));
  H.mat.setFromTriplets(trip.begin(), trip.end());
  return H;
}

Eigen::VectorXcd initial_state(const FockBasis& basis, const InitialStateSpec& spec) {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<long>(basis.dim()));
  switch (spec.kind) {
    case InitialKind::AllInOneWell: {
      std::vector<int> occ(basis.sites(), 0);
      occ[0] = basis.particles();
      psi(static_cast<long>(basis.index(occ.data()))) = 1.0;
      break;
    }
    case InitialKind::FockVector: {
      if (static_cast<int>(spec.occupations.size()) != basis.sites())
        throw ValidationError("initial_state: occupation vector length mismatch");
      int sum = 0;
      for (int n : spec.occupations) {
        if (n < 0) throw ValidationError("initial_state: negative occupation");
        sum += n;
      }
      if (sum != basis.particles())
        throw ValidationError("initial_state: occupations sum to " + std::to_string(sum) +
                              ", basis has N = " + std::to_string(basis.particles()));
      psi(static_cast<long>(basis.index(spec.occupations.data()))) = 1.0;
      break;
    }
    case InitialKind::CoherentProjection: {
      if (static_cast<int>(spec.amplitudes.size()) != basis.sites())
        throw ValidationError("initial_state: amplitude vector length mismatch");
      std::vector<int> occ(basis.sites());
      for (std::size_t s = 0; s < basis.dim(); ++s) {
        basis.occupation(s, occ.data());
        std::complex<double> c = 1.0;
        for (int i = 0; i < basis.sites(); ++i) {
          for (int m = 0; m < occ[i]; ++m)
            c *= spec.amplitudes[i] / std::sqrt(static_cast<double>(m + 1));
        }
        psi(static_cast<long>(s)) = c;
      }
      double nrm = psi.norm();
      if (nrm < 1e-300)
        throw ValidationError("initial_state: coherent projection has zero weight in this N sector");
      psi /= nrm;
      break;
    }
  }
  return psi;
}

Measurement measure(const FockBasis& basis, const HamiltonianMatrix& H,
                    const Eigen::VectorXcd& psi) {
  const int I = basis.sites();
  Measurement m;
  m.populations.assign(I, 0.0);
  m.spdm = Eigen::MatrixXcd::Zero(I, I);
  std::vector<int> occ(I), occ2(I);
  for (std::size_t s = 0; s < basis.dim(); ++s) {
    std::complex<double> amp = psi(static_cast<long>(s));
    if (amp == std::complex<double>(0.0)) continue;
    basis.occupation(s, occ.data());
    for (int i = 0; i < I; ++i) {
      m.populations[i] += std::norm(amp) * static_cast<double>(occ[i]);
      m.spdm(i, i) += std::norm(amp) * static_cast<double>(occ[i]);
    }
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < I; ++j) {
        if (i == j || occ[j] == 0) continue;
        occ2 = occ;
        occ2[j] -= 1;
        occ2[i] += 1;
        std::size_t s2 = basis.index(occ2.data());
        double mat = std::sqrt(static_cast<double>(occ[j]) * (occ[i] + 1.0));
        m.spdm(i, j) += std::conj(psi(static_cast<long>(s2))) * amp * mat;
      }
  }
  m.energy = std::real(psi.dot(H.mat.selfadjointView<Eigen::Lower>() * psi));
  return m;
}

ExactEvolveResult evolve_exact(const FockBasis& basis, const HamiltonianMatrix& H,
                               const Eigen::VectorXcd& psi0, const TimeGrid& grid) {
  const int I = basis.sites();
  ExactEvolveResult out;
  out.traj.grid = grid;
  out.traj.provenance["job"] = "exact";
  out.traj.provenance["N"] = std::to_string(H.params.N);
  out.traj.provenance["I"] = std::to_string(H.params.I);
  out.traj.provenance["J"] = std::to_string(H.params.J);
  out.traj.provenance["U"] = std::to_string(H.params.U);
  const double hbar = H.params.hbar;

  const bool dense = basis.dim() < 4000;
  Eigen::MatrixXd evecs;
  Eigen::VectorXd evals;
  Eigen::VectorXcd coeff;
  if (dense) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(H.mat));
    evecs = es.eigenvectors();
    evals = es.eigenvalues();
    coeff = evecs.transpose().cast<std::complex<double>>() * psi0;
  }

  Eigen::VectorXcd psi = psi0;
  for (long k = 0; k <= grid.n_steps(); ++k) {
    if (k > 0) {
      if (dense) {
        double t = grid.time(k) - grid.t0();
        Eigen::VectorXcd ph(evals.size());
        for (long i = 0; i < evals.size(); ++i)
          ph(i) = std::exp(std::complex<double>(0.0, -evals(i) * t / hbar)) * coeff(i);
        psi = evecs.cast<std::complex<double>>() * ph;
      } else {
        psi = lanczos_expv(H.mat, psi, grid.dt(), hbar);
      }
    }
    Measurement m = measure(basis, H, psi);
    out.traj.t.push_back(grid.time(k));
    double ntot = 0.0;
    for (int i = 0; i < I; ++i) {
      out.traj.column("n_" + std::to_string(i + 1)).push_back(m.populations[i]);
      ntot += m.populations[i];
    }
    auto nq = quasimomentum_intensity(m.spdm);
    for (int i = 0; i < I; ++i)
      out.traj.column("nq_" + std::to_string(i)).push_back(nq[i]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ess(m.spdm);
    out.traj.column("cond_total").push_back(ess.eigenvalues().maxCoeff());
    out.traj.column("N_total").push_back(ntot);
    out.traj.column("energy").push_back(m.energy);
    out.traj.column("norm").push_back(psi.norm());
  }
  out.psi_final = psi;
  return out;
}

}  // namespace nqdyn
