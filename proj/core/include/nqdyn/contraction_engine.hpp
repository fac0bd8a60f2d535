#pragma once

#include <complex>
#include <vector>

namespace nqdyn {

// Programmatic Wick contraction over the 2-component field algebra
// (upper indices a in {0,1}: 0 = Phi, 1 = Phi^+; raising/lowering via
// sigma^{01} = sigma^{10} = 1).  Vertices of the shifted action:
//   V3 = -(U/Nc) sigma_{ab} sigma_{cd} phi^a  psi^b psi^c psi^d
//   V4 = -(U/(4 Nc)) sigma_{ab} sigma_{cd} psi^a psi^b psi^c psi^d
// with contraction value <psi^a(x) psi^b(y)> = C^{ab}(x,y) = hbar G^{ab}.
// Gamma_2 = <V4> + (i/2 hbar) <V3 V3 + V4 V4>_{2PI pairings}; the self-energy
// follows by the literal two-orientation functional derivative
// Sigma_{ab} = 2i dGamma_2/dG^{ab}, and the mean-field memory force by
// dGamma_2/dphi^a.  Nc is the formal component count used for coefficients
// (2 here); the per-pairing loop power in Nc is tracked symbolically so the
// NLO truncation can keep only the leading contractions of each diagram.

struct GFactor {
  int s = 0, t = 0;  // C^{st}(x, y), upper indices
};

// One term of the nonlocal self-energy Sigma_{ab,ij}(t,t'):
//   coeff * phi^{px}_i(t) * phi^{py}_j(t') * prod_m C^{s_m t_m}_{ij}(t,t')
struct SigmaMonomial {
  std::complex<double> coeff;
  int a = 0, b = 0;      // lower Sigma indices
  int phi_x = -1;        // upper index of the phi factor at (i,t); -1 if none
  int phi_y = -1;        // at (j,t')
  GFactor g[3];
  int ng = 0;
  int npower = 0;        // symbolic Nc-power of the parent pairing
};

// One term of Y_{a,i}(t; j,t') = 2 dW/dphi^a(x) entering the mean-field
// memory force as +i * int_0^t dt' sum_j Y_rho.
struct PhiForceMonomial {
  std::complex<double> coeff;
  int a = 0;             // lower free index
  int phi_y = -1;
  GFactor g[3];
  int ng = 0;
  int npower = 0;
};

// Time-local self-energy from the double bubble, already in the raised form
// that enters the kernel equation as an addition to the local matrix:
//   Sigma_hat^{a}{}_{c,i}(t) = sum_terms coeff * Ftilde^{st}_{ii}(t,t)
struct LocalSigmaTerm {
  std::complex<double> coeff;
  int a = 0, c = 0;  // a raised, c lowered
  int s = 0, t = 0;
};

struct DiagramStats {
  int pairings = 0;          // connected 2PI pairings
  int leading_pairings = 0;  // pairings at the maximal Nc power
  int max_power = 0;         // maximal loop power L - V (phi chains counted)
};

class ContractionEngine {
 public:
  // nlo_only: keep only the Nc-leading contractions of the setting-sun and
  // basketball (the double bubble is first order in U and kept in full).
  ContractionEngine(double U, double hbar, double Nc, bool nlo_only);

  const std::vector<SigmaMonomial>& sigma_monomials() const { return sigma_; }
  const std::vector<PhiForceMonomial>& phi_force_monomials() const { return force_; }
  const std::vector<LocalSigmaTerm>& local_sigma() const { return local_; }

  DiagramStats setting_sun_stats() const { return ss_; }
  DiagramStats basketball_stats() const { return bb_; }
  DiagramStats double_bubble_stats() const { return db_; }

 private:
  std::vector<SigmaMonomial> sigma_;
  std::vector<PhiForceMonomial> force_;
  std::vector<LocalSigmaTerm> local_;
  DiagramStats ss_, bb_, db_;
};

}  // namespace nqdyn
