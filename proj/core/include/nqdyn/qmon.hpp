#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>

#include "nqdyn/observables.hpp"
#include "nqdyn/time_grid.hpp"

namespace nqdyn {

// O(N) quantum mechanics, H = (1/2){P^2 + M^2 X.X + (lambda/(4N))(X.X)^2},
// so the quartic coefficient is lambda/(8N).
struct QmonParams {
  int N = 20;
  double M2 = 1.0;
  double lambda = 1.0;
  double hbar = 1.0;
};

// Static gap: chi = M^2 + lambda*hbar/(4 sqrt(chi)).  The fixed point is
// unique and positive for lambda > 0; residual below 1e-12.  lambda = 0
// returns exactly M^2 (requires M^2 > 0 there).
double gap_static(const QmonParams& p);

// Initial data: Gaussian vacuum of the static LO gap at mass M2_initial
// (same lambda, N); evolution runs with the post-quench parameters.
struct QmonInitial {
  double M2_initial = 1.0;
  double f_perturbation = 0.0;  // additive offset on f(0,0), for stability tests
};

// Leading order: chi(t) slaved to f(t,t), Gaussian dynamics, no memory.
// Columns: chi, f_xx, f_pp, f_xp, energy, entropy, nu.
Trajectory evolve_lo(const QmonParams& p, const QmonInitial& init, const TimeGrid& grid);

// NLO 1/N: two-time leapfrog with resummed-bubble memory kernels.
// Columns: chi, f_xx, f_pp, f_xp, entropy, nu.
Trajectory evolve_nlo(const QmonParams& p, const QmonInitial& init, const TimeGrid& grid,
                      std::size_t budget_bytes, int threads = 1);

// Stepwise NLO evolution with bit-exact snapshot/restore for checkpointing.
class QmonNloEvolution {
 public:
  QmonNloEvolution(const QmonParams& p, const QmonInitial& init, const TimeGrid& grid,
                   std::size_t budget_bytes, int threads = 1);
  ~QmonNloEvolution();
  QmonNloEvolution(QmonNloEvolution&&) noexcept;
  QmonNloEvolution& operator=(QmonNloEvolution&&) noexcept;

  long steps_done() const;
  long total_steps() const;
  bool advance();
  const Trajectory& trajectory() const;

  void serialize(std::ostream& os) const;
  void deserialize(std::istream& is);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Exact radial-sector oracle (zero angular momentum): Crank-Nicolson on
// u(r) = r^{(N-1)/2} psi(r) with centrifugal term hbar^2 (N-1)(N-3)/(8 r^2).
struct RadialOptions {
  double r_max = 0.0;   // 0 means auto from the initial width
  int n_r = 2400;
  double reflect_tol = 1e-8;
};

// Columns: x2 (= <r^2>/N), norm.
Trajectory evolve_exact_radial(const QmonParams& p, const QmonInitial& init,
                               const TimeGrid& grid, const RadialOptions& opt = {});

}  // namespace nqdyn
