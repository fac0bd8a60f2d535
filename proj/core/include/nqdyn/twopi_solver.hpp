#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "nqdyn/bose_hubbard.hpp"
#include "nqdyn/observables.hpp"
#include "nqdyn/time_grid.hpp"

namespace nqdyn {

// Truncations of the two-particle-irreducible effective action for the
// lattice model, in increasing diagrammatic content:
//   Bogoliubov   : Gamma_2 = 0 (Gaussian backreaction only)
//   HFB          : + double bubble (time-local self-energy)
//   SecondOrder  : + setting sun and basketball, all contractions
//   LargeNNLO    : + setting sun and basketball, leading contractions only
enum class TwopiScheme { Bogoliubov, HFB, SecondOrder, LargeNNLO };

TwopiScheme twopi_scheme_from_string(const std::string& s);
std::string to_string(TwopiScheme s);

struct TwopiOptions {
  std::size_t budget_bytes = std::size_t(4) << 30;
  int threads = 1;
  double corrector_tol = 1e-12;   // 0 iterates the corrector to machine fixed point
  int max_corrector_iters = 100;
  double blowup_threshold = 1e12;
  bool force_two_time = false;    // disable the memoryless equal-time fast path
  std::vector<std::complex<double>> phi0;  // empty: sqrt(N) in the first well
};

// Stepwise evolution with snapshot/restore support for checkpointing.
// Initial state: condensate phi0, fluctuation vacuum F^{ab}_{ij}(0,0) =
// (1/2) sigma^{ab} delta_ij, canonical equal-time rho.
class TwopiEvolution {
 public:
  TwopiEvolution(const BoseHubbardParams& p, TwopiScheme scheme,
                 const TimeGrid& grid, const TwopiOptions& opt = {});
  ~TwopiEvolution();
  TwopiEvolution(TwopiEvolution&&) noexcept;
  TwopiEvolution& operator=(TwopiEvolution&&) noexcept;

  long steps_done() const;
  long total_steps() const;
  bool advance();  // one step; returns false once the grid is exhausted
  const Trajectory& trajectory() const;

  // Bit-exact solver state (kernel rows, condensate history, trajectory).
  void serialize(std::ostream& os) const;
  void deserialize(std::istream& is);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Trajectory evolve_twopi(const BoseHubbardParams& p, TwopiScheme scheme,
                        const TimeGrid& grid, const TwopiOptions& opt = {});

}  // namespace nqdyn
