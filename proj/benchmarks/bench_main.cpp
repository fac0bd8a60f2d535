#include <benchmark/benchmark.h>

#include "nqdyn/bose_hubbard.hpp"
#include "nqdyn/contraction_engine.hpp"
#include "nqdyn/qmon.hpp"
#include "nqdyn/spectral.hpp"
#include "nqdyn/twopi_solver.hpp"

namespace {

using namespace nqdyn;

BoseHubbardParams well(int N, double U) {
  BoseHubbardParams p;
  p.N = N;
  p.I = 2;
  p.J = 1.0;
  p.U = U;
  return p;
}

void BM_FockRankUnrank(benchmark::State& state) {
  FockBasis basis(static_cast<int>(state.range(0)), 4);
  std::vector<int> occ(4);
  for (auto _ : state) {
    for (std::size_t i = 0; i < basis.dim(); ++i) {
      basis.occupation(i, occ.data());
      benchmark::DoNotOptimize(basis.index(occ.data()));
    }
  }
  state.SetItemsProcessed(state.iterations() * basis.dim());
}
BENCHMARK(BM_FockRankUnrank)->Arg(10)->Arg(20);

void BM_ExactEvolve(benchmark::State& state) {
  BoseHubbardParams p = well(static_cast<int>(state.range(0)), 4.0 / state.range(0));
  FockBasis basis(p.N, p.I);
  HamiltonianMatrix H = build_hamiltonian(basis, p);
  Eigen::VectorXcd psi0 = initial_state(basis, InitialStateSpec{});
  for (auto _ : state) {
    auto r = evolve_exact(basis, H, psi0, TimeGrid(0.0, 0.01, 200));
    benchmark::DoNotOptimize(r.traj.t.size());
  }
}
BENCHMARK(BM_ExactEvolve)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_ContractionEngine(benchmark::State& state) {
  for (auto _ : state) {
    ContractionEngine eng(0.5, 1.0, 2.0, state.range(0) != 0);
    benchmark::DoNotOptimize(eng.sigma_monomials().size());
  }
}
BENCHMARK(BM_ContractionEngine)->Arg(0)->Arg(1);

// Cost of the full two-time marching, dominated by the memory integrals;
// the range argument is the number of steps (cubic scaling).
void BM_TwopiMemoryRun(benchmark::State& state) {
  BoseHubbardParams p = well(8, 0.5);
  TimeGrid grid(0.0, 0.02, state.range(0));
  for (auto _ : state) {
    Trajectory tr = evolve_twopi(p, TwopiScheme::SecondOrder, grid);
    benchmark::DoNotOptimize(tr.t.size());
  }
}
BENCHMARK(BM_TwopiMemoryRun)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_QmonNlo(benchmark::State& state) {
  QmonParams p;
  p.N = 20;
  QmonInitial init;
  init.M2_initial = 2.0;
  TimeGrid grid(0.0, 0.01, state.range(0));
  for (auto _ : state) {
    Trajectory tr = evolve_nlo(p, init, grid, std::size_t(1) << 30);
    benchmark::DoNotOptimize(tr.t.size());
  }
}
BENCHMARK(BM_QmonNlo)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SpectrumEnumeration(benchmark::State& state) {
  for (auto _ : state) {
    BandSpectrum s = product_spectrum(1.0, 1.0, 0.0, double(state.range(0)));
    benchmark::DoNotOptimize(s.total_count());
  }
}
BENCHMARK(BM_SpectrumEnumeration)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
