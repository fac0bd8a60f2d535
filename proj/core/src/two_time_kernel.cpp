#include "nqdyn/two_time_kernel.hpp"

namespace nqdyn {

namespace {

void check_budget(std::size_t need, std::size_t budget_bytes) {
  if (need > budget_bytes)
    throw ResourceError("kernel allocation needs " + std::to_string(need) +
                        " bytes, budget is " + std::to_string(budget_bytes));
}

}  // namespace

TwoTimeKernel<std::complex<double>> allocate_kernel(const TimeGrid& grid, int sites,
                                                    int fields, std::size_t budget_bytes) {
  using C = std::complex<double>;
  std::size_t need = 2 * TwoTimeFunction<C>::bytes_required(grid.n_points(), sites, fields);
  check_budget(need, budget_bytes);
  TwoTimeKernel<C> k{TwoTimeFunction<C>(grid, sites, fields, +1),
                     TwoTimeFunction<C>(grid, sites, fields, -1)};
  if (fields == 2) {
    for (long t = 0; t < grid.n_points(); ++t)
      for (int i = 0; i < sites; ++i) {
        k.rho.block_mut(t, t)[k.rho.comp_index(i, i, 0, 1)] = C(0.0, 1.0);
        k.rho.block_mut(t, t)[k.rho.comp_index(i, i, 1, 0)] = C(0.0, -1.0);
      }
  }
  return k;
}

TwoTimeKernel<double> allocate_real_kernel(const TimeGrid& grid, int sites,
                                           std::size_t budget_bytes) {
  std::size_t need = 2 * TwoTimeFunction<double>::bytes_required(grid.n_points(), sites, 1);
  check_budget(need, budget_bytes);
  return TwoTimeKernel<double>{TwoTimeFunction<double>(grid, sites, 1, +1),
                               TwoTimeFunction<double>(grid, sites, 1, -1)};
}

}  // namespace nqdyn
