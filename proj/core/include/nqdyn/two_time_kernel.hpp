#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nqdyn/errors.hpp"
#include "nqdyn/time_grid.hpp"

namespace nqdyn {

// One two-time function X(t_k, t_l) carrying site and field indices:
//   X^{ab}_{ij}(t_k, t_l),  i,j < sites,  a,b < fields.
// Entries with l <= k are authoritative; the opposite triangle is kept as a
// mirrored copy, parity * X^{ba}_{ji}(t_l, t_k), so that memory-integral inner
// loops can always run over contiguous rows.  parity = +1 for statistical
// kernels, -1 for spectral ones.
template <typename Scalar>
class TwoTimeFunction {
 public:
  TwoTimeFunction() = default;

  TwoTimeFunction(const TimeGrid& grid, int sites, int fields, int parity)
      : grid_(grid), sites_(sites), fields_(fields), parity_(parity) {
    if (sites < 1 || fields < 1)
      throw ValidationError("TwoTimeFunction: sites and fields must be >= 1");
    if (parity != 1 && parity != -1)
      throw ValidationError("TwoTimeFunction: parity must be +1 or -1");
    np_ = static_cast<std::size_t>(grid.n_points());
    comps_ = static_cast<std::size_t>(sites) * sites * fields * fields;
    data_.assign(np_ * np_ * comps_, Scalar(0));
  }

  static std::size_t bytes_required(long n_points, int sites, int fields) {
    auto np = static_cast<std::size_t>(n_points);
    auto comps = static_cast<std::size_t>(sites) * sites * fields * fields;
    // Overflow guard: caps in this code are far below 2^63 bytes.
    long double b = static_cast<long double>(np) * np * comps * sizeof(Scalar);
    if (b > 9.0e18L) return ~std::size_t(0);
    return np * np * comps * sizeof(Scalar);
  }

  const TimeGrid& grid() const { return grid_; }
  int sites() const { return sites_; }
  int fields() const { return fields_; }
  int parity() const { return parity_; }
  std::size_t components() const { return comps_; }
  std::size_t stored_pairs() const { return grid_.stored_pairs(); }

  std::size_t comp_index(int i, int j, int a, int b) const {
    return ((static_cast<std::size_t>(i) * sites_ + j) * fields_ + a) * fields_ + b;
  }

  Scalar operator()(long k, long l, int i, int j, int a, int b) const {
    return data_[(static_cast<std::size_t>(k) * np_ + l) * comps_ + comp_index(i, j, a, b)];
  }

  // Writes the value and its exchange-symmetric mirror.
  void set(long k, long l, int i, int j, int a, int b, Scalar v) {
    data_[(static_cast<std::size_t>(k) * np_ + l) * comps_ + comp_index(i, j, a, b)] = v;
    data_[(static_cast<std::size_t>(l) * np_ + k) * comps_ + comp_index(j, i, b, a)] =
        parity_ > 0 ? v : -v;
  }

  const Scalar* block(long k, long l) const {
    return data_.data() + (static_cast<std::size_t>(k) * np_ + l) * comps_;
  }
  // Raw mirrored storage, row-major in the first time index:
  // row_stride() scalars per row, rows 0..n_points()-1.
  const Scalar* raw() const { return data_.data(); }
  Scalar* raw_mut() { return data_.data(); }
  std::size_t row_stride() const { return np_ * comps_; }
  Scalar* block_mut(long k, long l) {
    return data_.data() + (static_cast<std::size_t>(k) * np_ + l) * comps_;
  }

  // Rewrites the mirror of block (k,l) from its authoritative entries.
  void sync_mirror(long k, long l) {
    if (k == l) {
      if (parity_ < 0) return;  // diagonal of a spectral kernel is assigned, not synced
    }
    const Scalar* src = block(k, l);
    Scalar* dst = block_mut(l, k);
    for (int i = 0; i < sites_; ++i)
      for (int j = 0; j < sites_; ++j)
        for (int a = 0; a < fields_; ++a)
          for (int b = 0; b < fields_; ++b) {
            Scalar v = src[comp_index(i, j, a, b)];
            dst[comp_index(j, i, b, a)] = parity_ > 0 ? v : -v;
          }
  }

 private:
  TimeGrid grid_;
  int sites_ = 0;
  int fields_ = 0;
  int parity_ = 1;
  std::size_t np_ = 0;
  std::size_t comps_ = 0;
  std::vector<Scalar> data_;
};

// Statistical/spectral kernel pair on a common grid.
template <typename Scalar>
struct TwoTimeKernel {
  TwoTimeFunction<Scalar> F;    // parity +1
  TwoTimeFunction<Scalar> rho;  // parity -1
};

// Allocates an (F, rho) pair, enforcing a byte budget, and assigns the
// canonical equal-time spectral values bitwise:
//   fields == 2 (complex ladder pair): rho^{12}_{ii} = +i, rho^{21}_{ii} = -i
//   fields == 1 (real coordinate):     rho_{ii} = 0
// All other equal-time spectral entries are exactly zero.
TwoTimeKernel<std::complex<double>> allocate_kernel(const TimeGrid& grid, int sites,
                                                    int fields, std::size_t budget_bytes);

TwoTimeKernel<double> allocate_real_kernel(const TimeGrid& grid, int sites,
                                           std::size_t budget_bytes);

}  // namespace nqdyn
