#pragma once

#include <cstddef>
#include <vector>

#include "nqdyn/errors.hpp"

namespace nqdyn {

// Number-conserving occupation basis for N bosons on I sites.
// dimension = C(N+I-1, I-1); states ordered lexicographically descending in
// (n_1,...,n_I), so (N,0,...,0) has index 0.
class FockBasis {
 public:
  FockBasis(int n_particles, int n_sites, std::size_t dim_cap = 2000000);

  int particles() const { return n_; }
  int sites() const { return sites_; }
  std::size_t dim() const { return dim_; }

  // unrank: occupation vector of basis state idx.
  void occupation(std::size_t idx, int* occ) const;
  std::vector<int> occupation(std::size_t idx) const;

  // rank: basis index of an occupation vector (must sum to N).
  std::size_t index(const int* occ) const;
  std::size_t index(const std::vector<int>& occ) const { return index(occ.data()); }

 private:
  // count(n, k): number of ways to put n bosons on k sites.
  std::size_t count(int n, int k) const { return binom_[n][k]; }

  int n_ = 0;
  int sites_ = 0;
  std::size_t dim_ = 0;
  // binom_[n][k] = C(n+k-1, k-1), built once with overflow checks.
  std::vector<std::vector<std::size_t>> binom_;
};

}  // namespace nqdyn
