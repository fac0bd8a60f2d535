#include "nqdyn/fock_basis.hpp"

#include <limits>
#include <string>

namespace nqdyn {

namespace {
constexpr std::size_t kSat = std::numeric_limits<std::size_t>::max();

std::size_t sat_add(std::size_t a, std::size_t b) {
  return (a > kSat - b) ? kSat : a + b;
}
}  // namespace

FockBasis::FockBasis(int n_particles, int n_sites, std::size_t dim_cap)
    : n_(n_particles), sites_(n_sites) {
  if (n_particles < 1 || n_sites < 1)
    throw ValidationError("FockBasis: need N >= 1 and I >= 1");
  // binom_[n][k] = C(n+k-1, k-1), via the Pascal recurrence
  // count(n,k) = count(n,k-1) + count(n-1,k); count(n,1) = 1, count(0,k) = 1.
  binom_.assign(n_ + 1, std::vector<std::size_t>(sites_ + 1, 0));
  for (int k = 0; k <= sites_; ++k) binom_[0][k] = 1;
  for (int n = 0; n <= n_; ++n) binom_[n][1] = 1;
  for (int n = 1; n <= n_; ++n)
    for (int k = 2; k <= sites_; ++k)
      binom_[n][k] = sat_add(binom_[n][k - 1], binom_[n - 1][k]);
  dim_ = binom_[n_][sites_];
  if (dim_ > dim_cap)
    throw ResourceError("FockBasis dimension " +
                        (dim_ == kSat ? std::string("overflow") : std::to_string(dim_)) +
                        " exceeds cap " + std::to_string(dim_cap));
}

void FockBasis::occupation(std::size_t idx, int* occ) const {
  int rem = n_;
  for (int s = 0; s < sites_ - 1; ++s) {
    int chosen = -1;
    for (int m = rem; m >= 0; --m) {
      std::size_t c = count(rem - m, sites_ - s - 1);
      if (idx < c) {
        chosen = m;
        break;
      }
      idx -= c;
    }
    occ[s] = chosen;
    rem -= chosen;
  }
  occ[sites_ - 1] = rem;
}

std::vector<int> FockBasis::occupation(std::size_t idx) const {
  std::vector<int> occ(sites_);
  occupation(idx, occ.data());
  return occ;
}

std::size_t FockBasis::index(const int* occ) const {
  std::size_t r = 0;
  int rem = n_;
  for (int s = 0; s < sites_ - 1; ++s) {
    for (int m = rem; m > occ[s]; --m) r += count(rem - m, sites_ - s - 1);
    rem -= occ[s];
  }
  return r;
}

}  // namespace nqdyn
