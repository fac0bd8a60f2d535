#include <cmath>
#include <vector>

#include <doctest.h>

#include "nqdyn/fock_basis.hpp"
#include "nqdyn/quadrature.hpp"
#include "nqdyn/sha256.hpp"
#include "nqdyn/time_grid.hpp"

using namespace nqdyn;

TEST_CASE("fock basis dimension and ordering") {
  FockBasis b2(20, 2);
  CHECK(b2.dim() == 21);
  FockBasis b3(4, 3);
  CHECK(b3.dim() == 15);  // C(6,2)

  // (N, 0, ..., 0) first, lexicographically descending after that.
  auto first = b3.occupation(0);
  CHECK(first == std::vector<int>{4, 0, 0});
  for (std::size_t i = 1; i < b3.dim(); ++i) {
    CHECK(b3.occupation(i) < b3.occupation(i - 1));
  }
}

TEST_CASE("fock basis rank and unrank are inverse") {
  FockBasis b(6, 4);
  for (std::size_t i = 0; i < b.dim(); ++i) {
    auto occ = b.occupation(i);
    int sum = 0;
    for (int n : occ) sum += n;
    CHECK(sum == 6);
    CHECK(b.index(occ) == i);
  }
}

TEST_CASE("fock basis rejects oversized dimension") {
  CHECK_THROWS_AS(FockBasis(100, 4, 1000), ResourceError);
}

TEST_CASE("time grid validation and sample points") {
  CHECK_THROWS_AS(TimeGrid(0.0, 0.0, 10), ValidationError);
  CHECK_THROWS_AS(TimeGrid(0.0, -0.1, 10), ValidationError);
  TimeGrid g(1.0, 0.25, 8);
  CHECK(g.n_points() == 9);
  CHECK(g.time(4) == doctest::Approx(2.0));
  CHECK(g.stored_pairs() == 36);
}

namespace {

// The weighted sum of z^p over all available samples must equal the exact
// integral of z^p over [lo, hi] up to the branch's polynomial degree.
void check_poly_exact(long lo, long hi, long zmax, int degree = 3) {
  for (int p = 0; p <= degree; ++p) {
    double s = 0.0;
    for (long z = 0; z <= zmax; ++z)
      s += quad4_weight(z, lo, hi, zmax) * std::pow(double(z), p);
    double exact = (std::pow(double(hi), p + 1) - std::pow(double(lo), p + 1)) / (p + 1);
    CHECK(s == doctest::Approx(exact).epsilon(1e-12));
  }
}

}  // namespace

TEST_CASE("quadrature weights integrate cubics exactly in every branch") {
  check_poly_exact(0, 12, 12);  // long Gregory rule
  check_poly_exact(2, 9, 15);   // Gregory away from the origin
  check_poly_exact(5, 9, 9);    // short rule anchored at hi
  check_poly_exact(4, 7, 7);    // short rule, nodes reach below lo
  check_poly_exact(0, 3, 9);    // short rule anchored at lo, nodes past hi
  check_poly_exact(0, 1, 8);
  check_poly_exact(0, 2, 3);     // closed Newton-Cotes fallback (Simpson)
  check_poly_exact(1, 2, 3, 1);  // trapezoid fallback is first order only
}

TEST_CASE("quadrature degenerate and out-of-range samples") {
  for (long z = 0; z <= 10; ++z) CHECK(quad4_weight(z, 4, 4, 10) == 0.0);
  CHECK(quad4_weight(-1, 0, 8, 8) == 0.0);
  CHECK(quad4_weight(9, 0, 8, 8) == 0.0);
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
