#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "nqdyn/observables.hpp"
#include "nqdyn/spectral.hpp"

using namespace nqdyn;

namespace {

// Brute-force enumeration oracle for the sphere-circle product spectrum.
long brute_count(double a1, double a2, double M2sq, double Lambda) {
  long count = 0;
  for (int l = 0;; ++l) {
    double base = l * (l + 1.0) / (a2 * a2) + M2sq;
    if (base > Lambda) break;
    for (int n = 0;; ++n) {
      double lam = base + n * n / (a1 * a1);
      if (lam > Lambda) break;
      count += (2 * l + 1) * (n == 0 ? 1 : 2);
    }
  }
  return count;
}

}  // namespace

TEST_CASE("unit-radius spectrum count matches the enumeration oracle") {
  BandSpectrum spec = product_spectrum(1.0, 1.0, 0.0, 10.0);
  CHECK(spec.total_count() == 47);
  CHECK(spec.total_count() == brute_count(1.0, 1.0, 0.0, 10.0));
  CHECK(std::is_sorted(spec.levels.begin(), spec.levels.end(),
                       [](const SpectralLevel& a, const SpectralLevel& b) {
                         return a.lambda < b.lambda;
                       }));
}

TEST_CASE("spectrum counts agree with the oracle across parameters") {
  for (auto [a1, a2, m2, L] : {std::tuple{2.0, 1.0, 0.0, 25.0},
                               std::tuple{0.5, 3.0, 0.3, 12.0},
                               std::tuple{4.0, 0.7, 1.0, 40.0}}) {
    BandSpectrum spec = product_spectrum(a1, a2, m2, L);
    CHECK(spec.total_count() == brute_count(a1, a2, m2, L));
  }
}

TEST_CASE("cumulative count is a step function consistent with the levels") {
  BandSpectrum spec = product_spectrum(1.0, 1.0, 0.0, 10.0);
  CHECK(eigenvalue_count(spec, 10.0) == 47);
  CHECK(eigenvalue_count(spec, 0.0) == 1);  // the constant mode
  long prev = 0;
  for (double L : {0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0}) {
    long c = eigenvalue_count(spec, L);
    CHECK(c >= prev);
    CHECK(c == brute_count(1.0, 1.0, 0.0, L));
    prev = c;
  }
  CHECK_THROWS_AS(eigenvalue_count(spec, 11.0), ValidationError);
}

TEST_CASE("density of states exposes the effective dimension") {
  // Long circle: circle modes dominate, N(Lambda) ~ Lambda^{1/2} in the
  // lowest sphere band. Large sphere: N(Lambda) ~ Lambda within the n = 0
  // band, the two-dimensional law.
  {
    BandSpectrum spec = product_spectrum(200.0, 1.0, 0.0, 1.0);
    std::vector<double> lx, ly;
    for (double L = 0.1; L <= 1.0; L += 0.1) {
      lx.push_back(std::log(L));
      ly.push_back(std::log(double(eigenvalue_count(spec, L))));
    }
    CHECK(std::abs(linfit_slope(lx, ly) - 0.5) < 0.05);
  }
  {
    BandSpectrum spec = product_spectrum(1.0, 200.0, 0.0, 1.0);
    std::vector<double> lx, ly;
    for (double L = 0.1; L <= 1.0; L += 0.1) {
      lx.push_back(std::log(L));
      ly.push_back(std::log(double(eigenvalue_count(spec, L))));
    }
    CHECK(std::abs(linfit_slope(lx, ly) - 1.0) < 0.05);
  }
}

TEST_CASE("zeta partial sum matches a direct evaluation") {
  BandSpectrum spec = product_spectrum(1.0, 1.0, 1.0, 30.0);
  double nu = 2.0, mu = 1.5;
  ZetaPartial z = zeta_partial(spec, nu, mu);
  double direct = 0.0;
  for (const auto& lv : spec.levels)
    direct += lv.degeneracy * std::pow(lv.lambda / (mu * mu), -nu);
  CHECK(z.value == doctest::Approx(direct).epsilon(1e-12));
  CHECK(z.tail_bound > 0.0);
  // The Weyl tail estimate shrinks as the enumeration cutoff grows.
  ZetaPartial deeper = zeta_partial(product_spectrum(1.0, 1.0, 1.0, 120.0), nu, mu);
  CHECK(deeper.tail_bound < z.tail_bound);

  CHECK_THROWS_AS(zeta_partial(spec, 1.0, 1.0), ValidationError);
  ZetaPartial formal = zeta_partial(spec, 1.0, 1.0, true);
  CHECK(std::isinf(formal.tail_bound));
}

TEST_CASE("infrared dimension classification covers the three regimes") {
  // Correlation length 1/M_eff = 10 against compact scales L.
  EirdOptions opt;
  // Very long circle: one compact direction unfrozen, sphere frozen.
  {
    std::vector<CompactScale> scales = {{1000.0, 1, 1.0 / (1000.0 * 1000.0)},
                                        {0.1, 2, 2.0 / 0.01}};
    EirdReport r = eird_classify(0.1, scales, 0, opt);
    CHECK(r.eird == 1);
    CHECK(!r.frozen[0]);
    CHECK(r.frozen[1]);
  }
  // Very large sphere: two unfrozen dimensions.
  {
    std::vector<CompactScale> scales = {{0.1, 1, 1.0 / 0.01},
                                        {1000.0, 2, 2.0 / (1000.0 * 1000.0)}};
    EirdReport r = eird_classify(0.1, scales, 0, opt);
    CHECK(r.eird == 2);
  }
  // Short correlation length: nothing freezes.
  {
    std::vector<CompactScale> scales = {{1.0, 1, 1.0}, {1.0, 2, 2.0}};
    EirdReport r = eird_classify(100.0, scales, 0, opt);
    CHECK(r.eird == 3);
    CHECK(!r.frozen[0]);
    CHECK(!r.frozen[1]);
  }
}

TEST_CASE("operator power counting in four dimensions") {
  auto cls = [](int M, int nder) {
    return classify_operator(OperatorSpec{M, nder, 4});
  };
  CHECK(cls(2, 0).cls == OperatorClass::Relevant);
  CHECK(cls(2, 0).dimension == doctest::Approx(2.0));
  CHECK(cls(4, 0).cls == OperatorClass::Marginal);
  CHECK(cls(4, 0).dimension == doctest::Approx(4.0));
  CHECK(cls(6, 0).cls == OperatorClass::Irrelevant);
  CHECK(cls(6, 0).dimension == doctest::Approx(6.0));
  CHECK(cls(2, 2).cls == OperatorClass::Marginal);  // kinetic term
  CHECK(std::string(operator_class_name(OperatorClass::Relevant)) == "relevant");
}

TEST_CASE("gaussian entropy basics") {
  // Minimal-uncertainty state: nu = 1, zero entropy.
  CHECK(std::abs(gaussian_entropy(0.5, 0.5, 0.0, 1.0)) < 1e-12);
  CHECK(std::abs(entropy_of_nu(0.5)) < 1e-12);  // pure state, hbar/2 eigenvalue
  // Entropy grows monotonically with the symplectic eigenvalue.
  CHECK(entropy_of_nu(2.0) > entropy_of_nu(1.5));
  CHECK(entropy_of_nu(1.0) > entropy_of_nu(0.75));
  // Thermal-like state has positive entropy.
  CHECK(gaussian_entropy(1.0, 1.0, 0.0, 1.0) > 0.5);
  // Below the uncertainty bound is invalid.
  CHECK_THROWS_AS(gaussian_entropy(0.1, 0.1, 0.0, 1.0), ValidationError);
}

TEST_CASE("collapse fit recovers a synthetic envelope") {
  std::vector<double> t, s;
  double tc = 3.0, rate = 0.25;
  for (int k = 0; k <= 1200; ++k) {
    double tk = k * 0.005;
    t.push_back(tk);
    s.push_back(10.0 + 5.0 * std::exp(-tk * tk / (2.0 * tc * tc)) * std::cos(8.0 * tk));
  }
  EnvelopeFit fit = fit_collapse_time(t, s);
  CHECK(fit.n_extrema >= 5);
  CHECK(fit.t_coll == doctest::Approx(tc).epsilon(0.02));

  std::vector<double> s2;
  for (double tk : t)
    s2.push_back(10.0 + 5.0 * std::exp(-rate * tk) * std::cos(8.0 * tk));
  EnvelopeFit fit2 = fit_collapse_time(t, s2);
  CHECK(fit2.rate == doctest::Approx(rate).epsilon(0.02));

  CHECK_THROWS_AS(fit_collapse_time({0.0, 1.0}, {1.0, 2.0}), ValidationError);
}
