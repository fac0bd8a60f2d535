#include <cmath>
#include <sstream>

#include <doctest.h>

#include "nqdyn/qmon.hpp"

using namespace nqdyn;

namespace {

// Independent fixed-point oracle for chi = M2 + lambda*hbar/(4 sqrt(chi)).
double gap_bisection(double M2, double lambda, double hbar) {
  auto f = [&](double x) { return x - M2 - lambda * hbar / (4.0 * std::sqrt(x)); };
  double lo = M2, hi = M2 + lambda * hbar;
  while (f(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

QmonParams base_params(int N = 20) {
  QmonParams p;
  p.N = N;
  p.M2 = 1.0;
  p.lambda = 1.0;
  return p;
}

}  // namespace

TEST_CASE("static gap matches an independent bisection oracle") {
  QmonParams p = base_params();
  double ref = gap_bisection(p.M2, p.lambda, p.hbar);
  CHECK(std::abs(gap_static(p) - ref) < 1e-12);
  CHECK(gap_static(p) == doctest::Approx(1.2258).epsilon(1e-3));

  p.lambda = 0.0;
  p.M2 = 2.5;
  CHECK(gap_static(p) == 2.5);  // exact, not approximate
}

TEST_CASE("free oscillator quench follows the Gaussian width law") {
  // lambda = 0: chi stays at M2 and f_xx(t) evolves as a squeezed Gaussian,
  // f_xx = cos^2(mu t)/(2 mu0) + mu0 sin^2(mu t)/(2 mu^2), hbar = 1.
  QmonParams p = base_params();
  p.lambda = 0.0;
  QmonInitial init;
  init.M2_initial = 4.0;
  TimeGrid grid(0.0, 0.001, 2000);
  Trajectory tr = evolve_lo(p, init, grid);
  const auto& chi = tr.column("chi");
  const auto& fxx = tr.column("f_xx");
  double mu0 = 2.0, mu = 1.0;
  double dev = 0.0;
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    CHECK(std::abs(chi[k] - 1.0) < 1e-12);
    double c = std::cos(mu * tr.t[k]), s = std::sin(mu * tr.t[k]);
    double ref = c * c / (2.0 * mu0) + mu0 * s * s / (2.0 * mu * mu);
    dev = std::max(dev, std::abs(fxx[k] - ref));
  }
  CHECK(dev < 1e-6);  // trapezoid-order width error
}

TEST_CASE("leading order conserves energy and entropy") {
  QmonParams p = base_params();
  QmonInitial init;
  init.M2_initial = 2.0;
  TimeGrid grid(0.0, 0.002, 2000);
  Trajectory tr = evolve_lo(p, init, grid);
  const auto& E = tr.column("energy");
  const auto& S = tr.column("entropy");
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    CHECK(std::abs(E[k] - E[0]) < 1e-7 * std::abs(E[0]));
    CHECK(std::abs(S[k] - S[0]) < 1e-4);  // clamp noise near the pure-state bound
  }
}

TEST_CASE("radial oracle reproduces the free Gaussian width") {
  QmonParams p = base_params(21);
  p.lambda = 0.0;
  QmonInitial init;
  init.M2_initial = 1.5;
  TimeGrid grid(0.0, 0.01, 200);
  Trajectory tr = evolve_exact_radial(p, init, grid);
  const auto& x2 = tr.column("x2");
  double mu0 = std::sqrt(1.5), mu = 1.0;
  double dev = 0.0;
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    double c = std::cos(mu * tr.t[k]), s = std::sin(mu * tr.t[k]);
    double ref = c * c / (2.0 * mu0) + mu0 * s * s / (2.0 * mu * mu);
    dev = std::max(dev, std::abs(x2[k] - ref));
  }
  CHECK(dev < 3e-3);  // Crank-Nicolson grid error at the default resolution
  const auto& norm = tr.column("norm");
  for (double v : norm) CHECK(std::abs(v - 1.0) < 1e-6);
}

TEST_CASE("memory truncation relaxes toward leading order at weak coupling") {
  QmonParams p = base_params(200);
  p.lambda = 0.05;
  QmonInitial init;
  init.M2_initial = 1.3;
  TimeGrid grid(0.0, 0.01, 300);
  Trajectory lo = evolve_lo(p, init, grid);
  Trajectory nlo = evolve_nlo(p, init, grid, std::size_t(1) << 30);
  const auto& a = lo.column("chi");
  const auto& b = nlo.column("chi");
  double dev = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) dev = std::max(dev, std::abs(a[k] - b[k]));
  // Memory corrections are suppressed by both lambda and 1/N.
  CHECK(dev < 5e-3);
}

TEST_CASE("memory evolution produces entropy from the static-gap vacuum") {
  // The vacuum is stationary at leading order, so all entropy production
  // comes from the memory kernels. The raw series carries an O(1/N)
  // dressing oscillation on top of the secular growth, so the checks here
  // are on the trend: entropy never falls below its initial value and the
  // time average over the window is strictly positive.
  QmonParams p = base_params();
  QmonInitial init;
  init.M2_initial = 1.0;
  TimeGrid grid(0.0, 0.01, 400);
  Trajectory tr = evolve_nlo(p, init, grid, std::size_t(1) << 30);
  const auto& S = tr.column("entropy");
  double mean = 0.0;
  for (std::size_t k = 0; k < S.size(); ++k) {
    CHECK(S[k] >= -1e-8);
    mean += S[k];
  }
  mean /= static_cast<double>(S.size());
  CHECK(mean > 5e-3);
}

TEST_CASE("memory evolution entropy grows secularly after a quench") {
  QmonParams p = base_params();
  QmonInitial init;
  init.M2_initial = 2.0;
  TimeGrid grid(0.0, 0.01, 800);
  Trajectory tr = evolve_nlo(p, init, grid, std::size_t(1) << 30);
  const auto& S = tr.column("entropy");
  const std::size_t half = S.size() / 2;
  double early = 0.0, late = 0.0;
  for (std::size_t k = 0; k < half; ++k) early += S[k];
  for (std::size_t k = half; k < S.size(); ++k) late += S[k];
  early /= static_cast<double>(half);
  late /= static_cast<double>(S.size() - half);
  CHECK(S[0] < 1e-8);
  CHECK(late > 2.0 * early);
  CHECK(late > 0.01);
}

TEST_CASE("memory evolution snapshot and restore are bit-identical") {
  QmonParams p = base_params();
  QmonInitial init;
  init.M2_initial = 2.0;
  TimeGrid grid(0.0, 0.01, 150);
  std::size_t budget = std::size_t(1) << 30;

  QmonNloEvolution ref(p, init, grid, budget);
  while (ref.advance()) {
  }

  QmonNloEvolution a(p, init, grid, budget);
  for (long k = 0; k < 60; ++k) REQUIRE(a.advance());
  std::stringstream buf;
  a.serialize(buf);
  QmonNloEvolution b(p, init, grid, budget);
  b.deserialize(buf);
  while (b.advance()) {
  }

  const Trajectory& x = ref.trajectory();
  const Trajectory& y = b.trajectory();
  REQUIRE(x.t == y.t);
  for (const auto& c : x.column_order) CHECK(x.series.at(c) == y.series.at(c));
}
