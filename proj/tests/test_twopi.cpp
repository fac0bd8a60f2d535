#include <cmath>
#include <sstream>

#include <doctest.h>

#include "nqdyn/twopi_solver.hpp"

using namespace nqdyn;

namespace {

BoseHubbardParams well_params(int N, double U) {
  BoseHubbardParams p;
  p.N = N;
  p.I = 2;
  p.J = 1.0;
  p.U = U;
  return p;
}

double max_col_dev(const Trajectory& a, const Trajectory& b, const std::string& col) {
  const auto& x = a.column(col);
  const auto& y = b.column(col);
  REQUIRE(x.size() == y.size());
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) d = std::max(d, std::abs(x[k] - y[k]));
  return d;
}

bool bitwise_equal(const Trajectory& a, const Trajectory& b) {
  if (a.t != b.t) return false;
  if (a.column_order != b.column_order) return false;
  for (const auto& c : a.column_order)
    if (a.series.at(c) != b.series.at(c)) return false;
  return true;
}

}  // namespace

TEST_CASE("free limit reproduces the Rabi law in every scheme") {
  TimeGrid grid(0.0, 0.002, 1000);
  for (TwopiScheme s : {TwopiScheme::Bogoliubov, TwopiScheme::HFB,
                        TwopiScheme::SecondOrder, TwopiScheme::LargeNNLO}) {
    Trajectory tr = evolve_twopi(well_params(4, 0.0), s, grid);
    const auto& n1 = tr.column("n_1");
    double dev = 0.0;
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
      double c = std::cos(tr.t[k]);
      dev = std::max(dev, std::abs(n1[k] - 4.0 * c * c));
    }
    CHECK(dev < 1e-4);  // the equal-time path is second order in dt
  }
}

TEST_CASE("two-time marching agrees with the equal-time fast path at zero coupling") {
  TimeGrid grid(0.0, 0.005, 200);
  TwopiOptions fast;
  TwopiOptions slow;
  slow.force_two_time = true;
  Trajectory a = evolve_twopi(well_params(20, 0.0), TwopiScheme::HFB, grid, fast);
  Trajectory b = evolve_twopi(well_params(20, 0.0), TwopiScheme::HFB, grid, slow);
  CHECK(max_col_dev(a, b, "n_1") < 2e-4);
  CHECK(max_col_dev(a, b, "N_total") < 2e-4);
}

TEST_CASE("memory scheme number drift shrinks at fourth order under dt halving") {
  BoseHubbardParams p = well_params(8, 0.5);  // UN/J = 4
  auto drift = [&](double dt, long n) {
    Trajectory tr = evolve_twopi(p, TwopiScheme::SecondOrder, TimeGrid(0.0, dt, n));
    const auto& N = tr.column("N_total");
    double d = 0.0;
    for (double v : N) d = std::max(d, std::abs(v - N[0]));
    return d / N[0];
  };
  double coarse = drift(0.04, 100);
  double fine = drift(0.02, 200);
  CHECK(fine < coarse / 3.5);
}

TEST_CASE("snapshot and restore continue bit-identically") {
  BoseHubbardParams p = well_params(4, 0.5);
  TimeGrid grid(0.0, 0.02, 120);

  TwopiEvolution ref(p, TwopiScheme::SecondOrder, grid);
  while (ref.advance()) {
  }

  for (long cut : {3L, 37L}) {  // inside and after the startup phase
    TwopiEvolution a(p, TwopiScheme::SecondOrder, grid);
    for (long k = 0; k < cut; ++k) REQUIRE(a.advance());
    std::stringstream buf;
    a.serialize(buf);

    TwopiEvolution b(p, TwopiScheme::SecondOrder, grid);
    b.deserialize(buf);
    CHECK(b.steps_done() == cut);
    while (b.advance()) {
    }
    CHECK(bitwise_equal(ref.trajectory(), b.trajectory()));
  }
}

TEST_CASE("thread count never changes results") {
  BoseHubbardParams p = well_params(4, 0.5);
  TimeGrid grid(0.0, 0.02, 100);
  TwopiOptions one;
  one.threads = 1;
  TwopiOptions three;
  three.threads = 3;
  Trajectory a = evolve_twopi(p, TwopiScheme::LargeNNLO, grid, one);
  Trajectory b = evolve_twopi(p, TwopiScheme::LargeNNLO, grid, three);
  CHECK(bitwise_equal(a, b));
}

TEST_CASE("kernel storage beyond the byte budget is rejected") {
  BoseHubbardParams p = well_params(4, 0.5);
  TwopiOptions opt;
  opt.budget_bytes = 1 << 20;
  CHECK_THROWS_AS(evolve_twopi(p, TwopiScheme::SecondOrder, TimeGrid(0.0, 0.001, 20000), opt),
                  ResourceError);
}
