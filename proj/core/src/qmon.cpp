#include "nqdyn/qmon.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <vector>

#include "nqdyn/checkpoint.hpp"
#include "nqdyn/errors.hpp"
#include "nqdyn/parallel.hpp"
#include "nqdyn/two_time_kernel.hpp"

namespace nqdyn {

double gap_static(const QmonParams& p) {
  if (p.N < 1) throw ValidationError("gap_static: N must be >= 1");
  if (p.lambda < 0.0) throw ValidationError("gap_static: lambda must be >= 0");
  if (p.lambda == 0.0) {
    if (p.M2 <= 0.0)
      throw ValidationError("gap_static: lambda = 0 with M^2 <= 0 has no gap; "
                            "broken-phase treatment is out of scope");
    return p.M2;
  }
  // g(chi) = chi - M^2 - lambda hbar/(4 sqrt(chi)) is strictly increasing on
  // (0, inf) with g(0+) = -inf, so a guarded Newton iteration always lands.
  double chi = std::max(p.M2, 0.0) + std::pow(0.25 * p.lambda * p.hbar, 2.0 / 3.0) + 1.0;
  for (int it = 0; it < 200; ++it) {
    double s = std::sqrt(chi);
    double g = chi - p.M2 - 0.25 * p.lambda * p.hbar / s;
    double dg = 1.0 + 0.125 * p.lambda * p.hbar / (chi * s);
    double next = chi - g / dg;
    if (next <= 0.0) next = 0.5 * chi;
    bool done = std::fabs(next - chi) < 1e-15 * std::max(1.0, std::fabs(chi));
    chi = next;
    if (done) break;
  }
  double resid = chi - p.M2 - 0.25 * p.lambda * p.hbar / std::sqrt(chi);
  if (std::fabs(resid) > 1e-12)
    throw ValidationError("gap_static: residual " + std::to_string(resid) + " above 1e-12");
  return chi;
}

namespace {

struct VacuumData {
  double f0, fpp0;  // <x^2> and <p^2> per component in the pre-quench gap vacuum
};

VacuumData gap_vacuum(const QmonParams& p, const QmonInitial& init) {
  QmonParams pre = p;
  pre.M2 = init.M2_initial;
  double w0 = std::sqrt(gap_static(pre));
  VacuumData v;
  v.f0 = 0.5 * p.hbar / w0 + init.f_perturbation;
  v.fpp0 = 0.5 * p.hbar * w0;
  return v;
}

void push_lo_point(Trajectory& tr, const QmonParams& p, double t, double f, double fxp,
                   double fpp) {
  double chi = p.M2 + 0.5 * p.lambda * f;
  double det = f * fpp - fxp * fxp;
  // A pure state sits exactly on the bound; the stepper lets det dip below it
  // by its O(dt^2) truncation error, so the slack must absorb that.
  if (det < (0.25 - 1e-4) * p.hbar * p.hbar)
    throw ValidationError("qmon LO: uncertainty bound violated, det = " + std::to_string(det));
  double nu = std::sqrt(std::max(det, 0.25 * p.hbar * p.hbar)) / p.hbar;
  tr.t.push_back(t);
  tr.column("chi").push_back(chi);
  tr.column("f_xx").push_back(f);
  tr.column("f_pp").push_back(fpp);
  tr.column("f_xp").push_back(fxp);
  tr.column("energy").push_back(0.5 * fpp + 0.5 * p.M2 * f + 0.125 * p.lambda * f * f);
  tr.column("nu").push_back(nu);
  tr.column("entropy").push_back(p.N * entropy_of_nu(nu));
}

// Fixed-order dot product with four accumulator chains; vectorizable without
// reassociation and bit-reproducible for any thread count.
inline double dot4(const double* a, const double* b, long n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  long i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// Trapezoid integral of a[z]*b[z] over z = z0..z1 inclusive, step dt.
inline double trapz(const double* a, const double* b, long z0, long z1, double dt) {
  if (z1 <= z0) return 0.0;
  double full = dot4(a + z0, b + z0, z1 - z0 + 1);
  return dt * (full - 0.5 * a[z0] * b[z0] - 0.5 * a[z1] * b[z1]);
}

}  // namespace

Trajectory evolve_lo(const QmonParams& p, const QmonInitial& init, const TimeGrid& grid) {
  VacuumData v = gap_vacuum(p, init);
  double f = v.f0, fxp = 0.0, fpp = v.fpp0;

  Trajectory tr;
  tr.grid = grid;
  tr.provenance["job"] = "qmon";
  tr.provenance["order"] = "LO";
  push_lo_point(tr, p, grid.time(0), f, fxp, fpp);

  const double dt = grid.dt();
  auto rhs = [&](double ff, double fx, double fp, double* d) {
    double chi = p.M2 + 0.5 * p.lambda * ff;
    d[0] = 2.0 * fx;
    d[1] = fp - chi * ff;
    d[2] = -2.0 * chi * fx;
  };
  for (long k = 0; k < grid.n_steps(); ++k) {
    double d0[3], d1[3];
    rhs(f, fxp, fpp, d0);
    double nf = f + dt * d0[0], nx = fxp + dt * d0[1], np = fpp + dt * d0[2];
    // implicit trapezoid via fixed-point iteration
    for (int it = 0; it < 60; ++it) {
      rhs(nf, nx, np, d1);
      double uf = f + 0.5 * dt * (d0[0] + d1[0]);
      double ux = fxp + 0.5 * dt * (d0[1] + d1[1]);
      double up = fpp + 0.5 * dt * (d0[2] + d1[2]);
      double delta = std::fabs(uf - nf) + std::fabs(ux - nx) + std::fabs(up - np);
      nf = uf;
      nx = ux;
      np = up;
      if (delta < 1e-15 * (std::fabs(nf) + std::fabs(np) + 1.0)) break;
    }
    f = nf;
    fxp = nx;
    fpp = np;
    if (!std::isfinite(f) || std::fabs(f) > 1e12)
      throw BlowupError("qmon LO blowup", k + 1);
    push_lo_point(tr, p, grid.time(k + 1), f, fxp, fpp);
  }
  return tr;
}

struct QmonNloEvolution::Impl {
  QmonParams p;
  QmonInitial init;
  TimeGrid grid;   // output grid
  TimeGrid g;      // internal grid, one extra row for the entropy stencil
  int threads;
  long npts = 0;
  long k = 1;      // next memory row to process
  TwoTimeKernel<double> kern;
  Trajectory tr;
  std::vector<double> sigF, sigR, iF, iR, piF, piR;
  VacuumData v;

  Impl(const QmonParams& p_, const QmonInitial& init_, const TimeGrid& grid_,
       std::size_t budget_bytes, int threads_)
      : p(p_), init(init_), grid(grid_),
        g(grid_.t0(), grid_.dt(), grid_.n_steps() + 1), threads(threads_),
        kern(allocate_real_kernel(g, 1, budget_bytes)) {
    if (p.hbar != 1.0)
      throw ValidationError("evolve_nlo: memory kernels are implemented for hbar = 1");
    npts = g.n_points();
    const double dt = grid.dt();
    const double lam = p.lambda;
    v = gap_vacuum(p, init);

    // Rows 0 and 1 from the short-time Taylor expansion of the vacuum data.
    const double m0 = m2kb(v.f0);
    kern.F.set(0, 0, 0, 0, 0, 0, v.f0);
    kern.F.set(1, 0, 0, 0, 0, 0, v.f0 - 0.5 * dt * dt * m0 * v.f0);
    kern.F.set(1, 1, 0, 0, 0, 0, v.f0 + dt * dt * (v.fpp0 - m0 * v.f0));
    kern.rho.set(1, 0, 0, 0, 0, 0, dt - m0 * dt * dt * dt / 6.0);

    sigF.assign(npts, 0.0);
    sigR.assign(npts, 0.0);
    iF.assign(npts, 0.0);
    iR.assign(npts, 0.0);
    piF.assign(npts, 0.0);
    piR.assign(npts, 0.0);

    tr.grid = grid;
    tr.provenance["job"] = "qmon";
    tr.provenance["order"] = "NLO";
    (void)lam;
    push_point(0, v.f0, v.fpp0, 0.0);
  }

  double m2kb(double fkk) const {
    return p.M2 + p.lambda * (p.N + 2.0) / (2.0 * p.N) * fkk;
  }

  const double* frow(long r) const { return kern.F.block(r, 0); }
  const double* rrow(long r) const { return kern.rho.block(r, 0); }

  void push_point(long step, double fxx, double fpp, double fxp) {
    double det = fxx * fpp - fxp * fxp;
    // The two-row Taylor start and the marching both let a pure state dip
    // below the bound by O(dt^2); the slack only needs to catch blowups.
    if (det < 0.25 - 1e-4)
      throw ValidationError("qmon NLO: uncertainty bound violated at step " +
                            std::to_string(step));
    double nu = std::sqrt(std::max(det, 0.25));
    tr.t.push_back(grid.time(step));
    tr.column("chi").push_back(p.M2 + 0.5 * p.lambda * fxx);
    tr.column("f_xx").push_back(fxx);
    tr.column("f_pp").push_back(fpp);
    tr.column("f_xp").push_back(fxp);
    tr.column("nu").push_back(nu);
    tr.column("entropy").push_back(p.N * entropy_of_nu(nu));
  }

  bool advance() {
    if (k >= npts) return false;
    const double dt = grid.dt();
    const double lam = p.lambda;
    const double N = static_cast<double>(p.N);
    auto& fK = kern.F;
    auto& rK = kern.rho;
    const double* fk = frow(k);
    const double* rk = rrow(k);

    // Resummed bubble chain I(t_k, .): the equal-time spectral bubble
    // Pi_rho(l,l) vanishes, so the Volterra march is fully explicit.
    // Bubbles: Pi_F(z,l) = f(z,l)^2 - r(z,l)^2/4, Pi_rho(z,l) = 2 f(z,l) r(z,l),
    // read through row l with f(z,l) = f(l,z), r(z,l) = -r(l,z).
    iR[k] = 0.0;
    for (long l = k - 1; l >= 0; --l) {
      const double* fl = frow(l);
      const double* rl = rrow(l);
      for (long z = l; z <= k; ++z) piR[z] = -2.0 * fl[z] * rl[z];
      iR[l] = 0.0;
      double conv = trapz(iR.data(), piR.data(), l, k, dt);
      iR[l] = 0.5 * lam * (piR[k] - conv);
    }
    for (long l = 0; l <= k; ++l) {
      const double* fl = frow(l);
      const double* rl = rrow(l);
      for (long z = 0; z <= k; ++z) {
        piF[z] = fl[z] * fl[z] - 0.25 * rl[z] * rl[z];
        piR[z] = -2.0 * fl[z] * rl[z];
      }
      double convA = trapz(iR.data(), piF.data(), 0, k, dt);
      iF[l] = 0.0;
      double convB = trapz(iF.data(), piR.data(), 0, l, dt);
      iF[l] = 0.5 * lam * (piF[k] - convA + convB);
    }

    // Self-energy row at t_k.
    for (long z = 0; z <= k; ++z) {
      sigF[z] = -(lam / N) * (fk[z] * iF[z] - 0.25 * rk[z] * iR[z]);
      sigR[z] = -(lam / N) * (fk[z] * iR[z] + rk[z] * iF[z]);
    }
    if (k + 1 < npts) sigF[k + 1] = 0.0;  // guarded endpoint in the diagonal update

    // Leapfrog row k+1 (only while the internal grid has room).
    if (k + 1 >= npts) {
      ++k;
      return false;
    }
    const double m2 = m2kb(fk[k]);
    const double* fm1 = frow(k - 1);
    const double* rm1 = rrow(k - 1);
    parallel_for(0, k + 1, threads, [&](long l) {
      const double* fl = frow(l);
      const double* rl = rrow(l);
      double memF = -trapz(sigR.data(), fl, 0, k, dt) - trapz(sigF.data(), rl, 0, l, dt);
      double memR = trapz(sigR.data(), rl, l, k, dt);
      double fnew = 2.0 * fk[l] - fm1[l] + dt * dt * (-m2 * fk[l] + memF);
      double rnew = 2.0 * rk[l] - rm1[l] + dt * dt * (-m2 * rk[l] + memR);
      fK.set(k + 1, l, 0, 0, 0, 0, fnew);
      rK.set(k + 1, l, 0, 0, 0, 0, rnew);
    });
    // Diagonal via the second-argument equation at (t_{k+1}, t_k); the
    // z = k+1 endpoint of the Sigma_F convolution multiplies r(k+1,k+1) = 0.
    const double* fkp1 = frow(k + 1);
    const double* rkp1 = rrow(k + 1);
    double mem2 = -trapz(sigR.data(), fkp1, 0, k, dt) - trapz(sigF.data(), rkp1, 0, k + 1, dt);
    double fdiag = 2.0 * fkp1[k] - fkp1[k - 1] + dt * dt * (-m2 * fkp1[k] + mem2);
    fK.set(k + 1, k + 1, 0, 0, 0, 0, fdiag);

    if (!std::isfinite(fdiag) || std::fabs(fdiag) > 1e12)
      throw BlowupError("qmon NLO blowup", k + 1);

    // Observables at t_k need rows k-1, k, k+1.
    if (k <= grid.n_steps()) {
      double fxx = fk[k];
      double fpp = (fkp1[k + 1] + fm1[k - 1] - 2.0 * fkp1[k - 1]) / (4.0 * dt * dt);
      double fxp = (fkp1[k] - fk[k - 1]) / (2.0 * dt);
      push_point(k, fxx, fpp, fxp);
    }
    ++k;
    return k < npts;
  }
};

QmonNloEvolution::QmonNloEvolution(const QmonParams& p, const QmonInitial& init,
                                   const TimeGrid& grid, std::size_t budget_bytes,
                                   int threads)
    : impl_(std::make_unique<Impl>(p, init, grid, budget_bytes, threads)) {}
QmonNloEvolution::~QmonNloEvolution() = default;
QmonNloEvolution::QmonNloEvolution(QmonNloEvolution&&) noexcept = default;
QmonNloEvolution& QmonNloEvolution::operator=(QmonNloEvolution&&) noexcept = default;

long QmonNloEvolution::steps_done() const { return impl_->k - 1; }
long QmonNloEvolution::total_steps() const { return impl_->npts - 1; }
bool QmonNloEvolution::advance() { return impl_->advance(); }
const Trajectory& QmonNloEvolution::trajectory() const { return impl_->tr; }

void QmonNloEvolution::serialize(std::ostream& os) const {
  const Impl& im = *impl_;
  ckpt::write_header(os, "qmon_nlo");
  ckpt::write_i64(os, im.p.N);
  ckpt::write_f64(os, im.p.M2);
  ckpt::write_f64(os, im.p.lambda);
  ckpt::write_f64(os, im.init.M2_initial);
  ckpt::write_f64(os, im.init.f_perturbation);
  ckpt::write_grid(os, im.grid);
  ckpt::write_i64(os, im.k);
  const std::size_t rows = static_cast<std::size_t>(std::min(im.k + 1, im.npts));
  const std::size_t stride = im.kern.F.row_stride();
  ckpt::write_f64_array(os, im.kern.F.raw(), rows * stride);
  ckpt::write_f64_array(os, im.kern.rho.raw(), rows * stride);
  ckpt::write_trajectory(os, im.tr);
}

void QmonNloEvolution::deserialize(std::istream& is) {
  Impl& im = *impl_;
  if (ckpt::read_header(is) != "qmon_nlo")
    throw ValidationError("checkpoint: not a qmon NLO checkpoint");
  if (ckpt::read_i64(is) != im.p.N || ckpt::read_f64(is) != im.p.M2 ||
      ckpt::read_f64(is) != im.p.lambda || ckpt::read_f64(is) != im.init.M2_initial ||
      ckpt::read_f64(is) != im.init.f_perturbation)
    throw ValidationError("checkpoint: parameter mismatch");
  TimeGrid g = ckpt::read_grid(is);
  if (g.t0() != im.grid.t0() || g.dt() != im.grid.dt() || g.n_steps() != im.grid.n_steps())
    throw ValidationError("checkpoint: grid mismatch");
  im.k = static_cast<long>(ckpt::read_i64(is));
  const std::size_t rows = static_cast<std::size_t>(std::min(im.k + 1, im.npts));
  const std::size_t stride = im.kern.F.row_stride();
  ckpt::read_f64_array(is, im.kern.F.raw_mut(), rows * stride);
  ckpt::read_f64_array(is, im.kern.rho.raw_mut(), rows * stride);
  im.tr = ckpt::read_trajectory(is);
}

Trajectory evolve_nlo(const QmonParams& p, const QmonInitial& init, const TimeGrid& grid,
                      std::size_t budget_bytes, int threads) {
  QmonNloEvolution ev(p, init, grid, budget_bytes, threads);
  while (ev.advance()) {
  }
  return ev.trajectory();
}

}  // namespace nqdyn
