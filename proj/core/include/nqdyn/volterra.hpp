#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "nqdyn/errors.hpp"
#include "nqdyn/parallel.hpp"
#include "nqdyn/two_time_kernel.hpp"

namespace nqdyn {

// A first-order-in-time two-time system
//   d/dt F(t, t') = D_F[t; F, rho, y],   d/dt rho(t, t') = D_rho[...],
//   dy/dt = g(t; F, rho, y)
// evolved along the first time argument.  Memory integrals live inside the
// implementation's row_derivative; begin_row lets it refresh cached
// self-energy rows against the current (possibly provisional) row.
class TwoTimeSystem {
 public:
  using C = std::complex<double>;
  virtual ~TwoTimeSystem() = default;
  virtual long aux_size() const { return 0; }
  virtual void begin_row(long /*k*/) {}
  virtual void aux_derivative(long /*k*/, const std::vector<C>& /*y*/,
                              std::vector<C>& /*dy*/) {}
  // Writes d/dt_k F(t_k, t_l) and d/dt_k rho(t_k, t_l), one block of
  // kernel.components() entries each.
  virtual void row_derivative(long k, long l, C* dF, C* dRho) = 0;
  // Same derivative one cell below the diagonal (row m, column m+1),
  // evaluated from finalized rows 0..m+1.  The multistep marcher uses it to
  // start young columns with full-order Adams formulas instead of
  // extrapolation, whose subdiagonal recursion is unstable.
  virtual void ext_derivative(long /*m*/, C* /*dF*/, C* /*dRho*/) {}
};

struct VolterraOptions {
  double corrector_tol = 1e-12;
  int max_corrector_iters = 100;
  double blowup_threshold = 1e12;
  int threads = 1;
};

// Trapezoidal predictor-corrector step for the system above.  The corrector
// is iterated to a fixed point, which makes the scheme the implicit trapezoid
// rule: second-order accurate, exactly time reversible, and |R(i theta)| = 1
// on linear oscillators.
class VolterraStepper {
 public:
  using C = std::complex<double>;

  VolterraStepper(TwoTimeKernel<C>& kernel, TwoTimeSystem& sys, std::vector<C>& aux,
                  VolterraOptions opts = {})
      : kern_(kernel), sys_(sys), aux_(aux), opts_(opts) {
    comps_ = kern_.F.components();
    sites_ = kern_.F.sites();
    fields_ = kern_.F.fields();
  }

  // Fills row k+1 of both kernels and advances aux from t_k to t_{k+1}.
  // Rows 0..k and aux(t_k) must be current.  Throws BlowupError on NaN or on
  // magnitudes beyond blowup_threshold.
  void step(long k) {
    const double dt = kern_.F.grid().dt();
    const long cols0 = k + 1;  // derivative columns at the old row: l = 0..k
    d0F_.assign(static_cast<std::size_t>(cols0) * comps_, C(0));
    d0R_.assign(static_cast<std::size_t>(cols0) * comps_, C(0));
    d1F_.assign(static_cast<std::size_t>(k + 2) * comps_, C(0));
    d1R_.assign(static_cast<std::size_t>(k + 2) * comps_, C(0));

    sys_.begin_row(k);
    parallel_for(0, cols0, opts_.threads, [&](long l) {
      sys_.row_derivative(k, l, &d0F_[l * comps_], &d0R_[l * comps_]);
    });
    dy0_.assign(aux_.size(), C(0));
    sys_.aux_derivative(k, aux_, dy0_);

    // Predictor: explicit Euler.
    yold_ = aux_;
    for (long l = 0; l <= k; ++l) {
      const C* f = kern_.F.block(k, l);
      const C* r = kern_.rho.block(k, l);
      C* fn = kern_.F.block_mut(k + 1, l);
      C* rn = kern_.rho.block_mut(k + 1, l);
      for (std::size_t c = 0; c < comps_; ++c) {
        fn[c] = f[c] + dt * d0F_[l * comps_ + c];
        rn[c] = r[c] + dt * d0R_[l * comps_ + c];
      }
      kern_.F.sync_mirror(k + 1, l);
      kern_.rho.sync_mirror(k + 1, l);
    }
    predict_diagonal(k, dt);
    for (std::size_t i = 0; i < aux_.size(); ++i) aux_[i] = yold_[i] + dt * dy0_[i];

    // Corrector: iterate the trapezoid update to convergence.  tol = 0 means
    // iterate until the fixed point stagnates at machine precision.
    double delta = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts_.max_corrector_iters; ++it) {
      delta = corrector_pass(k, dt);
      if (delta <= opts_.corrector_tol) break;
      if (!std::isfinite(delta)) break;
      if (delta >= prev) break;  // stagnated below the representable scale
      prev = delta;
    }
    if (!std::isfinite(delta))
      throw BlowupError("volterra step produced non-finite values", k + 1);

    check_blowup(k + 1);
  }

 private:
  void predict_diagonal(long k, double dt) {
    // dF(t,t)/dt = d1 + exchange-transpose(d1); rho(t,t) stays canonical.
    const C* f = kern_.F.block(k, k);
    C* fn = kern_.F.block_mut(k + 1, k + 1);
    for (int i = 0; i < sites_; ++i)
      for (int j = 0; j < sites_; ++j)
        for (int a = 0; a < fields_; ++a)
          for (int b = 0; b < fields_; ++b) {
            std::size_t c = kern_.F.comp_index(i, j, a, b);
            std::size_t ct = kern_.F.comp_index(j, i, b, a);
            fn[c] = f[c] + dt * (d0F_[k * comps_ + c] + d0F_[k * comps_ + ct]);
          }
  }

  double corrector_pass(long k, double dt) {
    sys_.begin_row(k + 1);
    parallel_for(0, k + 2, opts_.threads, [&](long l) {
      sys_.row_derivative(k + 1, l, &d1F_[l * comps_], &d1R_[l * comps_]);
    });

    double delta = 0.0;
    for (long l = 0; l <= k; ++l) {
      const C* f = kern_.F.block(k, l);
      const C* r = kern_.rho.block(k, l);
      C* fn = kern_.F.block_mut(k + 1, l);
      C* rn = kern_.rho.block_mut(k + 1, l);
      for (std::size_t c = 0; c < comps_; ++c) {
        C vf = f[c] + 0.5 * dt * (d0F_[l * comps_ + c] + d1F_[l * comps_ + c]);
        C vr = r[c] + 0.5 * dt * (d0R_[l * comps_ + c] + d1R_[l * comps_ + c]);
        delta = std::max(delta, std::abs(vf - fn[c]));
        delta = std::max(delta, std::abs(vr - rn[c]));
        fn[c] = vf;
        rn[c] = vr;
      }
      kern_.F.sync_mirror(k + 1, l);
      kern_.rho.sync_mirror(k + 1, l);
    }
    {
      const C* f = kern_.F.block(k, k);
      C* fn = kern_.F.block_mut(k + 1, k + 1);
      for (int i = 0; i < sites_; ++i)
        for (int j = 0; j < sites_; ++j)
          for (int a = 0; a < fields_; ++a)
            for (int b = 0; b < fields_; ++b) {
              std::size_t c = kern_.F.comp_index(i, j, a, b);
              std::size_t ct = kern_.F.comp_index(j, i, b, a);
              C d0 = d0F_[k * comps_ + c] + d0F_[k * comps_ + ct];
              C d1 = d1F_[(k + 1) * comps_ + c] + d1F_[(k + 1) * comps_ + ct];
              C vf = f[c] + 0.5 * dt * (d0 + d1);
              delta = std::max(delta, std::abs(vf - fn[c]));
              fn[c] = vf;
            }
    }
    dy1_.assign(aux_.size(), C(0));
    sys_.aux_derivative(k + 1, aux_, dy1_);
    for (std::size_t i = 0; i < aux_.size(); ++i) {
      C v = yold_[i] + 0.5 * dt * (dy0_[i] + dy1_[i]);
      delta = std::max(delta, std::abs(v - aux_[i]));
      aux_[i] = v;
    }
    return delta;
  }

  void check_blowup(long row) {
    double m = 0.0;
    for (long l = 0; l <= row; ++l) {
      const C* f = kern_.F.block(row, l);
      for (std::size_t c = 0; c < comps_; ++c) m = std::max(m, std::abs(f[c]));
    }
    for (const C& v : aux_) m = std::max(m, std::abs(v));
    if (!std::isfinite(m) || m > opts_.blowup_threshold)
      throw BlowupError("kernel magnitude " + std::to_string(m) + " beyond threshold", row);
  }

  TwoTimeKernel<C>& kern_;
  TwoTimeSystem& sys_;
  std::vector<C>& aux_;
  VolterraOptions opts_;
  std::size_t comps_ = 0;
  int sites_ = 0, fields_ = 0;
  std::vector<C> d0F_, d0R_, d1F_, d1R_, dy0_, dy1_, yold_;
};

// Fourth-order multistep marching for the same system: Adams-Bashforth-4
// predictor, Adams-Moulton-4 corrector (PECE), with the diagonal marched on
// the total equal-time derivative.  The two youngest columns have fewer
// derivative samples above the diagonal, so the marcher asks the system for
// one below-diagonal derivative per row (ext_derivative) and uses shortened
// Adams formulas there; every cell is produced by an Adams update, which
// keeps the near-diagonal recursion stable.  Requires rows 0..5 and the
// condensate history to be supplied by a bootstrap integrator before the
// first step (k >= 5).  History derivative rows are recomputed
// deterministically by init_history, so restoring the kernel rows restores
// the integrator bit-exactly.
class Multistep4Stepper {
 public:
  using C = std::complex<double>;

  Multistep4Stepper(TwoTimeKernel<C>& kernel, TwoTimeSystem& sys, std::vector<C>& aux,
                    std::vector<C>& aux_history, VolterraOptions opts = {})
      : kern_(kernel), sys_(sys), aux_(aux), aux_hist_(aux_history), opts_(opts) {
    comps_ = kern_.F.components();
    sites_ = kern_.F.sites();
    fields_ = kern_.F.fields();
    naux_ = aux_.size();
    const std::size_t rowcap = static_cast<std::size_t>(kern_.F.grid().n_points()) * comps_;
    for (int h = 0; h < 4; ++h) {
      hF_[h].assign(rowcap, C(0));
      hR_[h].assign(rowcap, C(0));
      hD_[h].assign(comps_, C(0));
      hY_[h].assign(naux_, C(0));
    }
    gF_.assign(rowcap, C(0));
    gR_.assign(rowcap, C(0));
    gY_.assign(naux_, C(0));
  }

  // Evaluates and stores derivative history for rows k0-3..k0 from the
  // current kernel and condensate history (rows must be final).
  void init_history(long k0) {
    for (long m = k0 - 3; m <= k0; ++m) evaluate_into_history(m);
  }

  // Fills row k+1 of both kernels and advances aux from t_k to t_{k+1}.
  void step(long k) {
    const double dt = kern_.F.grid().dt();
    const long r = k + 1;
    const std::vector<C>& fk = hF_[k & 3];
    const std::vector<C>& fk1 = hF_[(k - 1) & 3];
    const std::vector<C>& fk2 = hF_[(k - 2) & 3];
    const std::vector<C>& fk3 = hF_[(k - 3) & 3];
    const std::vector<C>& rk = hR_[k & 3];
    const std::vector<C>& rk1 = hR_[(k - 1) & 3];
    const std::vector<C>& rk2 = hR_[(k - 2) & 3];
    const std::vector<C>& rk3 = hR_[(k - 3) & 3];

    // Below-diagonal derivative samples for the two youngest columns:
    // d/dt at (k-1, col k) and at (k-2, col k-1).  Both depend only on
    // finalized rows, so a resumed run recomputes identical values.
    eF0_.assign(comps_, C(0)); eR0_.assign(comps_, C(0));
    eF1_.assign(comps_, C(0)); eR1_.assign(comps_, C(0));
    sys_.ext_derivative(k - 1, eF0_.data(), eR0_.data());
    sys_.ext_derivative(k - 2, eF1_.data(), eR1_.data());

    // Predictor.
    for (long l = 0; l <= k - 2; ++l) {
      const C* f = kern_.F.block(k, l);
      const C* rh = kern_.rho.block(k, l);
      C* fn = kern_.F.block_mut(r, l);
      C* rn = kern_.rho.block_mut(r, l);
      const std::size_t o = static_cast<std::size_t>(l) * comps_;
      if (l <= k - 3) {
        const double a = 55.0 / 24.0, b = -59.0 / 24.0, c = 37.0 / 24.0, d = -9.0 / 24.0;
        for (std::size_t q = 0; q < comps_; ++q) {
          fn[q] = f[q] + dt * (a * fk[o + q] + b * fk1[o + q] + c * fk2[o + q] + d * fk3[o + q]);
          rn[q] = rh[q] + dt * (a * rk[o + q] + b * rk1[o + q] + c * rk2[o + q] + d * rk3[o + q]);
        }
      } else {
        const double a = 23.0 / 12.0, b = -16.0 / 12.0, c = 5.0 / 12.0;
        for (std::size_t q = 0; q < comps_; ++q) {
          fn[q] = f[q] + dt * (a * fk[o + q] + b * fk1[o + q] + c * fk2[o + q]);
          rn[q] = rh[q] + dt * (a * rk[o + q] + b * rk1[o + q] + c * rk2[o + q]);
        }
      }
      kern_.F.sync_mirror(r, l);
      kern_.rho.sync_mirror(r, l);
    }
    {
      // l = k-1: AB3 with samples at rows k, k-1, k-2 (last below diagonal).
      const long l = k - 1;
      const C* f = kern_.F.block(k, l);
      const C* rh = kern_.rho.block(k, l);
      C* fn = kern_.F.block_mut(r, l);
      C* rn = kern_.rho.block_mut(r, l);
      const std::size_t o = static_cast<std::size_t>(l) * comps_;
      const double a = 23.0 / 12.0, b = -16.0 / 12.0, c = 5.0 / 12.0;
      for (std::size_t q = 0; q < comps_; ++q) {
        fn[q] = f[q] + dt * (a * fk[o + q] + b * fk1[o + q] + c * eF1_[q]);
        rn[q] = rh[q] + dt * (a * rk[o + q] + b * rk1[o + q] + c * eR1_[q]);
      }
      kern_.F.sync_mirror(r, l);
      kern_.rho.sync_mirror(r, l);
    }
    {
      // l = k: AB2 with samples at rows k (diagonal) and k-1 (below).
      const long l = k;
      const C* f = kern_.F.block(k, l);
      const C* rh = kern_.rho.block(k, l);
      C* fn = kern_.F.block_mut(r, l);
      C* rn = kern_.rho.block_mut(r, l);
      const std::size_t o = static_cast<std::size_t>(l) * comps_;
      for (std::size_t q = 0; q < comps_; ++q) {
        fn[q] = f[q] + dt * (1.5 * fk[o + q] - 0.5 * eF0_[q]);
        rn[q] = rh[q] + dt * (1.5 * rk[o + q] - 0.5 * eR0_[q]);
      }
      kern_.F.sync_mirror(r, l);
      kern_.rho.sync_mirror(r, l);
    }
    {
      // Diagonal: AB4 on the total equal-time derivative.
      const C* f = kern_.F.block(k, k);
      C* fn = kern_.F.block_mut(r, r);
      const C* d0 = hD_[k & 3].data();
      const C* d1 = hD_[(k - 1) & 3].data();
      const C* d2 = hD_[(k - 2) & 3].data();
      const C* d3 = hD_[(k - 3) & 3].data();
      for (std::size_t q = 0; q < comps_; ++q)
        fn[q] = f[q] + dt / 24.0 * (55.0 * d0[q] - 59.0 * d1[q] + 37.0 * d2[q] - 9.0 * d3[q]);
    }
    yold_.assign(naux_, C(0));
    for (std::size_t i = 0; i < naux_; ++i) yold_[i] = aux_hist_[static_cast<std::size_t>(k) * naux_ + i];
    {
      const C* y0 = hY_[k & 3].data();
      const C* y1 = hY_[(k - 1) & 3].data();
      const C* y2 = hY_[(k - 2) & 3].data();
      const C* y3 = hY_[(k - 3) & 3].data();
      for (std::size_t i = 0; i < naux_; ++i)
        aux_[i] = yold_[i] + dt / 24.0 * (55.0 * y0[i] - 59.0 * y1[i] + 37.0 * y2[i] - 9.0 * y3[i]);
    }

    // Corrector passes (evaluate + Moulton update), then a final evaluation
    // that becomes the stored derivative history of row k+1.
    for (int pass = 0; pass < passes_; ++pass) {
      evaluate_current(r);
      for (long l = 0; l <= k; ++l) {
        const C* f = kern_.F.block(k, l);
        const C* rh = kern_.rho.block(k, l);
        C* fn = kern_.F.block_mut(r, l);
        C* rn = kern_.rho.block_mut(r, l);
        const std::size_t o = static_cast<std::size_t>(l) * comps_;
        if (l <= k - 1) {
          // AM4; the l = k-1 column takes its oldest sample below the diagonal.
          const C* f2 = (l <= k - 2) ? &fk2[o] : eF1_.data();
          const C* r2 = (l <= k - 2) ? &rk2[o] : eR1_.data();
          const double a = 9.0 / 24.0, b = 19.0 / 24.0, c = -5.0 / 24.0, d = 1.0 / 24.0;
          for (std::size_t q = 0; q < comps_; ++q) {
            fn[q] = f[q] + dt * (a * gF_[o + q] + b * fk[o + q] + c * fk1[o + q] + d * f2[q]);
            rn[q] = rh[q] + dt * (a * gR_[o + q] + b * rk[o + q] + c * rk1[o + q] + d * r2[q]);
          }
        } else {
          // l = k: AM3 with the older sample below the diagonal.
          const double a = 5.0 / 12.0, b = 8.0 / 12.0, c = -1.0 / 12.0;
          for (std::size_t q = 0; q < comps_; ++q) {
            fn[q] = f[q] + dt * (a * gF_[o + q] + b * fk[o + q] + c * eF0_[q]);
            rn[q] = rh[q] + dt * (a * gR_[o + q] + b * rk[o + q] + c * eR0_[q]);
          }
        }
        kern_.F.sync_mirror(r, l);
        kern_.rho.sync_mirror(r, l);
      }
      {
        const C* f = kern_.F.block(k, k);
        C* fn = kern_.F.block_mut(r, r);
        diagonal_combo(r, gF_, dcur_);
        const C* d0 = hD_[k & 3].data();
        const C* d1 = hD_[(k - 1) & 3].data();
        const C* d2 = hD_[(k - 2) & 3].data();
        for (std::size_t q = 0; q < comps_; ++q)
          fn[q] = f[q] + dt / 24.0 * (9.0 * dcur_[q] + 19.0 * d0[q] - 5.0 * d1[q] + d2[q]);
      }
      {
        const C* y0 = hY_[k & 3].data();
        const C* y1 = hY_[(k - 1) & 3].data();
        const C* y2 = hY_[(k - 2) & 3].data();
        for (std::size_t i = 0; i < naux_; ++i)
          aux_[i] = yold_[i] + dt / 24.0 * (9.0 * gY_[i] + 19.0 * y0[i] - 5.0 * y1[i] + y2[i]);
      }
    }
    for (std::size_t i = 0; i < naux_; ++i)
      aux_hist_[static_cast<std::size_t>(r) * naux_ + i] = aux_[i];
    evaluate_into_history(r, /*aux_is_current=*/true);
    check_blowup(r);
  }

 private:
  // dF(t,t)/dt from the first-argument derivative row: d + exchange-transpose(d).
  void diagonal_combo(long r, const std::vector<C>& g, std::vector<C>& out) {
    out.assign(comps_, C(0));
    const std::size_t o = static_cast<std::size_t>(r) * comps_;
    for (int i = 0; i < sites_; ++i)
      for (int j = 0; j < sites_; ++j)
        for (int a = 0; a < fields_; ++a)
          for (int b = 0; b < fields_; ++b) {
            std::size_t c = kern_.F.comp_index(i, j, a, b);
            std::size_t ct = kern_.F.comp_index(j, i, b, a);
            out[c] = g[o + c] + g[o + ct];
          }
  }

  // Evaluates derivatives of row r at its current values into gF_/gR_/gY_.
  void evaluate_current(long r) {
    sys_.begin_row(r);
    parallel_for(0, r + 1, opts_.threads, [&](long l) {
      sys_.row_derivative(r, l, &gF_[static_cast<std::size_t>(l) * comps_],
                          &gR_[static_cast<std::size_t>(l) * comps_]);
    });
    gY_.assign(naux_, C(0));
    sys_.aux_derivative(r, aux_, gY_);
  }

  void evaluate_into_history(long m, bool aux_is_current = false) {
    if (!aux_is_current)
      for (std::size_t i = 0; i < naux_; ++i)
        aux_[i] = aux_hist_[static_cast<std::size_t>(m) * naux_ + i];
    evaluate_current(m);
    const int h = static_cast<int>(m & 3);
    const std::size_t n = static_cast<std::size_t>(m + 1) * comps_;
    std::copy(gF_.begin(), gF_.begin() + static_cast<long>(n), hF_[h].begin());
    std::copy(gR_.begin(), gR_.begin() + static_cast<long>(n), hR_[h].begin());
    diagonal_combo(m, gF_, hD_[h]);
    hY_[h] = gY_;
  }

  void check_blowup(long row) {
    double m = 0.0;
    for (long l = 0; l <= row; ++l) {
      const C* f = kern_.F.block(row, l);
      for (std::size_t c = 0; c < comps_; ++c) m = std::max(m, std::abs(f[c]));
    }
    for (const C& v : aux_) m = std::max(m, std::abs(v));
    if (!std::isfinite(m) || m > opts_.blowup_threshold)
      throw BlowupError("kernel magnitude " + std::to_string(m) + " beyond threshold", row);
  }

  TwoTimeKernel<C>& kern_;
  TwoTimeSystem& sys_;
  std::vector<C>& aux_;
  std::vector<C>& aux_hist_;  // flat (n_points x aux_size) condensate history
  VolterraOptions opts_;
  int passes_ = 1;
  std::size_t comps_ = 0, naux_ = 0;
  int sites_ = 0, fields_ = 0;
  std::vector<C> gF_, gR_, gY_, dcur_, yold_;
  std::vector<C> eF0_, eR0_, eF1_, eR1_;
  std::vector<C> hF_[4], hR_[4], hD_[4], hY_[4];
};

}  // namespace nqdyn
