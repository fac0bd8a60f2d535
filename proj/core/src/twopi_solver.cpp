#include "nqdyn/twopi_solver.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

#include "nqdyn/checkpoint.hpp"
#include "nqdyn/contraction_engine.hpp"
#include "nqdyn/errors.hpp"
#include "nqdyn/parallel.hpp"
#include "nqdyn/quadrature.hpp"
#include "nqdyn/two_time_kernel.hpp"
#include "nqdyn/volterra.hpp"

namespace nqdyn {

namespace {

using C = std::complex<double>;
constexpr double kNc = 2.0;  // field components of the complex doublet

// Hopping plus on-site energy matrix, mirroring the exact Hamiltonian's
// link convention (open chain by default; I = 2 with double_link doubles the
// single link; periodic adds the wrap link for I > 2).
std::vector<double> hopping_matrix(const BoseHubbardParams& p) {
  const int I = p.I;
  std::vector<double> T(static_cast<std::size_t>(I) * I, 0.0);
  auto add_link = [&](int u, int v) {
    T[static_cast<std::size_t>(u) * I + v] -= p.J;
    T[static_cast<std::size_t>(v) * I + u] -= p.J;
  };
  for (int i = 0; i + 1 < I; ++i) add_link(i, i + 1);
  if (I == 2 && p.double_link) add_link(0, 1);
  if (I > 2 && p.periodic) add_link(I - 1, 0);
  for (int i = 0; i < I; ++i) {
    double eps = p.eps.empty() ? 0.0 : p.eps[static_cast<std::size_t>(i)];
    T[static_cast<std::size_t>(i) * I + i] += eps;
  }
  return T;
}

inline C phi_comp(const C& phi, int upper) { return upper == 0 ? phi : std::conj(phi); }

// Two-site specialization of the self-energy contraction; this is the hot
// loop of every memory-scheme run.  off[] maps the (site, field) pair index
// to the block offset of layout ((i*I + j)*2 + a)*2 + b, so each off[R]
// selects a pair of 2-complex lanes {0,1} and {4,5}.
#if defined(__AVX2__) && defined(__FMA__)
inline void accumulate2(const C* sig, const C* X, double w, C* acc) {
  static constexpr int off[4] = {0, 2, 8, 10};
  // X lanes and their re/im swaps are shared by all four sigma rows.
  __m256d x01[4], x45[4], p01[4], p45[4];
  for (int K = 0; K < 4; ++K) {
    const double* x = reinterpret_cast<const double*>(X + off[K]);
    x01[K] = _mm256_loadu_pd(x);
    x45[K] = _mm256_loadu_pd(x + 8);
    p01[K] = _mm256_permute_pd(x01[K], 0x5);
    p45[K] = _mm256_permute_pd(x45[K], 0x5);
  }
  // (sr + i si)(xr + i xi) = sr*[xr,xi] + [-si,+si]*[xi,xr]; the weight w is
  // applied once at the end of each row.
  const __m256d sign = _mm256_setr_pd(-0.0, 0.0, -0.0, 0.0);
  const __m256d vw = _mm256_set1_pd(w);
  for (int R = 0; R < 4; ++R) {
    const double* srow = reinterpret_cast<const double*>(sig + R * 4);
    __m256d t01 = _mm256_setzero_pd();
    __m256d t45 = _mm256_setzero_pd();
    for (int K = 0; K < 4; ++K) {
      const __m256d vr = _mm256_broadcast_sd(srow + 2 * K);
      const __m256d vi = _mm256_xor_pd(_mm256_broadcast_sd(srow + 2 * K + 1), sign);
      t01 = _mm256_fmadd_pd(vr, x01[K], t01);
      t01 = _mm256_fmadd_pd(vi, p01[K], t01);
      t45 = _mm256_fmadd_pd(vr, x45[K], t45);
      t45 = _mm256_fmadd_pd(vi, p45[K], t45);
    }
    double* a = reinterpret_cast<double*>(acc + off[R]);
    _mm256_storeu_pd(a, _mm256_fmadd_pd(vw, t01, _mm256_loadu_pd(a)));
    _mm256_storeu_pd(a + 8, _mm256_fmadd_pd(vw, t45, _mm256_loadu_pd(a + 8)));
  }
}
#else
inline void accumulate2(const C* sig, const C* X, double w, C* acc) {
  static constexpr int off[4] = {0, 2, 8, 10};
  for (int R = 0; R < 4; ++R) {
    C* a = acc + off[R];
    const C* srow = sig + R * 4;
    C a0 = a[0], a1 = a[1], a4 = a[4], a5 = a[5];
    for (int K = 0; K < 4; ++K) {
      const C s = w * srow[K];
      const C* x = X + off[K];
      a0 += s * x[0];
      a1 += s * x[1];
      a4 += s * x[4];
      a5 += s * x[5];
    }
    a[0] = a0; a[1] = a1; a[4] = a4; a[5] = a5;
  }
}
#endif

// d/dt prefactor of the kernel equations per raised first index:
// i hbar s_a dX = RHS  =>  dX = (s_a / (i hbar)) RHS,  s_0 = +1, s_1 = -1.
inline C dt_prefactor(int a, double hbar) {
  return a == 0 ? C(0.0, -1.0 / hbar) : C(0.0, 1.0 / hbar);
}

// Vacuum-subtracted equal-time statistical kernel entering every local
// interaction insertion (normal ordering of the quartic term).
inline C ftilde(const C* feq, int I, int i, int j, int a, int b) {
  C v = feq[((static_cast<std::size_t>(i) * I + j) * 2 + a) * 2 + b];
  if (i == j && a != b) v -= 0.5;
  return v;
}

struct LocalModel {
  BoseHubbardParams p;
  std::vector<double> T;  // I x I
  TwopiScheme scheme;
  const ContractionEngine* engine = nullptr;  // local self-energy table

  int I() const { return p.I; }
  int D() const { return 2 * p.I; }

  std::size_t comp(int i, int j, int a, int b) const {
    return ((static_cast<std::size_t>(i) * p.I + j) * 2 + a) * 2 + b;
  }

  // L^{a}{}_{c,im}(t) as a D x D matrix over mu = (i,a), nu = (m,c).
  void build_local_matrix(const std::vector<C>& phi, const C* feq,
                          std::vector<C>& L) const {
    const int I = p.I, D = 2 * I;
    L.assign(static_cast<std::size_t>(D) * D, C(0));
    const double u = p.U / kNc;
    for (int i = 0; i < I; ++i) {
      const double n0 = std::norm(phi[static_cast<std::size_t>(i)]);
      for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c) {
          C v = 0.0;
          if (a == c) v += 2.0 * u * n0;
          v += 2.0 * u * phi_comp(phi[static_cast<std::size_t>(i)], a) *
               phi_comp(phi[static_cast<std::size_t>(i)], 1 - c);
          L[static_cast<std::size_t>(i * 2 + a) * D + (i * 2 + c)] += v;
        }
      if (scheme != TwopiScheme::Bogoliubov && engine) {
        for (const auto& term : engine->local_sigma()) {
          C v = term.coeff * ftilde(feq, I, i, i, term.s, term.t);
          L[static_cast<std::size_t>(i * 2 + term.a) * D + (i * 2 + term.c)] += v;
        }
      }
    }
    for (int i = 0; i < I; ++i)
      for (int m = 0; m < I; ++m) {
        double t = T[static_cast<std::size_t>(i) * I + m];
        if (t == 0.0) continue;
        for (int a = 0; a < 2; ++a)
          L[static_cast<std::size_t>(i * 2 + a) * D + (m * 2 + a)] += t;
      }
  }

  // First-argument derivative of a kernel block: out = pref(a) (L X + mem).
  void apply(const std::vector<C>& L, const C* X, const C* mem, C* out) const {
    const int I = p.I, D = 2 * I;
    for (int i = 0; i < I; ++i)
      for (int a = 0; a < 2; ++a) {
        const C pref = dt_prefactor(a, p.hbar);
        const C* Lrow = L.data() + static_cast<std::size_t>(i * 2 + a) * D;
        for (int j = 0; j < I; ++j)
          for (int b = 0; b < 2; ++b) {
            C acc = mem ? mem[comp(i, j, a, b)] : C(0);
            for (int m = 0; m < I; ++m)
              for (int c = 0; c < 2; ++c)
                acc += Lrow[m * 2 + c] * X[comp(m, j, c, b)];
            out[comp(i, j, a, b)] = pref * acc;
          }
      }
  }

  // Mean-field right-hand side: i hbar d phi_i = rhs_i.
  void phi_rhs(const std::vector<C>& phi, const C* feq, const C* mem_phi,
               std::vector<C>& rhs) const {
    const int I = p.I;
    const double u = p.U / kNc;
    rhs.assign(static_cast<std::size_t>(I), C(0));
    for (int i = 0; i < I; ++i) {
      C acc = 0.0;
      for (int m = 0; m < I; ++m)
        acc += T[static_cast<std::size_t>(i) * I + m] * phi[static_cast<std::size_t>(m)];
      const C f = phi[static_cast<std::size_t>(i)];
      C trf = ftilde(feq, I, i, i, 0, 1) + ftilde(feq, I, i, i, 1, 0);
      acc += u * (2.0 * std::norm(f) + trf) * f;
      for (int d = 0; d < 2; ++d) {
        C g = ftilde(feq, I, i, i, 0, 1 - d) + ftilde(feq, I, i, i, 1 - d, 0);
        acc += u * g * phi_comp(f, d);
      }
      if (mem_phi) acc += mem_phi[static_cast<std::size_t>(i)];
      rhs[static_cast<std::size_t>(i)] = acc;
    }
  }
};

// Equal-time observables shared by both integration modes.
void record_row(Trajectory& traj, const LocalModel& lm, double t,
                const std::vector<C>& phi, const C* feq) {
  const int I = lm.p.I;
  traj.t.push_back(t);
  Eigen::MatrixXcd spdm(I, I);
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < I; ++j)
      spdm(i, j) = std::conj(phi[static_cast<std::size_t>(i)]) * phi[static_cast<std::size_t>(j)] +
                   ftilde(feq, I, i, j, 1, 0);
  spdm = 0.5 * (spdm + spdm.adjoint()).eval();

  double ntot = 0.0, cond = 0.0;
  for (int i = 0; i < I; ++i) {
    double ni = spdm(i, i).real();
    traj.column("n_" + std::to_string(i + 1)).push_back(ni);
    ntot += ni;
    cond += std::norm(phi[static_cast<std::size_t>(i)]);
  }
  auto nq = quasimomentum_intensity(spdm);
  for (int q = 0; q < I; ++q)
    traj.column("nq_" + std::to_string(q)).push_back(nq[static_cast<std::size_t>(q)]);
  traj.column("cond_total").push_back(cond);
  traj.column("N_total").push_back(ntot);

  // Gaussian (Wick) energy; exactly conserved by the time-local schemes.
  double e = 0.0;
  C ekin = 0.0;
  for (int i = 0; i < I; ++i)
    for (int m = 0; m < I; ++m)
      ekin += lm.T[static_cast<std::size_t>(i) * I + m] * spdm(i, m);
  e += ekin.real();
  for (int i = 0; i < I; ++i) {
    const C f = phi[static_cast<std::size_t>(i)];
    double nc = std::norm(f);
    double nt = ftilde(feq, I, i, i, 1, 0).real();
    C mt = feq[lm.comp(i, i, 0, 0)];
    double phi2m = 2.0 * (std::conj(f) * std::conj(f) * mt).real();
    e += 0.5 * lm.p.U *
         (nc * nc + 4.0 * nc * nt + phi2m + 2.0 * nt * nt + std::norm(mt));
  }
  traj.column("energy").push_back(e);
}

// Full two-time system fed to the Volterra stepper.
class TwopiSystem : public TwoTimeSystem {
 public:
  TwopiSystem(TwoTimeKernel<C>& kern, const LocalModel& lm,
              const ContractionEngine* engine, bool use_memory,
              const std::vector<C>* aux, int threads)
      : kern_(kern), lm_(lm), engine_(engine), use_memory_(use_memory),
        aux_(aux), threads_(threads) {
    const long np = kern_.F.grid().n_points();
    phi_hist_.assign(static_cast<std::size_t>(np) * lm_.I(), C(0));
    if (use_memory_ && engine_) {
      for (const auto& f : engine_->phi_force_monomials())
        if (f.a == 1) force_terms_.push_back(f);
      const int D = lm_.D();
      sigF_.assign(static_cast<std::size_t>(np) * D * D, C(0));
      sigR_.assign(static_cast<std::size_t>(np) * D * D, C(0));
      yrho_.assign(static_cast<std::size_t>(np) * lm_.I(), C(0));
    }
  }

  long aux_size() const override { return lm_.I(); }

  const std::vector<C>& phi_history() const { return phi_hist_; }
  std::vector<C>& phi_history_mut() { return phi_hist_; }

  void begin_row(long r) override {
    const int I = lm_.I();
    for (int i = 0; i < I; ++i)
      phi_hist_[static_cast<std::size_t>(r) * I + i] = (*aux_)[static_cast<std::size_t>(i)];
    lm_.build_local_matrix(*aux_, kern_.F.block(r, r), Lcur_);
    row_ = r;
    if (!use_memory_) return;
    parallel_for(0, r + 1, threads_, [&](long z) { build_sigma_row(r, z); });
    integrate_memory_row(r);
  }

  // Memory integrals for every column of row r at once, walking the kernel
  // row-by-row in z so the large two-time storage is streamed sequentially.
  //   memF(l) = (1/2h) [ int_0^t Sig_rho F - int_0^{t'} Sig_F rho ]
  //   memR(l) = (1/2h)   int_{t'}^t Sig_rho rho
  // The F-sector integrand has a kink at z = t' (rho changes branch), so the
  // first integral is split there and each piece gets its own rule.
  void integrate_memory_row(long r) {
    const std::size_t comps = kern_.F.components();
    memF_row_.assign(static_cast<std::size_t>(r + 1) * comps, C(0));
    memR_row_.assign(static_cast<std::size_t>(r + 1) * comps, C(0));
    const double dt = kern_.F.grid().dt();
    const double h2 = 1.0 / (2.0 * lm_.p.hbar);
    for (long z = 0; z <= r; ++z) {
      const C* sF = sig_row(sigF_, z);
      const C* sR = sig_row(sigR_, z);
      const C* Fz = kern_.F.block(z, 0);
      const C* Rz = kern_.rho.block(z, 0);
      for (long l = 0; l <= r; ++l) {
        const double wa = quad4_weight(z, 0, l, r) * dt * h2;
        const double wb = quad4_weight(z, l, r, r) * dt * h2;
        C* mF = memF_row_.data() + static_cast<std::size_t>(l) * comps;
        if (wa + wb != 0.0) accumulate(sR, Fz + static_cast<std::size_t>(l) * comps, wa + wb, mF);
        if (wa != 0.0) accumulate(sF, Rz + static_cast<std::size_t>(l) * comps, -wa, mF);
        if (wb != 0.0)
          accumulate(sR, Rz + static_cast<std::size_t>(l) * comps, wb,
                     memR_row_.data() + static_cast<std::size_t>(l) * comps);
      }
    }
  }

  void aux_derivative(long r, const std::vector<C>& y, std::vector<C>& dy) override {
    const int I = lm_.I();
    std::vector<C> mem;
    const C* memp = nullptr;
    if (use_memory_) {
      mem.assign(static_cast<std::size_t>(I), C(0));
      // mem_i = +i * int_0^t dz Yrho_i(t, z)
      const double dt = kern_.F.grid().dt();
      for (long z = 0; z <= r; ++z) {
        double w = quad4_weight(z, 0, r, r);
        if (w == 0.0) continue;
        for (int i = 0; i < I; ++i)
          mem[static_cast<std::size_t>(i)] +=
              C(0.0, 1.0) * w * dt * yrho_[static_cast<std::size_t>(z) * I + i];
      }
      memp = mem.data();
    }
    std::vector<C> rhs;
    lm_.phi_rhs(y, kern_.F.block(r, r), memp, rhs);
    const C pref(0.0, -1.0 / lm_.p.hbar);
    for (int i = 0; i < I; ++i) dy[static_cast<std::size_t>(i)] = pref * rhs[static_cast<std::size_t>(i)];
  }

  // First-argument derivative one cell below the diagonal: (row m, column
  // m+1).  The equations of motion hold on the whole two-time square and the
  // mirrored storage provides every block they reference; only the memory
  // integral bounds change (t' > t reverses the rho-sector integral).  The
  // context is rebuilt from stored history, so the result depends only on
  // finalized rows.
  void ext_derivative(long m, C* dF, C* dRho) override {
    const long l = m + 1;
    const int I = lm_.I();
    std::vector<C> phim(phi_hist_.begin() + static_cast<std::size_t>(m) * I,
                        phi_hist_.begin() + static_cast<std::size_t>(m + 1) * I);
    std::vector<C> Lext;
    lm_.build_local_matrix(phim, kern_.F.block(m, m), Lext);
    const C* Fb = kern_.F.block(m, l);
    const C* Rb = kern_.rho.block(m, l);
    if (!use_memory_) {
      lm_.apply(Lext, Fb, nullptr, dF);
      lm_.apply(Lext, Rb, nullptr, dRho);
      return;
    }
    parallel_for(0, l + 1, threads_, [&](long z) { build_sigma_row(m, z); });
    static thread_local std::vector<C> memF, memR;
    const std::size_t comps = kern_.F.components();
    memF.assign(comps, C(0));
    memR.assign(comps, C(0));
    const double dt = kern_.F.grid().dt();
    const double h2 = 1.0 / (2.0 * lm_.p.hbar);
    for (long z = 0; z <= l; ++z) {
      double w = quad4_weight(z, 0, m, l) * dt * h2;
      if (w != 0.0) accumulate(sig_row(sigR_, z), kern_.F.block(z, l), w, memF.data());
    }
    for (long z = 0; z <= l; ++z) {
      // Sigma_F(m, z) crosses the diagonal at z = m, so split there.
      double w = (quad4_weight(z, 0, m, l) + quad4_weight(z, m, l, l)) * dt * h2;
      if (w != 0.0) accumulate(sig_row(sigF_, z), kern_.rho.block(z, l), -w, memF.data());
    }
    for (long z = std::max(0L, l - 4); z <= l; ++z) {
      double w = -quad4_weight(z, m, l, l) * dt * h2;
      if (w != 0.0) accumulate(sig_row(sigR_, z), kern_.rho.block(z, l), w, memR.data());
    }
    lm_.apply(Lext, Fb, memF.data(), dF);
    lm_.apply(Lext, Rb, memR.data(), dRho);
  }

  void row_derivative(long r, long l, C* dF, C* dRho) override {
    const std::size_t comps = kern_.F.components();
    const C* Fb = kern_.F.block(r, l);
    const C* Rb = kern_.rho.block(r, l);
    if (!use_memory_) {
      lm_.apply(Lcur_, Fb, nullptr, dF);
      lm_.apply(Lcur_, Rb, nullptr, dRho);
      return;
    }
    lm_.apply(Lcur_, Fb, memF_row_.data() + static_cast<std::size_t>(l) * comps, dF);
    lm_.apply(Lcur_, Rb, memR_row_.data() + static_cast<std::size_t>(l) * comps, dRho);
  }

 private:
  const C* sig_row(const std::vector<C>& s, long z) const {
    const int D = lm_.D();
    return s.data() + static_cast<std::size_t>(z) * D * D;
  }

  // acc^{ab}_{ij} += w * Sig^{a}{}_{c,im} X^{cb}_{mj}
  void accumulate(const C* sig, const C* X, double w, C* acc) const {
    const int I = lm_.I();
    if (I == 2) {
      accumulate2(sig, X, w, acc);
      return;
    }
    const int D = 2 * I;
    for (int i = 0; i < I; ++i)
      for (int a = 0; a < 2; ++a) {
        const C* srow = sig + static_cast<std::size_t>(i * 2 + a) * D;
        for (int m = 0; m < I; ++m)
          for (int c = 0; c < 2; ++c) {
            const C s = w * srow[m * 2 + c];
            if (s == C(0)) continue;
            const C* xrow = X + lm_.comp(m, 0, c, 0);
            C* arow = acc + lm_.comp(i, 0, a, 0);
            // (j,b) offsets within a fixed (site, field) row: j strides by 4.
            for (int j = 0; j < I; ++j)
              for (int b = 0; b < 2; ++b) arow[j * 4 + b] += s * xrow[j * 4 + b];
          }
      }
  }

  // Self-energy row at (t_r, t_z): evaluate the contraction-table monomials
  // on the > and < branch kernels, then store the raised matrices
  // SigF/SigR^{a}{}_{c,im} and the mean-field force row Yrho.
  void build_sigma_row(long r, long z) {
    const int I = lm_.I(), D = 2 * I;
    C* sf = sigF_.data() + static_cast<std::size_t>(z) * D * D;
    C* sr = sigR_.data() + static_cast<std::size_t>(z) * D * D;
    C* yr = yrho_.data() + static_cast<std::size_t>(z) * I;
    const C* Fb = kern_.F.block(r, z);
    const C* Rb = kern_.rho.block(r, z);
    const C half_i(0.0, 0.5);
    for (int i = 0; i < I; ++i) {
      C phix[2] = {phi_hist_[static_cast<std::size_t>(r) * I + i],
                   std::conj(phi_hist_[static_cast<std::size_t>(r) * I + i])};
      C ymem = 0.0;
      for (int m = 0; m < I; ++m) {
        C gt[2][2], lt[2][2];
        for (int s = 0; s < 2; ++s)
          for (int t = 0; t < 2; ++t) {
            C f = Fb[lm_.comp(i, m, s, t)];
            C rho = Rb[lm_.comp(i, m, s, t)];
            gt[s][t] = f - half_i * rho;
            lt[s][t] = f + half_i * rho;
          }
        C phiy[2] = {phi_hist_[static_cast<std::size_t>(z) * I + m],
                     std::conj(phi_hist_[static_cast<std::size_t>(z) * I + m])};
        C sg[2][2] = {{0, 0}, {0, 0}}, sl[2][2] = {{0, 0}, {0, 0}};
        for (const auto& Mn : engine_->sigma_monomials()) {
          C vg = Mn.coeff, vl = Mn.coeff;
          if (Mn.phi_x >= 0) { vg *= phix[Mn.phi_x]; vl *= phix[Mn.phi_x]; }
          if (Mn.phi_y >= 0) { vg *= phiy[Mn.phi_y]; vl *= phiy[Mn.phi_y]; }
          for (int q = 0; q < Mn.ng; ++q) {
            vg *= gt[Mn.g[q].s][Mn.g[q].t];
            vl *= lt[Mn.g[q].s][Mn.g[q].t];
          }
          sg[Mn.a][Mn.b] += vg;
          sl[Mn.a][Mn.b] += vl;
        }
        for (int a = 0; a < 2; ++a)
          for (int c = 0; c < 2; ++c) {
            // raise the first index with sigma: a_up pairs with lower 1-a.
            C SF = 0.5 * (sg[1 - a][c] + sl[1 - a][c]);
            C SR = C(0.0, 1.0) * (sg[1 - a][c] - sl[1 - a][c]);
            sf[static_cast<std::size_t>(i * 2 + a) * D + (m * 2 + c)] = SF;
            sr[static_cast<std::size_t>(i * 2 + a) * D + (m * 2 + c)] = SR;
          }
        C yg = 0.0, yl = 0.0;
        for (const auto& fm : force_terms_) {
          C vg = fm.coeff, vl = fm.coeff;
          if (fm.phi_y >= 0) { vg *= phiy[fm.phi_y]; vl *= phiy[fm.phi_y]; }
          for (int q = 0; q < fm.ng; ++q) {
            vg *= gt[fm.g[q].s][fm.g[q].t];
            vl *= lt[fm.g[q].s][fm.g[q].t];
          }
          yg += vg;
          yl += vl;
        }
        ymem += C(0.0, 1.0) * (yg - yl);  // Y_rho
      }
      yr[i] = ymem;
    }
  }

  TwoTimeKernel<C>& kern_;
  LocalModel lm_;
  const ContractionEngine* engine_;
  bool use_memory_;
  const std::vector<C>* aux_;
  int threads_;
  long row_ = 0;
  std::vector<C> Lcur_;
  std::vector<C> phi_hist_;
  std::vector<C> sigF_, sigR_, yrho_;
  std::vector<C> memF_row_, memR_row_;
  std::vector<PhiForceMonomial> force_terms_;
};

}  // namespace

TwopiScheme twopi_scheme_from_string(const std::string& s) {
  if (s == "bogoliubov") return TwopiScheme::Bogoliubov;
  if (s == "hfb") return TwopiScheme::HFB;
  if (s == "second_order") return TwopiScheme::SecondOrder;
  if (s == "large_n_nlo") return TwopiScheme::LargeNNLO;
  throw ValidationError("unknown 2PI scheme: " + s);
}

std::string to_string(TwopiScheme s) {
  switch (s) {
    case TwopiScheme::Bogoliubov: return "bogoliubov";
    case TwopiScheme::HFB: return "hfb";
    case TwopiScheme::SecondOrder: return "second_order";
    case TwopiScheme::LargeNNLO: return "large_n_nlo";
  }
  return "?";
}

struct TwopiEvolution::Impl {
  BoseHubbardParams p;
  TwopiScheme scheme;
  TimeGrid grid;
  TwopiOptions opt;
  bool local_mode = false;
  bool use_memory = false;
  long k = 0;

  LocalModel lm;
  std::unique_ptr<ContractionEngine> engine;
  Trajectory traj;
  std::vector<C> phi;

  // time-local mode state
  std::vector<C> feq;

  // two-time mode state.  Rows 0..nboot are produced once by a refined
  // trapezoid bootstrap (substep ratio kBootRatio) so the multistep marcher
  // starts from fourth-order-accurate history; advance() replays them.
  static constexpr long kBootRatio = 32;
  long nboot = 0;
  bool hist_ready = false;
  std::unique_ptr<TwoTimeKernel<C>> kernel;
  std::unique_ptr<TwopiSystem> system;
  std::unique_ptr<Multistep4Stepper> stepper;

  Impl(const BoseHubbardParams& p_, TwopiScheme scheme_, const TimeGrid& grid_,
       const TwopiOptions& opt_)
      : p(p_), scheme(scheme_), grid(grid_), opt(opt_) {
    if (p.I < 1 || p.N < 0) throw ValidationError("twopi: invalid lattice parameters");
    if (!p.eps.empty() && static_cast<int>(p.eps.size()) != p.I)
      throw ValidationError("twopi: eps must have one entry per site");
    if (p.hbar <= 0) throw ValidationError("twopi: hbar must be positive");

    engine = std::make_unique<ContractionEngine>(p.U, p.hbar, kNc,
                                                 scheme == TwopiScheme::LargeNNLO);
    lm.p = p;
    lm.T = hopping_matrix(p);
    lm.scheme = scheme;
    lm.engine = engine.get();

    use_memory = (scheme == TwopiScheme::SecondOrder ||
                  scheme == TwopiScheme::LargeNNLO) && p.U != 0.0;
    local_mode = !use_memory && !opt.force_two_time;

    phi.assign(static_cast<std::size_t>(p.I), C(0));
    if (!opt.phi0.empty()) {
      if (static_cast<int>(opt.phi0.size()) != p.I)
        throw ValidationError("twopi: phi0 must have one entry per site");
      phi = opt.phi0;
    } else {
      phi[0] = std::sqrt(static_cast<double>(p.N));
    }

    const std::size_t comps = static_cast<std::size_t>(p.I) * p.I * 4;
    if (local_mode) {
      feq.assign(comps, C(0));
      for (int i = 0; i < p.I; ++i) {
        feq[lm.comp(i, i, 0, 1)] = 0.5;
        feq[lm.comp(i, i, 1, 0)] = 0.5;
      }
    } else {
      auto kern = allocate_kernel(grid, p.I, 2, opt.budget_bytes);
      kernel = std::make_unique<TwoTimeKernel<C>>(std::move(kern));
      for (int i = 0; i < p.I; ++i) {
        kernel->F.set(0, 0, i, i, 0, 1, C(0.5));
        kernel->F.set(0, 0, i, i, 1, 0, C(0.5));
      }
      system = std::make_unique<TwopiSystem>(*kernel, lm, engine.get(), use_memory,
                                             &phi, opt.threads);
      VolterraOptions vo;
      vo.corrector_tol = opt.corrector_tol;
      vo.max_corrector_iters = opt.max_corrector_iters;
      vo.blowup_threshold = opt.blowup_threshold;
      vo.threads = opt.threads;
      nboot = std::min<long>(5, grid.n_steps());
      bootstrap(vo);
      if (grid.n_steps() > nboot)
        stepper = std::make_unique<Multistep4Stepper>(*kernel, *system, phi,
                                                      system->phi_history_mut(), vo);
    }

    traj.grid = grid;
    traj.provenance["solver"] = "twopi";
    traj.provenance["scheme"] = to_string(scheme);
    traj.provenance["mode"] = local_mode ? "time_local" : "two_time";
    traj.provenance["N"] = std::to_string(p.N);
    traj.provenance["I"] = std::to_string(p.I);
    traj.provenance["J"] = std::to_string(p.J);
    traj.provenance["U"] = std::to_string(p.U);
    record();
  }

  const C* eq_block(long r) const {
    return local_mode ? feq.data() : kernel->F.block(r, r);
  }

  void record() { record_row(traj, lm, grid.time(k), phi, eq_block(k)); }

  // Integrates rows 0..nboot on a grid refined by kBootRatio with the
  // implicit-trapezoid stepper, then copies every kBootRatio-th sample into
  // the coarse kernel and condensate history.  The refinement puts the
  // bootstrap's second-order error well below the marcher's fourth-order one.
  void bootstrap(const VolterraOptions& vo) {
    if (nboot == 0) return;
    TimeGrid fg(grid.t0(), grid.dt() / kBootRatio, nboot * kBootRatio);
    auto fkern = allocate_kernel(fg, p.I, 2, opt.budget_bytes);
    for (int i = 0; i < p.I; ++i) {
      fkern.F.set(0, 0, i, i, 0, 1, C(0.5));
      fkern.F.set(0, 0, i, i, 1, 0, C(0.5));
    }
    std::vector<C> fphi = phi;
    TwopiSystem fsys(fkern, lm, engine.get(), use_memory, &fphi, opt.threads);
    VolterraOptions fvo = vo;
    VolterraStepper fstep(fkern, fsys, fphi, fvo);
    for (long s = 0; s < fg.n_steps(); ++s) fstep.step(s);

    const std::size_t comps = kernel->F.components();
    const int I = p.I;
    auto& ph = system->phi_history_mut();
    const auto& fph = fsys.phi_history();
    for (long r = 0; r <= nboot; ++r) {
      for (long l = 0; l <= r; ++l) {
        const long fr = r * kBootRatio, fl = l * kBootRatio;
        std::copy(fkern.F.block(fr, fl), fkern.F.block(fr, fl) + comps,
                  kernel->F.block_mut(r, l));
        std::copy(fkern.rho.block(fr, fl), fkern.rho.block(fr, fl) + comps,
                  kernel->rho.block_mut(r, l));
        kernel->F.sync_mirror(r, l);
        kernel->rho.sync_mirror(r, l);
      }
      for (int i = 0; i < I; ++i)
        ph[static_cast<std::size_t>(r) * I + i] =
            fph[static_cast<std::size_t>(r) * kBootRatio * I + i];
    }
    // phi stays at row 0 for the initial record; advance() reloads it from
    // the stored history as the bootstrap rows are replayed.
    for (int i = 0; i < I; ++i) phi[static_cast<std::size_t>(i)] = ph[i];
  }

  // Sets phi to the stored condensate value at row r (bootstrap replay and
  // resume both land here before marching continues).
  void load_phi(long r) {
    const auto& ph = system->phi_history();
    for (int i = 0; i < p.I; ++i)
      phi[static_cast<std::size_t>(i)] = ph[static_cast<std::size_t>(r) * p.I + i];
  }

  // One implicit-trapezoid step of the memoryless equal-time system
  // (condensate plus equal-time statistical kernel).
  void local_step() {
    const std::size_t comps = feq.size();
    const std::size_t I = static_cast<std::size_t>(p.I);
    std::vector<C> L, rhs, d0f(comps), d0p(I), d1f(comps), d1p(I);
    auto derivative = [&](const std::vector<C>& ph, const std::vector<C>& fe,
                          std::vector<C>& df, std::vector<C>& dp) {
      lm.build_local_matrix(ph, fe.data(), L);
      std::vector<C> d1(comps);
      lm.apply(L, fe.data(), nullptr, d1.data());
      for (int i = 0; i < p.I; ++i)
        for (int j = 0; j < p.I; ++j)
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
              df[lm.comp(i, j, a, b)] = d1[lm.comp(i, j, a, b)] + d1[lm.comp(j, i, b, a)];
      lm.phi_rhs(ph, fe.data(), nullptr, rhs);
      const C pref(0.0, -1.0 / p.hbar);
      for (std::size_t i = 0; i < I; ++i) dp[i] = pref * rhs[i];
    };

    const double dt = grid.dt();
    std::vector<C> phi0v = phi, feq0 = feq;
    derivative(phi0v, feq0, d0f, d0p);
    std::vector<C> phi1(I), feq1(comps);
    for (std::size_t c = 0; c < comps; ++c) feq1[c] = feq0[c] + dt * d0f[c];
    for (std::size_t i = 0; i < I; ++i) phi1[i] = phi0v[i] + dt * d0p[i];

    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.max_corrector_iters; ++it) {
      derivative(phi1, feq1, d1f, d1p);
      double delta = 0.0;
      for (std::size_t c = 0; c < comps; ++c) {
        C v = feq0[c] + 0.5 * dt * (d0f[c] + d1f[c]);
        delta = std::max(delta, std::abs(v - feq1[c]));
        feq1[c] = v;
      }
      for (std::size_t i = 0; i < I; ++i) {
        C v = phi0v[i] + 0.5 * dt * (d0p[i] + d1p[i]);
        delta = std::max(delta, std::abs(v - phi1[i]));
        phi1[i] = v;
      }
      if (delta <= opt.corrector_tol) break;
      if (!std::isfinite(delta) || delta >= prev) break;
      prev = delta;
    }
    phi = phi1;
    feq = feq1;
    double m = 0.0;
    for (const C& v : feq) m = std::max(m, std::abs(v));
    for (const C& v : phi) m = std::max(m, std::abs(v));
    if (!std::isfinite(m) || m > opt.blowup_threshold)
      throw BlowupError("equal-time kernel magnitude beyond threshold", k + 1);
  }

  bool advance() {
    if (k >= grid.n_steps()) return false;
    if (local_mode) {
      local_step();
    } else if (k < nboot) {
      ++k;
      load_phi(k);
      record();
      return true;
    } else {
      if (!hist_ready) {
        stepper->init_history(k);
        hist_ready = true;
      }
      stepper->step(k);
    }
    ++k;
    record();
    return true;
  }
};

TwopiEvolution::TwopiEvolution(const BoseHubbardParams& p, TwopiScheme scheme,
                               const TimeGrid& grid, const TwopiOptions& opt)
    : impl_(std::make_unique<Impl>(p, scheme, grid, opt)) {}
TwopiEvolution::~TwopiEvolution() = default;
TwopiEvolution::TwopiEvolution(TwopiEvolution&&) noexcept = default;
TwopiEvolution& TwopiEvolution::operator=(TwopiEvolution&&) noexcept = default;

long TwopiEvolution::steps_done() const { return impl_->k; }
long TwopiEvolution::total_steps() const { return impl_->grid.n_steps(); }
bool TwopiEvolution::advance() { return impl_->advance(); }
const Trajectory& TwopiEvolution::trajectory() const { return impl_->traj; }

void TwopiEvolution::serialize(std::ostream& os) const {
  const Impl& im = *impl_;
  ckpt::write_header(os, "twopi");
  ckpt::write_string(os, to_string(im.scheme));
  ckpt::write_string(os, im.local_mode ? "time_local" : "two_time");
  ckpt::write_i64(os, im.p.N);
  ckpt::write_i64(os, im.p.I);
  ckpt::write_f64(os, im.p.J);
  ckpt::write_f64(os, im.p.U);
  ckpt::write_grid(os, im.grid);
  ckpt::write_i64(os, im.k);
  ckpt::write_c128_array(os, im.phi.data(), im.phi.size());
  if (im.local_mode) {
    ckpt::write_c128_array(os, im.feq.data(), im.feq.size());
  } else {
    // Bootstrap rows beyond k are part of the state: a resumed run replays
    // them instead of re-integrating.
    const std::size_t rows = static_cast<std::size_t>(std::max(im.k, im.nboot)) + 1;
    const std::size_t stride = im.kernel->F.row_stride();
    ckpt::write_c128_array(os, im.kernel->F.raw(), rows * stride);
    ckpt::write_c128_array(os, im.kernel->rho.raw(), rows * stride);
    const auto& ph = im.system->phi_history();
    ckpt::write_c128_array(os, ph.data(), rows * static_cast<std::size_t>(im.p.I));
  }
  ckpt::write_trajectory(os, im.traj);
}

void TwopiEvolution::deserialize(std::istream& is) {
  Impl& im = *impl_;
  if (ckpt::read_header(is) != "twopi")
    throw ValidationError("checkpoint: not a twopi checkpoint");
  if (ckpt::read_string(is) != to_string(im.scheme) ||
      ckpt::read_string(is) != (im.local_mode ? "time_local" : "two_time") ||
      ckpt::read_i64(is) != im.p.N || ckpt::read_i64(is) != im.p.I ||
      ckpt::read_f64(is) != im.p.J || ckpt::read_f64(is) != im.p.U)
    throw ValidationError("checkpoint: parameter mismatch");
  TimeGrid g = ckpt::read_grid(is);
  if (g.t0() != im.grid.t0() || g.dt() != im.grid.dt() || g.n_steps() != im.grid.n_steps())
    throw ValidationError("checkpoint: grid mismatch");
  im.k = static_cast<long>(ckpt::read_i64(is));
  ckpt::read_c128_array(is, im.phi.data(), im.phi.size());
  if (im.local_mode) {
    ckpt::read_c128_array(is, im.feq.data(), im.feq.size());
  } else {
    const std::size_t rows = static_cast<std::size_t>(std::max(im.k, im.nboot)) + 1;
    const std::size_t stride = im.kernel->F.row_stride();
    ckpt::read_c128_array(is, im.kernel->F.raw_mut(), rows * stride);
    ckpt::read_c128_array(is, im.kernel->rho.raw_mut(), rows * stride);
    auto& ph = im.system->phi_history_mut();
    ckpt::read_c128_array(is, ph.data(), rows * static_cast<std::size_t>(im.p.I));
    // Multistep derivative history is recomputed from these rows on the next
    // advance; the recomputation replays the same evaluation the uninterrupted
    // run performed, so the continuation is bit-identical.
    im.hist_ready = false;
  }
  // Restore mirror columns of rows beyond k that were written by rows <= k:
  // mirrored storage keeps them inside rows 0..k already, so nothing to redo.
  im.traj = ckpt::read_trajectory(is);
}

Trajectory evolve_twopi(const BoseHubbardParams& p, TwopiScheme scheme,
                        const TimeGrid& grid, const TwopiOptions& opt) {
  TwopiEvolution ev(p, scheme, grid, opt);
  while (ev.advance()) {
  }
  return ev.trajectory();
}

}  // namespace nqdyn
