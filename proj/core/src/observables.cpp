#include "nqdyn/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nqdyn {

CondensatePopulation condensate_population(const std::vector<std::complex<double>>& phi) {
  CondensatePopulation out;
  out.per_site.resize(phi.size());
  out.total = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    out.per_site[i] = std::norm(phi[i]);
    out.total += out.per_site[i];
  }
  return out;
}

std::vector<double> quasimomentum_intensity(const Eigen::MatrixXcd& spdm) {
  const long I = spdm.rows();
  if (spdm.cols() != I) throw ValidationError("quasimomentum_intensity: matrix not square");
  double herm = (spdm - spdm.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-9)
    throw ValidationError("quasimomentum_intensity: SPDM not Hermitian, deviation " +
                          std::to_string(herm));
  std::vector<double> nq(I, 0.0);
  const double twopi = 2.0 * M_PI;
  for (long k = 0; k < I; ++k) {
    double q = twopi * static_cast<double>(k) / static_cast<double>(I);
    std::complex<double> acc = 0.0;
    for (long i = 0; i < I; ++i)
      for (long j = 0; j < I; ++j)
        acc += std::exp(std::complex<double>(0.0, q * static_cast<double>(i - j))) * spdm(i, j);
    nq[k] = acc.real() / static_cast<double>(I);
  }
  return nq;
}

double entropy_of_nu(double nu) {
  if (nu <= 0.5) return 0.0;
  double p = nu + 0.5, m = nu - 0.5;
  double sm = (m > 0.0) ? m * std::log(m) : 0.0;  // x ln x -> 0 as x -> 0+
  return p * std::log(p) - sm;
}

double gaussian_entropy(double xx, double pp, double xp, double hbar) {
  double det = xx * pp - xp * xp;
  double bound = 0.25 * hbar * hbar;
  if (det < bound - 1e-10)
    throw ValidationError("gaussian_entropy: uncertainty bound violated, det(cov) = " +
                          std::to_string(det));
  double nu = std::sqrt(std::max(det, bound)) / hbar;
  return entropy_of_nu(nu);
}

EnvelopeFit fit_collapse_time(const std::vector<double>& t, const std::vector<double>& s) {
  if (t.size() != s.size() || t.size() < 5)
    throw ValidationError("fit_collapse_time: series too short");
  const std::size_t n = s.size();
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(n);

  std::vector<double> te, ae;  // extremum times and amplitudes of |s - mean|
  auto absdev = [&](std::size_t i) { return std::fabs(s[i] - mean); };
  if (n >= 2 && absdev(0) >= absdev(1)) {
    te.push_back(t[0]);
    ae.push_back(absdev(0));
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double a = absdev(i);
    if (a >= absdev(i - 1) && a > absdev(i + 1)) {
      te.push_back(t[i]);
      ae.push_back(a);
    }
  }
  double amax = 0.0;
  for (double a : ae) amax = std::max(amax, a);
  std::vector<double> tf, lf;
  for (std::size_t i = 0; i < te.size(); ++i)
    if (ae[i] > 1e-4 * amax) {
      tf.push_back(te[i]);
      lf.push_back(std::log(ae[i]));
    }
  EnvelopeFit fit;
  fit.n_extrema = static_cast<int>(tf.size());
  if (fit.n_extrema < 5)
    throw ValidationError("fit_collapse_time: only " + std::to_string(fit.n_extrema) +
                          " usable extrema, need 5");

  std::vector<double> t2(tf.size());
  for (std::size_t i = 0; i < tf.size(); ++i) t2[i] = tf[i] * tf[i];
  double gslope = linfit_slope(t2, lf);  // ln A = a - t^2/(2 t_coll^2)
  double eslope = linfit_slope(tf, lf);  // ln A = a - rate*t
  fit.rate = -eslope;
  if (gslope < -1e-12) {
    fit.t_coll = std::sqrt(-0.5 / gslope);
  } else {
    fit.t_coll = std::numeric_limits<double>::infinity();
  }

  // rms residual of the Gaussian log-envelope fit
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < tf.size(); ++i) {
    sx += t2[i];
    sy += lf[i];
  }
  double icep = (sy - gslope * sx) / static_cast<double>(tf.size());
  double rss = 0;
  for (std::size_t i = 0; i < tf.size(); ++i) {
    double r = lf[i] - (icep + gslope * t2[i]);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / static_cast<double>(tf.size()));
  return fit;
}

ConservationReport conservation_monitor(const Trajectory& traj) {
  ConservationReport rep;
  auto drift = [&](const std::string& name) {
    if (!traj.has(name)) return 0.0;
    const auto& c = traj.column(name);
    if (c.empty()) return 0.0;
    double x0 = c.front(), d = 0.0;
    double scale = std::max(1.0, std::fabs(x0));
    for (double v : c) d = std::max(d, std::fabs(v - x0) / scale);
    return d;
  };
  rep.number_drift = drift("N_total");
  rep.energy_drift = drift("energy");
  return rep;
}

double linfit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw ValidationError("linfit_slope: need >= 2 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("linfit_slope: degenerate abscissa");
  return sxy / sxx;
}

}  // namespace nqdyn
