#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nqdyn/errors.hpp"
#include "nqdyn/time_grid.hpp"

namespace nqdyn {

// Named real time series on a common grid, plus run provenance.
struct Trajectory {
  TimeGrid grid;
  std::vector<double> t;
  std::vector<std::string> column_order;
  std::map<std::string, std::vector<double>> series;
  std::map<std::string, std::string> provenance;  // scheme tag, parameters, code version

  std::vector<double>& column(const std::string& name) {
    auto it = series.find(name);
    if (it == series.end()) {
      column_order.push_back(name);
      it = series.emplace(name, std::vector<double>{}).first;
    }
    return it->second;
  }
  const std::vector<double>& column(const std::string& name) const {
    auto it = series.find(name);
    if (it == series.end()) throw ValidationError("Trajectory: no column named " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return series.count(name) != 0; }
};

// Per-site condensate populations |phi_i|^2 and their sum.
struct CondensatePopulation {
  std::vector<double> per_site;
  double total;
};
CondensatePopulation condensate_population(const std::vector<std::complex<double>>& phi);

// n(q_k) = (1/I) sum_ij exp(i q_k (i-j)) <a_i^+ a_j>, q_k = 2 pi k / I.
// Throws on non-Hermitian input; sum over k reproduces trace(spdm).
std::vector<double> quasimomentum_intensity(const Eigen::MatrixXcd& spdm);

// Gaussian entropy of a single mode: s(nu) with nu the symplectic eigenvalue.
double entropy_of_nu(double nu);

// S = s(nu) for one mode with covariance (<x^2>, sym <xp>; sym <xp>, <p^2>).
// det(cov) must satisfy the uncertainty bound (hbar/2)^2 - 1e-10.
double gaussian_entropy(double xx, double pp, double xp, double hbar);

struct EnvelopeFit {
  double t_coll = 0.0;       // Gaussian time constant; huge sentinel if undamped
  double rate = 0.0;         // exponential damping rate
  double residual = 0.0;     // rms residual of the Gaussian log-envelope fit
  int n_extrema = 0;
};

// Fits the oscillation envelope of a series: extrema of |s - mean| are
// regressed as ln A = a - t^2/(2 t_coll^2) (Gaussian) and ln A = a - rate*t
// (exponential).  Throws ValidationError with fewer than 5 extrema.
EnvelopeFit fit_collapse_time(const std::vector<double>& t, const std::vector<double>& s);

struct ConservationReport {
  double number_drift = 0.0;  // max |N(t)-N(0)| / max(1,|N(0)|)
  double energy_drift = 0.0;
};
ConservationReport conservation_monitor(const Trajectory& traj);

// Simple least-squares slope of y against x.
double linfit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nqdyn
