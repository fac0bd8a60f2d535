#pragma once

#include <string>
#include <vector>

#include "nqdyn/errors.hpp"

namespace nqdyn {

// Laplacian eigenvalue bands on S^2 x S^1 with radii a2 (sphere), a1 (circle):
//   lambda = l(l+1)/a2^2 + n^2/a1^2 + M2sq,  degeneracy (2l+1) per signed n.
struct SpectralLevel {
  double lambda = 0.0;
  long degeneracy = 0;
  int l = 0;
  int n = 0;  // signed circle mode merged: degeneracy already counts +-n
};

struct BandSpectrum {
  std::string geometry = "S2xS1";
  double a1 = 1.0, a2 = 1.0, M2sq = 0.0, Lambda = 0.0;
  std::vector<SpectralLevel> levels;  // sorted ascending in lambda
  long total_count() const {
    long c = 0;
    for (const auto& lv : levels) c += lv.degeneracy;
    return c;
  }
};

// Complete enumeration of levels with lambda <= Lambda, sorted ascending.
// Throws ResourceError beyond 1e8 states.
BandSpectrum product_spectrum(double a1, double a2, double M2sq, double Lambda);

// Cumulative count N(Lambda') including degeneracy; Lambda' must not exceed
// the enumerated cutoff.
long eigenvalue_count(const BandSpectrum& spec, double Lambda_prime);

struct ZetaPartial {
  double value = 0.0;       // sum_n d_n (lambda_n / mu^2)^{-nu} over enumerated levels
  double tail_bound = 0.0;  // Weyl-scaling estimate of the truncated remainder
};

// Generalized zeta partial sum.  Requires nu > 3/2 (convergent regime on the
// full 3-geometry) unless allow_formal is set, in which case the tail bound
// is reported as infinity.
ZetaPartial zeta_partial(const BandSpectrum& spec, double nu, double mu,
                         bool allow_formal = false);

struct EirdOptions {
  double eta_threshold = 10.0;  // compact dimension frozen when eta > this ...
  double gap_ratio = 10.0;      // ... and (next band - lowest band) > gap_ratio * M_eff^2
};

struct EirdReport {
  int eird = 0;                       // noncompact dims + unfrozen compact dims
  std::vector<double> eta;            // Xi / L_j per compact scale
  std::vector<bool> frozen;
  double xi = 0.0;                    // correlation length 1/M_eff
};

// Compact factor of the product manifold: its length scale L_j, the number of
// dimensions it carries (1 for S^1, 2 for S^2), and the band gap between its
// lowest and first excited band (lowest nonzero kappa^2 of the factor).
struct CompactScale {
  double L = 0.0;
  int dims = 1;
  double band_gap = 0.0;
};

EirdReport eird_classify(double M_eff, const std::vector<CompactScale>& compact,
                         int noncompact_dims, const EirdOptions& opt = {});

struct OperatorSpec {
  int M = 0;      // field power count
  int N_der = 0;  // derivative count
  int D = 4;      // spacetime dimension
};

enum class OperatorClass { Relevant, Marginal, Irrelevant };

struct OperatorClassification {
  double dimension = 0.0;  // d_i = M (D-2)/2 + N_der
  OperatorClass cls = OperatorClass::Marginal;
};

OperatorClassification classify_operator(const OperatorSpec& op);

const char* operator_class_name(OperatorClass c);

}  // namespace nqdyn
