#include "nqdyn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nqdyn {

BandSpectrum product_spectrum(double a1, double a2, double M2sq, double Lambda) {
  if (!(a1 > 0.0) || !(a2 > 0.0))
    throw ValidationError("product_spectrum: radii must be positive");
  if (!(Lambda > M2sq))
    throw ValidationError("product_spectrum: cutoff must exceed the mass shift");
  BandSpectrum spec;
  spec.a1 = a1;
  spec.a2 = a2;
  spec.M2sq = M2sq;
  spec.Lambda = Lambda;

  const double kap_max = Lambda - M2sq;  // available kappa^2
  long total = 0;
  for (int l = 0;; ++l) {
    double sphere = static_cast<double>(l) * (l + 1.0) / (a2 * a2);
    if (sphere > kap_max) break;
    double room = kap_max - sphere;
    int n_max = static_cast<int>(std::floor(std::sqrt(room) * a1 + 1e-12));
    for (int n = 0; n <= n_max; ++n) {
      double lam = sphere + static_cast<double>(n) * n / (a1 * a1) + M2sq;
      if (lam > Lambda + 1e-12) continue;
      SpectralLevel lv;
      lv.l = l;
      lv.n = n;
      lv.lambda = lam;
      lv.degeneracy = static_cast<long>(2 * l + 1) * (n == 0 ? 1 : 2);
      spec.levels.push_back(lv);
      total += lv.degeneracy;
      if (total > 100000000)
        throw ResourceError("product_spectrum: more than 1e8 states below cutoff");
    }
  }
  std::sort(spec.levels.begin(), spec.levels.end(),
            [](const SpectralLevel& x, const SpectralLevel& y) {
              if (x.lambda != y.lambda) return x.lambda < y.lambda;
              if (x.l != y.l) return x.l < y.l;
              return x.n < y.n;
            });
  return spec;
}

long eigenvalue_count(const BandSpectrum& spec, double Lambda_prime) {
  if (Lambda_prime > spec.Lambda + 1e-12)
    throw ValidationError("eigenvalue_count: query above the enumerated cutoff");
  long c = 0;
  for (const auto& lv : spec.levels)
    if (lv.lambda <= Lambda_prime) c += lv.degeneracy;
  return c;
}

ZetaPartial zeta_partial(const BandSpectrum& spec, double nu, double mu, bool allow_formal) {
  if (!(mu > 0.0)) throw ValidationError("zeta_partial: mu must be positive");
  const bool convergent = nu > 1.5;
  if (!convergent && !allow_formal)
    throw ValidationError("zeta_partial: nu <= 3/2 diverges on the 3-geometry; "
                          "pass the formal-mode flag for a formal partial sum");
  ZetaPartial out;
  for (const auto& lv : spec.levels) {
    if (lv.lambda <= 0.0)
      throw ValidationError("zeta_partial: nonpositive eigenvalue in spectrum");
    out.value += static_cast<double>(lv.degeneracy) * std::pow(lv.lambda / (mu * mu), -nu);
  }
  if (convergent) {
    // Weyl tail: N(lambda) ~ V lambda^{3/2} / (6 pi^2), V = 4 pi a2^2 * 2 pi a1,
    // so rho(lambda) = V sqrt(lambda) / (4 pi^2) and
    // int_Lambda^inf rho (lambda/mu^2)^{-nu} = V mu^{2nu} Lambda^{3/2-nu} / (4 pi^2 (nu-3/2)).
    double V = 8.0 * M_PI * M_PI * spec.a2 * spec.a2 * spec.a1;
    out.tail_bound = V * std::pow(mu, 2.0 * nu) * std::pow(spec.Lambda, 1.5 - nu) /
                     (4.0 * M_PI * M_PI * (nu - 1.5));
  } else {
    out.tail_bound = std::numeric_limits<double>::infinity();
  }
  return out;
}

EirdReport eird_classify(double M_eff, const std::vector<CompactScale>& compact,
                         int noncompact_dims, const EirdOptions& opt) {
  if (M_eff < 0.0) throw ValidationError("eird_classify: M_eff must be >= 0");
  EirdReport rep;
  rep.xi = M_eff > 0.0 ? 1.0 / M_eff : std::numeric_limits<double>::infinity();
  rep.eird = noncompact_dims;
  for (const auto& c : compact) {
    if (!(c.L > 0.0)) throw ValidationError("eird_classify: compact scale must be positive");
    double eta = rep.xi / c.L;
    bool frozen = eta > opt.eta_threshold && c.band_gap > opt.gap_ratio * M_eff * M_eff;
    rep.eta.push_back(eta);
    rep.frozen.push_back(frozen);
    if (!frozen) rep.eird += c.dims;
  }
  return rep;
}

OperatorClassification classify_operator(const OperatorSpec& op) {
  if (op.M < 0 || op.N_der < 0 || op.D < 2)
    throw ValidationError("classify_operator: need M, N_der >= 0 and D >= 2");
  OperatorClassification out;
  out.dimension = op.M * (op.D - 2.0) / 2.0 + op.N_der;
  if (out.dimension < op.D)
    out.cls = OperatorClass::Relevant;
  else if (out.dimension > op.D)
    out.cls = OperatorClass::Irrelevant;
  else
    out.cls = OperatorClass::Marginal;
  return out;
}

const char* operator_class_name(OperatorClass c) {
  switch (c) {
    case OperatorClass::Relevant: return "relevant";
    case OperatorClass::Marginal: return "marginal";
    case OperatorClass::Irrelevant: return "irrelevant";
  }
  return "?";
}

}  // namespace nqdyn
