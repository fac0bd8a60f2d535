#include "nqdyn/krylov.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "nqdyn/errors.hpp"

namespace nqdyn {

Eigen::VectorXcd lanczos_expv(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXcd& x,
                              double dt, double hbar, double tol, int m_max) {
  using VXcd = Eigen::VectorXcd;
  const double beta0 = x.norm();
  if (beta0 == 0.0) return x;

  std::vector<VXcd> V;
  std::vector<double> alpha, beta;
  V.push_back(x / beta0);

  auto small_exp = [&](int m) -> Eigen::VectorXcd {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    Eigen::VectorXcd phase(m);
    for (int i = 0; i < m; ++i)
      phase(i) = std::exp(std::complex<double>(0.0, -dt * es.eigenvalues()(i) / hbar));
    Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(m);
    e1(0) = 1.0;
    return es.eigenvectors().cast<std::complex<double>>() *
           (phase.array() * (es.eigenvectors().transpose().cast<std::complex<double>>() * e1).array())
               .matrix();
  };

  double residual = 1.0;
  Eigen::VectorXcd y_small;
  for (int j = 0; j < m_max; ++j) {
    VXcd w = H.selfadjointView<Eigen::Lower>() * V[j];
    double a = std::real(V[j].dot(w));
    alpha.push_back(a);
    w -= a * V[j];
    if (j > 0) w -= beta[j - 1] * V[j - 1];
    // full reorthogonalization for stability at these subspace sizes
    for (const auto& v : V) w -= v.dot(w) * v;
    double b = w.norm();
    int m = j + 1;
    y_small = small_exp(m);
    residual = b * std::abs(y_small(m - 1)) * std::abs(dt) / hbar;
    if (residual < tol || b < 1e-14) {
      Eigen::VectorXcd y = VXcd::Zero(x.size());
      for (int i = 0; i < m; ++i) y += y_small(i) * V[i];
      return beta0 * y;
    }
    beta.push_back(b);
    V.push_back(w / b);
  }
  throw ValidationError("lanczos_expv: no convergence, residual " + std::to_string(residual));
}

}  // namespace nqdyn
