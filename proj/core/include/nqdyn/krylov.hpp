#pragma once

#include <complex>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace nqdyn {

// y = exp(-i dt H / hbar) x via Lanczos on the real symmetric sparse H.
// Subspace is grown until the standard a-posteriori residual estimate drops
// below tol; throws if m_max is reached first.
Eigen::VectorXcd lanczos_expv(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXcd& x,
                              double dt, double hbar, double tol = 1e-10, int m_max = 80);

}  // namespace nqdyn
