#pragma once

#include <cstddef>

#include "nqdyn/errors.hpp"

namespace nqdyn {

// Uniform real-time grid t_k = t0 + k*dt, k = 0..n_steps.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double t0, double dt, long n_steps) : t0_(t0), dt_(dt), n_(n_steps) {
    if (!(dt > 0.0)) throw ValidationError("TimeGrid: dt must be positive");
    if (n_steps < 0) throw ValidationError("TimeGrid: n_steps must be >= 0");
  }

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  long n_steps() const { return n_; }
  long n_points() const { return n_ + 1; }
  double time(long k) const { return t0_ + static_cast<double>(k) * dt_; }

  // Reported triangular pair count, n_steps(n_steps+1)/2.
  std::size_t stored_pairs() const {
    auto p = static_cast<std::size_t>(n_);
    return p * (p + 1) / 2;
  }

 private:
  double t0_ = 0.0;
  double dt_ = 1.0;
  long n_ = 0;
};

}  // namespace nqdyn
