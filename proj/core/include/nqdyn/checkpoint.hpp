#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nqdyn/observables.hpp"
#include "nqdyn/time_grid.hpp"

namespace nqdyn::ckpt {

// Raw little-endian binary primitives for the checkpoint format.  Checkpoints
// store bit-exact solver state; resuming continues with the identical
// floating-point stream, so trajectories match an uninterrupted run bitwise.

void write_u64(std::ostream& os, std::uint64_t v);
std::uint64_t read_u64(std::istream& is);

void write_i64(std::ostream& os, std::int64_t v);
std::int64_t read_i64(std::istream& is);

void write_f64(std::ostream& os, double v);
double read_f64(std::istream& is);

void write_f64_array(std::ostream& os, const double* p, std::size_t n);
void read_f64_array(std::istream& is, double* p, std::size_t n);

void write_c128_array(std::ostream& os, const std::complex<double>* p, std::size_t n);
void read_c128_array(std::istream& is, std::complex<double>* p, std::size_t n);

void write_string(std::ostream& os, const std::string& s);
std::string read_string(std::istream& is);

void write_grid(std::ostream& os, const TimeGrid& g);
TimeGrid read_grid(std::istream& is);

void write_trajectory(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory(std::istream& is);

// File-level framing: magic, format version, and a job-kind tag.
void write_header(std::ostream& os, const std::string& kind);
std::string read_header(std::istream& is);  // returns the kind; throws on mismatch

}  // namespace nqdyn::ckpt
