#include "nqdyn/checkpoint.hpp"

#include <cstring>
#include <istream>
#include <ostream>

#include "nqdyn/errors.hpp"

namespace nqdyn::ckpt {

namespace {
constexpr std::uint64_t kMagic = 0x4e51444e43503031ull;  // "NQDNCP01"
constexpr std::uint64_t kVersion = 1;

void must_read(std::istream& is, char* p, std::size_t n) {
  is.read(p, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw ValidationError("checkpoint: truncated stream");
}
}  // namespace

void write_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

std::uint64_t read_u64(std::istream& is) {
  char b[8];
  must_read(is, b, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

void write_i64(std::ostream& os, std::int64_t v) {
  write_u64(os, static_cast<std::uint64_t>(v));
}
std::int64_t read_i64(std::istream& is) {
  return static_cast<std::int64_t>(read_u64(is));
}

void write_f64(std::ostream& os, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  write_u64(os, u);
}
double read_f64(std::istream& is) {
  std::uint64_t u = read_u64(is);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

void write_f64_array(std::ostream& os, const double* p, std::size_t n) {
  write_u64(os, n);
  for (std::size_t i = 0; i < n; ++i) write_f64(os, p[i]);
}
void read_f64_array(std::istream& is, double* p, std::size_t n) {
  std::uint64_t m = read_u64(is);
  if (m != n) throw ValidationError("checkpoint: array length mismatch");
  for (std::size_t i = 0; i < n; ++i) p[i] = read_f64(is);
}

void write_c128_array(std::ostream& os, const std::complex<double>* p, std::size_t n) {
  write_u64(os, n);
  for (std::size_t i = 0; i < n; ++i) {
    write_f64(os, p[i].real());
    write_f64(os, p[i].imag());
  }
}
void read_c128_array(std::istream& is, std::complex<double>* p, std::size_t n) {
  std::uint64_t m = read_u64(is);
  if (m != n) throw ValidationError("checkpoint: array length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    double re = read_f64(is);
    double im = read_f64(is);
    p[i] = {re, im};
  }
}

void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string read_string(std::istream& is) {
  std::uint64_t n = read_u64(is);
  if (n > (1ull << 30)) throw ValidationError("checkpoint: implausible string length");
  std::string s(n, '\0');
  if (n) must_read(is, s.data(), n);
  return s;
}

void write_grid(std::ostream& os, const TimeGrid& g) {
  write_f64(os, g.t0());
  write_f64(os, g.dt());
  write_i64(os, g.n_steps());
}
TimeGrid read_grid(std::istream& is) {
  double t0 = read_f64(is);
  double dt = read_f64(is);
  long n = static_cast<long>(read_i64(is));
  return TimeGrid(t0, dt, n);
}

void write_trajectory(std::ostream& os, const Trajectory& traj) {
  write_grid(os, traj.grid);
  write_f64_array(os, traj.t.data(), traj.t.size());
  write_u64(os, traj.column_order.size());
  for (const auto& name : traj.column_order) {
    write_string(os, name);
    const auto& col = traj.series.at(name);
    write_f64_array(os, col.data(), col.size());
  }
  write_u64(os, traj.provenance.size());
  for (const auto& [k, v] : traj.provenance) {
    write_string(os, k);
    write_string(os, v);
  }
}

Trajectory read_trajectory(std::istream& is) {
  Trajectory traj;
  traj.grid = read_grid(is);
  std::uint64_t nt = read_u64(is);
  {
    // write_f64_array repeats the length; re-parse by peeking it here.
    traj.t.resize(nt);
    for (std::uint64_t i = 0; i < nt; ++i) traj.t[i] = read_f64(is);
  }
  std::uint64_t nc = read_u64(is);
  for (std::uint64_t c = 0; c < nc; ++c) {
    std::string name = read_string(is);
    std::uint64_t n = read_u64(is);
    auto& col = traj.column(name);
    col.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) col[i] = read_f64(is);
  }
  std::uint64_t np = read_u64(is);
  for (std::uint64_t c = 0; c < np; ++c) {
    std::string k = read_string(is);
    traj.provenance[k] = read_string(is);
  }
  return traj;
}

void write_header(std::ostream& os, const std::string& kind) {
  write_u64(os, kMagic);
  write_u64(os, kVersion);
  write_string(os, kind);
}

std::string read_header(std::istream& is) {
  if (read_u64(is) != kMagic) throw ValidationError("checkpoint: bad magic");
  if (read_u64(is) != kVersion) throw ValidationError("checkpoint: unsupported version");
  return read_string(is);
}

}  // namespace nqdyn::ckpt
