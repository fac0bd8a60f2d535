#pragma once

namespace nqdyn {

// Fourth-order quadrature weight of grid sample z for the integral
// int_{t_lo}^{t_hi} f dz on a uniform grid (multiply the weighted sum by dt).
// zmax is the last available sample.  Rules:
//   hi - lo >= 5 : Gregory rule of order four (end weights 3/8, 7/6, 23/24)
//   shorter      : five-node polynomial rule anchored at hi (nodes hi-4..hi)
//                  or at lo (nodes lo..lo+4), falling back to the closed
//                  Newton-Cotes rule on [lo, hi] when neither window fits.
// Nodes of the short rules may lie outside [lo, hi] but never outside
// [0, zmax].  hi == lo returns 0.
inline double quad4_weight(long z, long lo, long hi, long zmax) {
  const long m = hi - lo;
  if (m <= 0 || z < 0 || z > zmax) return 0.0;
  if (m >= 5) {
    long d = z - lo;
    long e = hi - z;
    if (d < 0 || e < 0) return 0.0;
    long edge = d < e ? d : e;
    if (edge == 0) return 3.0 / 8.0;
    if (edge == 1) return 7.0 / 6.0;
    if (edge == 2) return 23.0 / 24.0;
    return 1.0;
  }
  // S[m][j] = int_0^m of the Lagrange basis through nodes 0..4.
  static constexpr double S[5][5] = {
      {0, 0, 0, 0, 0},
      {251.0 / 720.0, 646.0 / 720.0, -264.0 / 720.0, 106.0 / 720.0, -19.0 / 720.0},
      {232.0 / 720.0, 992.0 / 720.0, 192.0 / 720.0, 32.0 / 720.0, -8.0 / 720.0},
      {243.0 / 720.0, 918.0 / 720.0, 648.0 / 720.0, 378.0 / 720.0, -27.0 / 720.0},
      {224.0 / 720.0, 1024.0 / 720.0, 384.0 / 720.0, 1024.0 / 720.0, 224.0 / 720.0},
  };
  if (hi >= 4) {
    long j = hi - z;
    return (j >= 0 && j <= 4) ? S[m][j] : 0.0;
  }
  if (lo + 4 <= zmax) {
    long j = z - lo;
    return (j >= 0 && j <= 4) ? S[m][j] : 0.0;
  }
  // Closed Newton-Cotes on [lo, hi] (order m+1; only reachable on the short
  // bootstrap grid where the global error budget absorbs it).
  static constexpr double NC1[2] = {0.5, 0.5};
  static constexpr double NC2[3] = {1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0};
  static constexpr double NC3[4] = {3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0};
  long j = z - lo;
  if (j < 0 || j > m) return 0.0;
  switch (m) {
    case 1: return NC1[j];
    case 2: return NC2[j];
    case 3: return NC3[j];
    default: return 0.0;
  }
}

}  // namespace nqdyn
