#pragma once
// Standard DH chain with plain 4x4 arrays; shares nothing with the library.

#include <array>
#include <cmath>

namespace oracle {

using Mat4 = std::array<std::array<double, 4>, 4>;

inline Mat4 identity() {
  Mat4 m{};
  for (int i = 0; i < 4; ++i) m[i][i] = 1.0;
  return m;
}

inline Mat4 mul(const Mat4& a, const Mat4& b) {
  Mat4 c{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Mat4 dh(double theta, double d, double a, double alpha) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  return {{{ct, -st * ca, st * sa, a * ct}, {st, ct * ca, -ct * sa, a * st}, {0.0, sa, ca, d}, {0.0, 0.0, 0.0, 1.0}}};
}

// UR10: d1 127.3, a2 -612, a3 -572.3, d4 163.941, d5 115.7, d6 92.2 (mm).
inline std::array<Mat4, 7> ur10_chain(const std::array<double, 6>& q) {
  constexpr double d[6] = {0.1273, 0.0, 0.0, 0.163941, 0.1157, 0.0922};
  constexpr double a[6] = {0.0, -0.612, -0.5723, 0.0, 0.0, 0.0};
  const double h = std::acos(0.0);
  const double alpha[6] = {h, 0.0, 0.0, h, -h, 0.0};
  std::array<Mat4, 7> out;
  out[0] = identity();
  for (int i = 0; i < 6; ++i) out[i + 1] = mul(out[i], dh(q[i], d[i], a[i], alpha[i]));
  return out;
}

inline std::array<double, 3> origin(const Mat4& m) { return {m[0][3], m[1][3], m[2][3]}; }

}  // namespace oracle
