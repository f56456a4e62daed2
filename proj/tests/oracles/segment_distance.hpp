#pragma once
// Closest distance between two 3-D segments by nested ternary search; the
// distance is jointly convex in the two segment parameters.

#include <algorithm>
#include <array>
#include <cmath>

namespace oracle {

using P3 = std::array<double, 3>;

inline P3 lerp(const P3& a, const P3& b, double t) {
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])};
}

inline double dist(const P3& a, const P3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

template <typename F>
double ternary_min(F f, int iterations = 200) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < iterations; ++i) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (f(m1) <= f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return std::min({f(lo), f(0.5 * (lo + hi)), f(hi), f(0.0), f(1.0)});
}

inline double segment_distance(const P3& p0, const P3& p1, const P3& q0, const P3& q1) {
  return ternary_min([&](double s) {
    const P3 p = lerp(p0, p1, s);
    return ternary_min([&](double t) { return dist(p, lerp(q0, q1, t)); }, 100);
  }, 100);
}

}  // namespace oracle
