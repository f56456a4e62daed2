#pragma once
// Mean height of the accepted target region
//   {z >= z0, rho > a, r <= R}
// by integrating horizontal annulus slices pi (R^2 - z^2 - a^2) over z.

#include <cmath>

namespace oracle {

inline double workspace_mean_z(double R = 1.15, double a = 0.25, double z0 = 0.1) {
  const double c = R * R - a * a;
  const double z1 = std::sqrt(c);
  auto vol = [&](double z) { return c * z - z * z * z / 3.0; };
  auto mom = [&](double z) { return c * z * z / 2.0 - z * z * z * z / 4.0; };
  return (mom(z1) - mom(z0)) / (vol(z1) - vol(z0));
}

}  // namespace oracle
