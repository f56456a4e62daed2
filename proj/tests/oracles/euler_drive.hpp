#pragma once
// Forward Euler on the unicycle ODE with many substeps.

#include <cmath>

namespace oracle {

struct Pose {
  double x, y, theta;
};

inline Pose euler_drive(Pose p, double v, double w, double dt, long substeps = 1000000) {
  const double h = dt / static_cast<double>(substeps);
  for (long i = 0; i < substeps; ++i) {
    p.x += v * std::cos(p.theta) * h;
    p.y += v * std::sin(p.theta) * h;
    p.theta += w * h;
  }
  return p;
}

}  // namespace oracle
