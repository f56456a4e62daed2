#pragma once
// Ray marching against an occupancy predicate, refined by bisection, with
// many rays per sector.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

struct Box {
  double cx, cy, edge;
};

struct Room {
  double half_x, half_y;  // walls at +-half
  std::vector<Box> boxes;

  bool occupied(double x, double y) const {
    if (std::abs(x) >= half_x || std::abs(y) >= half_y) return true;
    for (const auto& b : boxes) {
      if (std::abs(x - b.cx) <= 0.5 * b.edge && std::abs(y - b.cy) <= 0.5 * b.edge) return true;
    }
    return false;
  }
};

inline double march(const Room& room, double x, double y, double angle, double max_range, double step = 1e-3) {
  const double dx = std::cos(angle), dy = std::sin(angle);
  double lo = 0.0;
  for (double t = step; t <= max_range + step; t += step) {
    if (room.occupied(x + t * dx, y + t * dy)) {
      double hi = t;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (room.occupied(x + mid * dx, y + mid * dy) ? hi : lo) = mid;
      }
      return std::min(hi, max_range);
    }
    lo = t;
  }
  return max_range;
}

// Minimum over the angular span covered by the rays of sector s (rays at
// whole degrees), sampled every `resolution` degrees.
inline std::vector<double> sector_minima(const Room& room, double x, double y, double heading, double max_range,
                                         double resolution = 0.05) {
  const double deg = std::acos(-1.0) / 180.0;
  std::vector<double> out(16, max_range);
  for (int s = 0; s < 16; ++s) {
    const double first = std::ceil(22.5 * s);
    const double last = std::ceil(22.5 * (s + 1)) - 1.0;
    for (double a = first; a <= last + 1e-9; a += resolution) {
      out[s] = std::min(out[s], march(room, x, y, heading + a * deg, max_range));
    }
  }
  return out;
}

}  // namespace oracle
