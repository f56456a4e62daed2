#include "gymlink/sim_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gymlink {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Entry distance of a ray into an axis-aligned box, or +inf when it misses.
double ray_box(double ox, double oy, double dx, double dy, const BoxObstacle& box) {
  const double h = 0.5 * box.edge;
  const double lo[2] = {box.center_x - h, box.center_y - h};
  const double hi[2] = {box.center_x + h, box.center_y + h};
  const double o[2] = {ox, oy};
  const double d[2] = {dx, dy};
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 2; ++axis) {
    if (std::abs(d[axis]) < 1e-15) {
      if (o[axis] < lo[axis] || o[axis] > hi[axis]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double t0 = (lo[axis] - o[axis]) / d[axis];
    double t1 = (hi[axis] - o[axis]) / d[axis];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  if (t_exit < std::max(t_enter, 0.0)) return std::numeric_limits<double>::infinity();
  return std::max(t_enter, 0.0);
}

// Exit distance of a ray starting inside the wall rectangle.
double ray_walls(double ox, double oy, double dx, double dy, const Walls& walls) {
  double t = std::numeric_limits<double>::infinity();
  if (dx > 1e-15) t = std::min(t, (walls.max_x() - ox) / dx);
  if (dx < -1e-15) t = std::min(t, (walls.min_x() - ox) / dx);
  if (dy > 1e-15) t = std::min(t, (walls.max_y() - oy) / dy);
  if (dy < -1e-15) t = std::min(t, (walls.min_y() - oy) / dy);
  return std::max(t, 0.0);
}

}  // namespace

double normalize_angle(double theta) {
  double a = std::remainder(theta, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

Pose2D step_diff_drive(const Pose2D& pose, double v, double w, double dt) {
  if (std::abs(w) < 1e-9) {
    return {pose.x + v * dt * std::cos(pose.theta), pose.y + v * dt * std::sin(pose.theta),
            normalize_angle(pose.theta + w * dt)};
  }
  const double heading = pose.theta + w * dt;
  const double radius = v / w;
  return {pose.x + radius * (std::sin(heading) - std::sin(pose.theta)),
          pose.y - radius * (std::cos(heading) - std::cos(pose.theta)), normalize_angle(heading)};
}

double raycast(double x, double y, double angle, const MobileScene& scene) {
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  double t = ray_walls(x, y, dx, dy, scene.walls);
  for (const auto& box : scene.obstacles) t = std::min(t, ray_box(x, y, dx, dy, box));
  return t;
}

Scan raycast_scan(const Pose2D& pose, const MobileScene& scene, double max_range) {
  Scan scan;
  scan.fill(max_range);
  for (int k = 0; k < mir::kLaserRays; ++k) {
    const int sector = k * mir::kScanSectors / mir::kLaserRays;
    const double angle = pose.theta + kTwoPi * k / mir::kLaserRays;
    const double d = std::clamp(raycast(pose.x, pose.y, angle, scene), 0.0, max_range);
    scan[sector] = std::min(scan[sector], d);
  }
  return scan;
}

bool check_base_collision(const Pose2D& pose, double robot_radius, const MobileScene& scene) {
  const Walls& w = scene.walls;
  if (pose.x - w.min_x() < robot_radius || w.max_x() - pose.x < robot_radius || pose.y - w.min_y() < robot_radius ||
      w.max_y() - pose.y < robot_radius) {
    return true;
  }
  for (const auto& box : scene.obstacles) {
    const double h = 0.5 * box.edge;
    const double gx = std::max(std::abs(pose.x - box.center_x) - h, 0.0);
    const double gy = std::max(std::abs(pose.y - box.center_y) - h, 0.0);
    if (gx * gx + gy * gy < robot_radius * robot_radius) return true;
  }
  return false;
}

ArmConfig step_joint_controller(const ArmConfig& cfg, const Joints& target, double dt, double v_max) {
  const double max_step = v_max * dt;
  ArmConfig out;
  for (int i = 0; i < ur::kJoints; ++i) {
    const double delta = target[i] - cfg.joints[i];
    out.joints[i] = std::abs(delta) <= max_step ? target[i] : cfg.joints[i] + std::copysign(max_step, delta);
  }
  out.joint_vels = (out.joints - cfg.joints) / dt;
  return out;
}

double segment_distance(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1, const Eigen::Vector3d& q0,
                        const Eigen::Vector3d& q1) {
  // Closest points of two segments, clamped parametric form.
  const Eigen::Vector3d d1 = p1 - p0;
  const Eigen::Vector3d d2 = q1 - q0;
  const Eigen::Vector3d r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  constexpr double eps = 1e-15;
  double s = 0.0;
  double t = 0.0;
  if (a <= eps && e <= eps) return r.norm();
  if (a <= eps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= eps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > eps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p0 + s * d1) - (q0 + t * d2)).norm();
}

CollisionReport check_arm_collision(const Joints& joints) {
  const auto p = frame_origins(joints);
  CollisionReport report;
  for (int i = 1; i < 6; ++i) {
    if (std::min(p[i].z(), p[i + 1].z()) - ur::kCapsuleRadius < ur::kGroundClearance) {
      report.ground_collision = true;
      break;
    }
  }
  for (int i = 0; i < 6 && !report.self_collision; ++i) {
    for (int j = i + 2; j < 6; ++j) {
      if (i >= 3 && j >= 3) continue;  // wrist links
      if (segment_distance(p[i], p[i + 1], p[j], p[j + 1]) < 2.0 * ur::kCapsuleRadius) {
        report.self_collision = true;
        break;
      }
    }
  }
  return report;
}

void refresh_sensors(WorldState& world) {
  if (auto* m = std::get_if<MobileScene>(&world.robot)) {
    m->scan = raycast_scan(m->pose, *m);
    world.collisions.base_collision |= check_base_collision(m->pose, mir::kRobotRadius, *m);
  } else {
    world.collisions |= check_arm_collision(world.arm().arm.joints);
  }
}

WorldState tick(const WorldState& world, const Command& cmd, double dt) {
  WorldState next = world;
  if (auto* m = std::get_if<MobileScene>(&next.robot)) {
    if (cmd.mode != ControlMode::Velocity || cmd.values.size() != 2) {
      throw Error(Errc::ModelMismatch, "mir100 world needs a velocity command");
    }
    if (next.collisions.base_collision) {
      m->twist = {};
    } else {
      m->twist = {cmd.values[0], cmd.values[1]};
      m->pose = step_diff_drive(m->pose, m->twist.v, m->twist.w, dt);
    }
  } else {
    if (cmd.mode != ControlMode::JointPosition || cmd.values.size() != ur::kJoints) {
      throw Error(Errc::ModelMismatch, "ur10 world needs a joint position command");
    }
    Joints target;
    for (int i = 0; i < ur::kJoints; ++i) target[i] = std::clamp(cmd.values[i], -ur::kJointLimit, ur::kJointLimit);
    ArmScene& a = next.arm();
    a.arm = step_joint_controller(a.arm, target, dt);
  }
  ++next.ticks;
  next.clock = static_cast<double>(next.ticks) * dt;
  refresh_sensors(next);
  return next;
}

}  // namespace gymlink
