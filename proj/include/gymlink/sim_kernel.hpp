#pragma once

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "gymlink/command_handler.hpp"
#include "gymlink/kinematics.hpp"
#include "gymlink/robot_model.hpp"

namespace gymlink {

// Wraps into (-pi, pi].
double normalize_angle(double theta);

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

struct Twist {
  double v = 0.0;  // m/s
  double w = 0.0;  // rad/s

  friend bool operator==(const Twist&, const Twist&) = default;
};

// Axis-aligned square footprint.
struct BoxObstacle {
  double center_x = 0.0;
  double center_y = 0.0;
  double edge = mir::kObstacleEdge;

  friend bool operator==(const BoxObstacle&, const BoxObstacle&) = default;
};

// Rectangle centred on the origin; x spans the long side.
struct Walls {
  double length_x = mir::kMapLengthX;
  double width_y = mir::kMapWidthY;

  double min_x() const { return -0.5 * length_x; }
  double max_x() const { return 0.5 * length_x; }
  double min_y() const { return -0.5 * width_y; }
  double max_y() const { return 0.5 * width_y; }

  friend bool operator==(const Walls&, const Walls&) = default;
};

struct ArmConfig {
  Joints joints = Joints::Zero();
  Joints joint_vels = Joints::Zero();

  friend bool operator==(const ArmConfig& a, const ArmConfig& b) {
    return a.joints == b.joints && a.joint_vels == b.joint_vels;
  }
};

struct CollisionReport {
  bool self_collision = false;
  bool ground_collision = false;
  bool base_collision = false;

  bool any() const { return self_collision || ground_collision || base_collision; }
  CollisionReport& operator|=(const CollisionReport& o) {
    self_collision |= o.self_collision;
    ground_collision |= o.ground_collision;
    base_collision |= o.base_collision;
    return *this;
  }

  friend bool operator==(const CollisionReport&, const CollisionReport&) = default;
};

using Scan = std::array<double, mir::kScanSectors>;

struct MobileScene {
  Pose2D pose;
  Twist twist;
  std::vector<BoxObstacle> obstacles;
  Pose2D target;
  Walls walls;
  Scan scan{};

  friend bool operator==(const MobileScene&, const MobileScene&) = default;
};

struct ArmScene {
  ArmConfig arm;
  Eigen::Vector3d target = Eigen::Vector3d::Zero();

  friend bool operator==(const ArmScene& a, const ArmScene& b) { return a.arm == b.arm && a.target == b.target; }
};

struct WorldState {
  std::variant<MobileScene, ArmScene> robot;
  CollisionReport collisions;  // latched until the world is replaced
  std::uint64_t ticks = 0;
  double clock = 0.0;          // ticks * dt, seconds

  RobotModel model() const { return robot.index() == 0 ? RobotModel::Mir100 : RobotModel::Ur10; }
  MobileScene& mobile() { return std::get<MobileScene>(robot); }
  const MobileScene& mobile() const { return std::get<MobileScene>(robot); }
  ArmScene& arm() { return std::get<ArmScene>(robot); }
  const ArmScene& arm() const { return std::get<ArmScene>(robot); }

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

// Exact unicycle arc over dt.
Pose2D step_diff_drive(const Pose2D& pose, double v, double w, double dt);

// 360 rays over [0, 2pi) in the robot frame, min-pooled into 16 sectors of
// 22.5 degrees starting at the robot heading and turning counter-clockwise.
Scan raycast_scan(const Pose2D& pose, const MobileScene& scene, double max_range = mir::kLaserMaxRange);

// Distance along a single ray to the first box or wall, unclipped.
double raycast(double x, double y, double angle, const MobileScene& scene);

// Strict: a footprint exactly touching a box or wall does not collide.
bool check_base_collision(const Pose2D& pose, double robot_radius, const MobileScene& scene);

// Each joint moves toward its target by at most v_max * dt.
ArmConfig step_joint_controller(const ArmConfig& cfg, const Joints& target, double dt, double v_max = ur::kMaxJointVel);

// Closest distance between segments [p0, p1] and [q0, q1].
double segment_distance(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1, const Eigen::Vector3d& q0,
                        const Eigen::Vector3d& q1);

// Capsules between consecutive frame origins; link 0 is the base column.
// Links 3..5 form the compact wrist and are not tested against each other.
CollisionReport check_arm_collision(const Joints& joints);

// Recomputes scan and collision flags of the mobile scene (no motion).
void refresh_sensors(WorldState& world);

WorldState tick(const WorldState& world, const Command& cmd, double dt);

}  // namespace gymlink
