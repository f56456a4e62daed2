#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gymlink/command_handler.hpp"
#include "gymlink/sim_kernel.hpp"

namespace gymlink {

// Flat snapshot layouts served by get_state. The leading 20 (base) / 15 (arm)
// values are the agent observation; the rest is ground truth for rewards and
// termination.
namespace mir_layout {
inline constexpr std::size_t kTargetR = 0;
inline constexpr std::size_t kTargetTheta = 1;
inline constexpr std::size_t kLinVel = 2;
inline constexpr std::size_t kAngVel = 3;
inline constexpr std::size_t kScan0 = 4;
inline constexpr std::size_t kPoseX = 20;
inline constexpr std::size_t kPoseY = 21;
inline constexpr std::size_t kPoseTheta = 22;
inline constexpr std::size_t kCollision = 23;
inline constexpr std::size_t kClock = 24;
inline constexpr std::size_t kSize = 25;
inline constexpr std::size_t kObservationSize = 20;
inline constexpr std::size_t kActionSize = 2;
}  // namespace mir_layout

namespace ur_layout {
inline constexpr std::size_t kTargetR = 0;
inline constexpr std::size_t kTargetPolar = 1;
inline constexpr std::size_t kTargetAzimuth = 2;
inline constexpr std::size_t kJoint0 = 3;
inline constexpr std::size_t kJointVel0 = 9;
inline constexpr std::size_t kEeX = 15;
inline constexpr std::size_t kEeY = 16;
inline constexpr std::size_t kEeZ = 17;
inline constexpr std::size_t kSelfCollision = 18;
inline constexpr std::size_t kGroundCollision = 19;
inline constexpr std::size_t kClock = 20;
inline constexpr std::size_t kSize = 21;
inline constexpr std::size_t kObservationSize = 15;
inline constexpr std::size_t kActionSize = 6;
}  // namespace ur_layout

std::size_t state_size(RobotModel model);
std::size_t action_size(RobotModel model);

struct Polar {
  double r = 0.0;
  double theta = 0.0;
};

// Target (x, y) seen from `pose`: range and bearing relative to the heading.
Polar polar_in_robot_frame(const Pose2D& pose, double target_x, double target_y);

// (r, polar angle from +z, azimuth from +x). Azimuth is 0 on the z axis.
Eigen::Vector3d to_spherical(const Eigen::Vector3d& p);
Eigen::Vector3d from_spherical(const Eigen::Vector3d& s);

std::vector<double> make_robot_state(const WorldState& world);

// Desired-state arrays accepted by set_state:
//   mir100: [robot x, y, theta, target x, y, theta, obstacle x, y, ...]
//   ur10:   [q0..q5, target r, polar, azimuth]
// Throws InvalidState when anything lies outside the map or workspace.
WorldState world_from_desired(RobotModel model, std::span<const double> desired);
std::vector<double> desired_from_world(const WorldState& world);

// Normalized action in [-1, 1]^n to a controller command:
// v = 0.5 a0 m/s, w = 1.0 a1 rad/s; joint target i = pi a_i.
Command denormalize_action(RobotModel model, std::span<const double> action);

// Scene files use the canonical text form:
//   {"model":"mir100","obstacles":[x,y,edge,...],"robot":[x,y,theta],"target":[x,y,theta],"walls":[8.0,6.0]}
//   {"model":"ur10","robot":[q0..q5],"target":[x,y,z]}
std::string scene_to_text(const WorldState& world);
WorldState scene_from_text(const std::string& text);
WorldState load_scene_file(const std::string& path);

}  // namespace gymlink
