#pragma once

#include <numbers>
#include <string>
#include <string_view>

namespace gymlink {

enum class RobotModel { Mir100, Ur10 };

std::string_view to_string(RobotModel model);
RobotModel robot_model_from_string(std::string_view name);

// Differential-drive base (MiR100 approximation).
namespace mir {
inline constexpr double kMaxLinearVel = 0.5;   // m/s
inline constexpr double kMaxAngularVel = 1.0;  // rad/s
inline constexpr double kRobotRadius = 0.4;    // m
inline constexpr double kLaserMaxRange = 10.0; // m
inline constexpr int kLaserRays = 360;
inline constexpr int kScanSectors = 16;
inline constexpr double kMapLengthX = 8.0;     // m
inline constexpr double kMapWidthY = 6.0;      // m
inline constexpr double kObstacleEdge = 0.5;   // m
}  // namespace mir

// Six-axis arm (UR10).
namespace ur {
inline constexpr int kJoints = 6;
inline constexpr double kJointLimit = std::numbers::pi;  // rad, symmetric
inline constexpr double kMaxJointVel = 1.0;              // rad/s
inline constexpr double kCapsuleRadius = 0.06;           // m
inline constexpr double kGroundClearance = 0.02;         // m
}  // namespace ur

}  // namespace gymlink
