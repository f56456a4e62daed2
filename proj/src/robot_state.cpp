#include "gymlink/robot_state.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gymlink/wire_protocol.hpp"

namespace gymlink {

namespace {

constexpr double kArmMaxTargetRange = 1.3;  // m

bool inside_walls(const Walls& walls, double x, double y, double margin = 0.0) {
  return x >= walls.min_x() + margin && x <= walls.max_x() - margin && y >= walls.min_y() + margin &&
         y <= walls.max_y() - margin;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::InvalidState, what);
}

void require_finite(std::span<const double> values) {
  for (double v : values) require(std::isfinite(v), "non-finite value in desired state");
}

MobileScene mobile_scene(const Pose2D& pose, const Pose2D& target, std::vector<BoxObstacle> obstacles, Walls walls) {
  MobileScene m;
  m.walls = walls;
  require(walls.length_x > 0.0 && walls.width_y > 0.0, "walls must have positive size");
  require(inside_walls(walls, pose.x, pose.y), "robot pose outside the map");
  require(inside_walls(walls, target.x, target.y), "target outside the map");
  for (const auto& box : obstacles) {
    require(box.edge > 0.0, "obstacle edge must be positive");
    require(inside_walls(walls, box.center_x, box.center_y, 0.5 * box.edge), "obstacle outside the map");
  }
  m.pose = {pose.x, pose.y, normalize_angle(pose.theta)};
  m.target = {target.x, target.y, normalize_angle(target.theta)};
  m.obstacles = std::move(obstacles);
  return m;
}

ArmScene arm_scene(const Joints& q, const Eigen::Vector3d& target) {
  for (int i = 0; i < ur::kJoints; ++i) require(std::abs(q[i]) <= ur::kJointLimit, "joint outside limits");
  require(target.z() >= 0.0 && target.norm() <= kArmMaxTargetRange, "target outside the workspace");
  ArmScene a;
  a.arm.joints = q;
  a.target = target;
  return a;
}

WorldState fresh_world(std::variant<MobileScene, ArmScene> robot) {
  WorldState w;
  w.robot = std::move(robot);
  refresh_sensors(w);
  return w;
}

}  // namespace

std::size_t state_size(RobotModel model) { return model == RobotModel::Mir100 ? mir_layout::kSize : ur_layout::kSize; }

std::size_t action_size(RobotModel model) {
  return model == RobotModel::Mir100 ? mir_layout::kActionSize : ur_layout::kActionSize;
}

Polar polar_in_robot_frame(const Pose2D& pose, double target_x, double target_y) {
  const double dx = target_x - pose.x;
  const double dy = target_y - pose.y;
  const double r = std::hypot(dx, dy);
  if (r == 0.0) return {0.0, 0.0};
  return {r, normalize_angle(std::atan2(dy, dx) - pose.theta)};
}

Eigen::Vector3d to_spherical(const Eigen::Vector3d& p) {
  const double r = p.norm();
  if (r == 0.0) return Eigen::Vector3d::Zero();
  const double rho = std::hypot(p.x(), p.y());
  const double polar = std::atan2(rho, p.z());
  const double azimuth = rho == 0.0 ? 0.0 : std::atan2(p.y(), p.x());
  return {r, polar, azimuth};
}

Eigen::Vector3d from_spherical(const Eigen::Vector3d& s) {
  const double r = s[0];
  return {r * std::sin(s[1]) * std::cos(s[2]), r * std::sin(s[1]) * std::sin(s[2]), r * std::cos(s[1])};
}

std::vector<double> make_robot_state(const WorldState& world) {
  std::vector<double> out;
  if (const auto* m = std::get_if<MobileScene>(&world.robot)) {
    out.reserve(mir_layout::kSize);
    const Polar p = polar_in_robot_frame(m->pose, m->target.x, m->target.y);
    out.push_back(p.r);
    out.push_back(p.theta);
    out.push_back(m->twist.v);
    out.push_back(m->twist.w);
    out.insert(out.end(), m->scan.begin(), m->scan.end());
    out.push_back(m->pose.x);
    out.push_back(m->pose.y);
    out.push_back(m->pose.theta);
    out.push_back(world.collisions.base_collision ? 1.0 : 0.0);
    out.push_back(world.clock);
  } else {
    const ArmScene& a = world.arm();
    out.reserve(ur_layout::kSize);
    const Eigen::Vector3d s = to_spherical(a.target);
    out.insert(out.end(), s.data(), s.data() + 3);
    out.insert(out.end(), a.arm.joints.data(), a.arm.joints.data() + ur::kJoints);
    out.insert(out.end(), a.arm.joint_vels.data(), a.arm.joint_vels.data() + ur::kJoints);
    const Eigen::Vector3d ee = forward_kinematics(a.arm.joints);
    out.insert(out.end(), ee.data(), ee.data() + 3);
    out.push_back(world.collisions.self_collision ? 1.0 : 0.0);
    out.push_back(world.collisions.ground_collision ? 1.0 : 0.0);
    out.push_back(world.clock);
  }
  return out;
}

WorldState world_from_desired(RobotModel model, std::span<const double> desired) {
  require_finite(desired);
  if (model == RobotModel::Mir100) {
    require(desired.size() >= 6 && desired.size() % 2 == 0, "mir100 desired state needs 6 + 2k values");
    std::vector<BoxObstacle> obstacles;
    for (std::size_t i = 6; i < desired.size(); i += 2) obstacles.push_back({desired[i], desired[i + 1]});
    return fresh_world(mobile_scene({desired[0], desired[1], desired[2]}, {desired[3], desired[4], desired[5]},
                                    std::move(obstacles), Walls{}));
  }
  require(desired.size() == 9, "ur10 desired state needs 9 values");
  Joints q;
  for (int i = 0; i < ur::kJoints; ++i) q[i] = desired[i];
  const Eigen::Vector3d sph(desired[6], desired[7], desired[8]);
  require(sph[0] >= 0.0 && sph[1] >= 0.0 && sph[1] <= 0.5 * std::numbers::pi, "target outside the upper half-space");
  return fresh_world(arm_scene(q, from_spherical(sph)));
}

std::vector<double> desired_from_world(const WorldState& world) {
  if (const auto* m = std::get_if<MobileScene>(&world.robot)) {
    std::vector<double> out{m->pose.x, m->pose.y, m->pose.theta, m->target.x, m->target.y, m->target.theta};
    for (const auto& b : m->obstacles) {
      out.push_back(b.center_x);
      out.push_back(b.center_y);
    }
    return out;
  }
  const ArmScene& a = world.arm();
  std::vector<double> out(a.arm.joints.data(), a.arm.joints.data() + ur::kJoints);
  const Eigen::Vector3d s = to_spherical(a.target);
  out.insert(out.end(), s.data(), s.data() + 3);
  return out;
}

Command denormalize_action(RobotModel model, std::span<const double> action) {
  if (action.size() != action_size(model)) {
    throw Error(Errc::InvalidArgument, "action needs " + std::to_string(action_size(model)) + " values");
  }
  for (double a : action) {
    if (!std::isfinite(a) || a < -1.0 || a > 1.0) throw Error(Errc::InvalidArgument, "action value outside [-1, 1]");
  }
  if (model == RobotModel::Mir100) {
    return Command::velocity(action[0] * mir::kMaxLinearVel, action[1] * mir::kMaxAngularVel);
  }
  std::vector<double> targets(action.begin(), action.end());
  for (double& t : targets) t *= ur::kJointLimit;
  return Command::joint_position(std::move(targets));
}

std::string scene_to_text(const WorldState& world) {
  Payload p;
  if (const auto* m = std::get_if<MobileScene>(&world.robot)) {
    p["model"] = std::string("mir100");
    p["robot"] = std::vector<double>{m->pose.x, m->pose.y, m->pose.theta};
    p["target"] = std::vector<double>{m->target.x, m->target.y, m->target.theta};
    p["walls"] = std::vector<double>{m->walls.length_x, m->walls.width_y};
    std::vector<double> boxes;
    for (const auto& b : m->obstacles) boxes.insert(boxes.end(), {b.center_x, b.center_y, b.edge});
    p["obstacles"] = std::move(boxes);
  } else {
    const ArmScene& a = world.arm();
    p["model"] = std::string("ur10");
    p["robot"] = std::vector<double>(a.arm.joints.data(), a.arm.joints.data() + ur::kJoints);
    p["target"] = std::vector<double>(a.target.data(), a.target.data() + 3);
  }
  return to_canonical_text(p);
}

WorldState scene_from_text(const std::string& text) {
  Payload p;
  try {
    p = payload_from_text(text);
  } catch (const Error& e) {
    throw Error(Errc::InvalidState, "scene: " + e.detail());
  }
  try {
    const RobotModel model = robot_model_from_string(get_string(p, "model"));
    const auto& robot = get_array(p, "robot");
    const auto& target = get_array(p, "target");
    if (model == RobotModel::Mir100) {
      require(robot.size() == 3 && target.size() == 3, "mir100 scene needs robot and target poses");
      Walls walls;
      if (p.count("walls")) {
        const auto& w = get_array(p, "walls");
        require(w.size() == 2, "walls needs [length_x, width_y]");
        walls = {w[0], w[1]};
      }
      std::vector<BoxObstacle> boxes;
      if (p.count("obstacles")) {
        const auto& o = get_array(p, "obstacles");
        require(o.size() % 3 == 0, "obstacles are x, y, edge triples");
        for (std::size_t i = 0; i < o.size(); i += 3) boxes.push_back({o[i], o[i + 1], o[i + 2]});
      }
      require_finite(robot);
      require_finite(target);
      return fresh_world(mobile_scene({robot[0], robot[1], robot[2]}, {target[0], target[1], target[2]},
                                      std::move(boxes), walls));
    }
    require(robot.size() == 6 && target.size() == 3, "ur10 scene needs 6 joints and a 3D target");
    require_finite(robot);
    require_finite(target);
    Joints q;
    for (int i = 0; i < ur::kJoints; ++i) q[i] = robot[i];
    return fresh_world(arm_scene(q, {target[0], target[1], target[2]}));
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidState) throw;
    throw Error(Errc::InvalidState, "scene: " + e.detail());
  }
}

WorldState load_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidArgument, "cannot read scene file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return scene_from_text(ss.str());
}

}  // namespace gymlink
