#include "gymlink/env_core.hpp"

#include <cmath>
#include <numbers>

#include "gymlink/robot_state.hpp"
#include "gymlink/wire_protocol.hpp"

namespace gymlink {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSemisphereRadius = 1.2;
constexpr double kAxisExclusion = 0.25;
constexpr double kOuterExclusion = 1.15;
constexpr double kMinTargetHeight = 0.1;

// Spawning can take up to the manager's start-up grace.
constexpr Duration kSpawnDeadline{20.0};

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double distance2(double ax, double ay, double bx, double by) { return std::hypot(ax - bx, ay - by); }

std::vector<double> array_of(const Observation& o) { return o; }

}  // namespace

std::string_view to_string(Task task) { return task == Task::MirNav ? "mir_nav" : "ur_reach"; }

Task task_from_string(std::string_view name) {
  if (name == "mir_nav") return Task::MirNav;
  if (name == "ur_reach") return Task::UrReach;
  throw Error(Errc::InvalidArgument, "unknown task '" + std::string(name) + "'");
}

RobotModel model_for(Task task) { return task == Task::MirNav ? RobotModel::Mir100 : RobotModel::Ur10; }

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Running:
      return "running";
    case Outcome::Success:
      return "success";
    case Outcome::Collision:
      return "collision";
    case Outcome::Timeout:
      return "timeout";
  }
  return "running";
}

Outcome outcome_from_string(std::string_view name) {
  if (name == "running") return Outcome::Running;
  if (name == "success") return Outcome::Success;
  if (name == "collision") return Outcome::Collision;
  if (name == "timeout") return Outcome::Timeout;
  throw Error(Errc::InvalidArgument, "unknown outcome '" + std::string(name) + "'");
}

RewardParams RewardParams::for_task(Task task) {
  RewardParams p;
  p.success_radius = task == Task::MirNav ? 0.3 : 0.05;
  return p;
}

EnvConfig EnvConfig::defaults(Task task, Address address, AddressKind kind) {
  EnvConfig cfg;
  cfg.task = task;
  cfg.address = std::move(address);
  cfg.address_kind = kind;
  cfg.timing = TimingConfig::for_model(model_for(task));
  cfg.max_steps = task == Task::MirNav ? 500 : 300;
  cfg.reward = RewardParams::for_task(task);
  return cfg;
}

std::string transition_to_text(const Transition& t) {
  return to_canonical_text({{"s", array_of(t.s)},
                            {"a", t.a},
                            {"r", t.r},
                            {"s_next", array_of(t.s_next)},
                            {"done", t.done},
                            {"outcome", std::string(to_string(t.outcome))}});
}

Transition transition_from_text(const std::string& line) {
  const Payload p = payload_from_text(line);
  Transition t;
  t.s = get_array(p, "s");
  t.a = get_array(p, "a");
  t.r = get_number(p, "r");
  t.s_next = get_array(p, "s_next");
  t.done = get_bool(p, "done");
  t.outcome = outcome_from_string(get_string(p, "outcome"));
  return t;
}

double compute_reward(double prev_dist, double new_dist, Outcome outcome, const RewardParams& p) {
  double r = p.k_dist * (prev_dist - new_dist);
  if (outcome == Outcome::Success) r += p.r_success;
  if (outcome == Outcome::Collision) r += p.r_collision;
  return r;
}

Observation build_observation(std::span<const double> state, Task task, const Eigen::Vector3d& target) {
  if (state.size() != state_size(model_for(task))) {
    throw Error(Errc::LayoutMismatch, "state of " + std::to_string(state.size()) + " values does not fit " +
                                          std::string(to_string(task)));
  }
  Observation obs;
  if (task == Task::MirNav) {
    using namespace mir_layout;
    const Pose2D pose{state[kPoseX], state[kPoseY], state[kPoseTheta]};
    const Polar p = polar_in_robot_frame(pose, target.x(), target.y());
    obs.reserve(kObservationSize);
    obs.push_back(p.r);
    obs.push_back(p.theta);
    obs.push_back(state[kLinVel]);
    obs.push_back(state[kAngVel]);
    obs.insert(obs.end(), state.begin() + kScan0, state.begin() + kScan0 + mir::kScanSectors);
  } else {
    using namespace ur_layout;
    const Eigen::Vector3d s = to_spherical(target);
    obs.reserve(kObservationSize);
    obs.insert(obs.end(), s.data(), s.data() + 3);
    obs.insert(obs.end(), state.begin() + kJoint0, state.begin() + kJoint0 + 2 * ur::kJoints);
  }
  return obs;
}

MirScene sample_mir_scene(Rng& rng, int obstacles) {
  const Walls walls;
  for (int attempt = 0; attempt < kMaxResetAttempts; ++attempt) {
    const bool robot_left = uniform(rng, 0.0, 1.0) < 0.5;
    const double lo_y = walls.min_y() + kWallMargin;
    const double hi_y = walls.max_y() - kWallMargin;
    auto sample_half = [&](bool left) {
      return left ? uniform(rng, walls.min_x() + kWallMargin, 0.0) : uniform(rng, 0.0, walls.max_x() - kWallMargin);
    };
    MirScene scene;
    scene.robot = {sample_half(robot_left), uniform(rng, lo_y, hi_y), normalize_angle(uniform(rng, -kPi, kPi))};
    scene.target = {sample_half(!robot_left), uniform(rng, lo_y, hi_y), 0.0};

    const double band_lo = std::min(scene.robot.x, scene.target.x);
    const double band_hi = std::max(scene.robot.x, scene.target.x);
    bool ok = true;
    for (int i = 0; i < obstacles && ok; ++i) {
      const BoxObstacle box{uniform(rng, band_lo, band_hi), uniform(rng, lo_y, hi_y), mir::kObstacleEdge};
      ok = distance2(box.center_x, box.center_y, scene.robot.x, scene.robot.y) >= kMinClearance &&
           distance2(box.center_x, box.center_y, scene.target.x, scene.target.y) >= kMinClearance;
      for (const auto& other : scene.obstacles) {
        ok = ok && distance2(box.center_x, box.center_y, other.center_x, other.center_y) >= kMinClearance;
      }
      scene.obstacles.push_back(box);
    }
    if (ok) return scene;
  }
  throw Error(Errc::ResetFailed, "no valid mir_nav scene after " + std::to_string(kMaxResetAttempts) + " attempts");
}

bool target_in_workspace(const Eigen::Vector3d& p) {
  const double rho = std::hypot(p.x(), p.y());
  return p.norm() <= kOuterExclusion && rho > kAxisExclusion && p.z() >= kMinTargetHeight;
}

Eigen::Vector3d sample_target_semisphere(Rng& rng) {
  while (true) {
    const Eigen::Vector3d p(uniform(rng, -kSemisphereRadius, kSemisphereRadius),
                            uniform(rng, -kSemisphereRadius, kSemisphereRadius), uniform(rng, 0.0, kSemisphereRadius));
    if (p.norm() > kSemisphereRadius) continue;
    if (!target_in_workspace(p)) continue;  // singular regions
    return to_spherical(p);
  }
}

bool arm_path_is_clear(const Joints& start, const Joints& goal, double dt) {
  ArmConfig cfg;
  cfg.joints = start;
  if (check_arm_collision(cfg.joints).any()) return false;
  while (cfg.joints != goal) {
    cfg = step_joint_controller(cfg, goal, dt);
    if (check_arm_collision(cfg.joints).any()) return false;
  }
  return true;
}

UrScene sample_ur_scene(Rng& rng, const TimingConfig& timing) {
  for (int attempt = 0; attempt < kMaxResetAttempts; ++attempt) {
    UrScene scene;
    for (int i = 0; i < ur::kJoints; ++i) scene.start[i] = uniform(rng, -ur::kJointLimit, ur::kJointLimit);
    if (check_arm_collision(scene.start).any()) continue;
    scene.target = from_spherical(sample_target_semisphere(rng));
    const std::optional<Joints> solution = solve_position_ik(scene.target, scene.start);
    if (!solution) continue;
    Joints goal = *solution;
    // Of the equivalent angles inside the limits, take the one nearest the start.
    for (int i = 0; i < ur::kJoints; ++i) {
      const double base = goal[i];
      for (double alt : {base - 2.0 * kPi, base + 2.0 * kPi}) {
        if (std::abs(alt) <= ur::kJointLimit && std::abs(alt - scene.start[i]) < std::abs(goal[i] - scene.start[i])) {
          goal[i] = alt;
        }
      }
    }
    // The goal as the server will see it after normalize/denormalize.
    std::vector<double> normalized(goal.data(), goal.data() + ur::kJoints);
    for (double& v : normalized) v /= ur::kJointLimit;
    const Command cmd = denormalize_action(RobotModel::Ur10, normalized);
    for (int i = 0; i < ur::kJoints; ++i) scene.goal[i] = cmd.values[i];
    if (!arm_path_is_clear(scene.start, scene.goal, timing.actuation_cycle)) continue;
    return scene;
  }
  throw Error(Errc::ResetFailed, "no valid ur_reach scene after " + std::to_string(kMaxResetAttempts) + " attempts");
}

// ---------------------------------------------------------------------------

Environment::Environment(EnvConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed.value_or(std::random_device{}())) {
  cfg_.timing.validate();
  if (cfg_.address_kind == AddressKind::Manager) {
    Payload req{{"model", std::string(to_string(model_for(cfg_.task)))},
                {"mode", std::string(to_string(cfg_.mode))},
                {"actuation_cycle", cfg_.timing.actuation_cycle},
                {"action_cycle", cfg_.timing.action_cycle}};
    Payload reply;
    try {
      reply = call(cfg_.address, "spawn", req, kSpawnDeadline);
    } catch (const RemoteError& e) {
      throw Error(e.remote_code(), e.remote_detail());
    }
    cluster_id_ = get_string(reply, "id");
    robot_address_ = Address::parse(get_string(reply, "address"));
  } else {
    robot_address_ = cfg_.address;
  }
  try {
    connect();
  } catch (...) {
    close();
    throw;
  }
}

Environment::~Environment() { close(); }

void Environment::close() {
  client_.reset();
  if (cluster_id_) {
    try {
      call(cfg_.address, "kill", {{"id", *cluster_id_}});
    } catch (const Error&) {
      // The manager reaps its clusters when it shuts down.
    }
    cluster_id_.reset();
  }
  active_ = false;
}

void Environment::connect() {
  if (cluster_id_) {
    // The watchdog may have moved the cluster to another port.
    try {
      const Payload h = call(cfg_.address, "check", {{"id", *cluster_id_}});
      robot_address_ = Address::parse(get_string(h, "address"));
    } catch (const Error&) {
    }
  }
  client_ = std::make_unique<RpcClient>(robot_address_);
}

Payload Environment::robot_call(const std::string& service, const Payload& payload, Duration deadline) {
  try {
    if (!client_ || client_->broken()) connect();
    return client_->call(service, payload, deadline);
  } catch (const RemoteError& e) {
    throw Error(e.remote_code(), e.remote_detail());
  }
}

std::size_t Environment::observation_size() const {
  return cfg_.task == Task::MirNav ? mir_layout::kObservationSize : ur_layout::kObservationSize;
}

std::size_t Environment::action_size() const { return gymlink::action_size(model_for(cfg_.task)); }

double Environment::distance_from_state(std::span<const double> state) const {
  if (cfg_.task == Task::MirNav) {
    return distance2(state[mir_layout::kPoseX], state[mir_layout::kPoseY], info_.target.x(), info_.target.y());
  }
  const Eigen::Vector3d ee(state[ur_layout::kEeX], state[ur_layout::kEeY], state[ur_layout::kEeZ]);
  return (ee - info_.target).norm();
}

Observation Environment::reset(std::optional<std::uint64_t> seed) {
  if (seed) rng_.seed(*seed);
  active_ = false;
  info_ = {};
  std::vector<double> desired;
  if (cfg_.task == Task::MirNav) {
    const MirScene scene = sample_mir_scene(rng_, cfg_.obstacles);
    desired = {scene.robot.x, scene.robot.y, scene.robot.theta, scene.target.x, scene.target.y, scene.target.theta};
    for (const auto& b : scene.obstacles) desired.insert(desired.end(), {b.center_x, b.center_y});
    info_.target = {scene.target.x, scene.target.y, 0.0};
  } else {
    const UrScene scene = sample_ur_scene(rng_, cfg_.timing);
    desired.assign(scene.start.data(), scene.start.data() + ur::kJoints);
    const Eigen::Vector3d sph = to_spherical(scene.target);
    desired.insert(desired.end(), sph.data(), sph.data() + 3);
    // The server stores the target it rebuilds from spherical coordinates.
    info_.target = from_spherical(sph);
    info_.goal_joints = scene.goal;
  }
  try {
    robot_call("set_state", {{"desired", desired}}, kDefaultDeadline);
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidState) throw Error(Errc::ResetFailed, e.detail());
    throw;
  }
  const std::vector<double> state = get_array(robot_call("get_state", {}, kDefaultDeadline), "state");
  info_.distance = distance_from_state(state);
  active_ = true;
  return build_observation(state, cfg_.task, info_.target);
}

Transition Environment::step(std::span<const double> action) {
  if (!active_) throw Error(Errc::InvalidArgument, "step called without an active episode; call reset first");
  if (action.size() != action_size()) throw Error(Errc::InvalidArgument, "wrong action length");
  for (double a : action) {
    if (!std::isfinite(a) || a < -1.0 || a > 1.0) throw Error(Errc::InvalidArgument, "action outside [-1, 1]");
  }

  Transition t;
  t.a.assign(action.begin(), action.end());
  std::vector<double> state;
  try {
    const std::vector<double> before = get_array(robot_call("get_state", {}, kDefaultDeadline), "state");
    t.s = build_observation(before, cfg_.task, info_.target);
    robot_call("send_action", {{"action", t.a}}, Duration(cfg_.timing.action_cycle) + kDefaultDeadline);
    state = get_array(robot_call("get_state", {}, kDefaultDeadline), "state");
  } catch (const Error& e) {
    switch (e.code()) {
      case Errc::ConnectionError:
      case Errc::DeadlineExceeded:
      case Errc::ExecutionInterrupted:
      case Errc::TruncatedFrame:
      case Errc::MalformedBody:
        active_ = false;
        throw Error(Errc::EpisodeAborted, e.what());
      default:
        throw;
    }
  }

  const double prev = info_.distance;
  const double dist = distance_from_state(state);
  ++info_.step;
  bool collided = false;
  if (cfg_.task == Task::MirNav) {
    collided = state[mir_layout::kCollision] != 0.0;
  } else {
    collided = state[ur_layout::kSelfCollision] != 0.0 || state[ur_layout::kGroundCollision] != 0.0;
  }
  if (collided) {
    t.outcome = Outcome::Collision;
  } else if (dist <= cfg_.reward.success_radius) {
    t.outcome = Outcome::Success;
  } else if (info_.step >= cfg_.max_steps) {
    t.outcome = Outcome::Timeout;
  }
  t.done = t.outcome != Outcome::Running;
  t.r = compute_reward(prev, dist, t.outcome, cfg_.reward);
  t.s_next = build_observation(state, cfg_.task, info_.target);
  info_.distance = dist;
  info_.outcome = t.outcome;
  if (t.done) active_ = false;
  return t;
}

std::unique_ptr<Environment> make_env(const EnvConfig& cfg) { return std::make_unique<Environment>(cfg); }

}  // namespace gymlink
