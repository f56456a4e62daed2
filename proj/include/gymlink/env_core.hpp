#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gymlink/command_handler.hpp"
#include "gymlink/kinematics.hpp"
#include "gymlink/robot_server.hpp"
#include "gymlink/rpc.hpp"
#include "gymlink/sim_kernel.hpp"

namespace gymlink {

enum class Task { MirNav, UrReach };
std::string_view to_string(Task task);
Task task_from_string(std::string_view name);
RobotModel model_for(Task task);

enum class AddressKind { Manager, Direct };

enum class Outcome { Running, Success, Collision, Timeout };
std::string_view to_string(Outcome outcome);
Outcome outcome_from_string(std::string_view name);

struct RewardParams {
  double k_dist = 10.0;        // reward per meter of progress
  double r_success = 100.0;
  double r_collision = -100.0;
  double success_radius = 0.3; // m

  static RewardParams for_task(Task task);
};

struct EnvConfig {
  Task task = Task::MirNav;
  Address address;
  AddressKind address_kind = AddressKind::Manager;
  TimingConfig timing;
  ClockMode mode = ClockMode::Fast;  // used when the manager spawns the cluster
  int max_steps = 500;
  std::optional<std::uint64_t> seed;
  RewardParams reward;
  int obstacles = 3;                 // mir_nav only

  // Task defaults: 100 ms / 100 ms and 500 steps for mir_nav; 8 ms / 40 ms
  // and 300 steps for ur_reach.
  static EnvConfig defaults(Task task, Address address, AddressKind kind);
};

using Observation = std::vector<double>;

struct Transition {
  Observation s;
  std::vector<double> a;
  double r = 0.0;
  Observation s_next;
  bool done = false;
  Outcome outcome = Outcome::Running;

  friend bool operator==(const Transition&, const Transition&) = default;
};

// One canonical-text line per transition.
std::string transition_to_text(const Transition& t);
Transition transition_from_text(const std::string& line);

double compute_reward(double prev_dist, double new_dist, Outcome outcome, const RewardParams& p);

// Agent observation from a RobotState snapshot. Target polar/spherical
// coordinates are recomputed from the pose fields and `target`
// (x, y for mir_nav; base-frame point for ur_reach).
Observation build_observation(std::span<const double> state, Task task, const Eigen::Vector3d& target);

using Rng = std::mt19937_64;

struct MirScene {
  Pose2D robot;
  Pose2D target;
  std::vector<BoxObstacle> obstacles;
};

struct UrScene {
  Joints start = Joints::Zero();
  Joints goal = Joints::Zero();  // joint configuration that reaches `target`
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
};

inline constexpr int kMaxResetAttempts = 100;
inline constexpr double kWallMargin = 0.5;
inline constexpr double kMinClearance = 0.8;

// Robot in one half of the map, target in the other, obstacles in the band
// between them; all pairwise centre distances at least kMinClearance.
MirScene sample_mir_scene(Rng& rng, int obstacles);

// Uniform over the upper half-ball of radius 1.2 m, minus the near-axis
// cylinder (rho <= 0.25), the outer shell (r > 1.15) and z < 0.1.
// Returns (r, polar, azimuth).
Eigen::Vector3d sample_target_semisphere(Rng& rng);
bool target_in_workspace(const Eigen::Vector3d& p);

// Collision-free start, a reachable sampled target, and a goal configuration
// whose rate-limited joint path from the start stays collision-free.
UrScene sample_ur_scene(Rng& rng, const TimingConfig& timing);
bool arm_path_is_clear(const Joints& start, const Joints& goal, double dt);

struct EpisodeInfo {
  int step = 0;
  double distance = 0.0;
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
  std::optional<Joints> goal_joints;  // ur_reach only
  Outcome outcome = Outcome::Running;
};

// Gym-style environment over a Robot Server. Single caller per instance.
class Environment {
 public:
  explicit Environment(EnvConfig cfg);
  ~Environment();

  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;

  Observation reset(std::optional<std::uint64_t> seed = std::nullopt);
  Transition step(std::span<const double> action);
  void close();

  const EpisodeInfo& info() const noexcept { return info_; }
  const EnvConfig& config() const noexcept { return cfg_; }
  std::size_t observation_size() const;
  std::size_t action_size() const;
  Address robot_address() const { return robot_address_; }
  const std::optional<std::string>& cluster_id() const noexcept { return cluster_id_; }

 private:
  Payload robot_call(const std::string& service, const Payload& payload, Duration deadline);
  void connect();
  double distance_from_state(std::span<const double> state) const;

  EnvConfig cfg_;
  Address robot_address_;
  std::optional<std::string> cluster_id_;
  std::unique_ptr<RpcClient> client_;
  Rng rng_;
  EpisodeInfo info_;
  bool active_ = false;
};

std::unique_ptr<Environment> make_env(const EnvConfig& cfg);

}  // namespace gymlink
