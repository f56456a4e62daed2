#pragma once

#include <mutex>
#include <optional>
#include <vector>

#include "gymlink/error.hpp"
#include "gymlink/robot_model.hpp"

namespace gymlink {

enum class ControlMode { Velocity, JointPosition };

// A velocity pair (v, w) for the base or six joint targets for the arm.
struct Command {
  ControlMode mode = ControlMode::Velocity;
  std::vector<double> values;

  static Command velocity(double v, double w) { return {ControlMode::Velocity, {v, w}}; }
  static Command joint_position(std::vector<double> targets) {
    return {ControlMode::JointPosition, std::move(targets)};
  }

  friend bool operator==(const Command&, const Command&) = default;
};

// Throws InvalidCommand when the mode does not fit the model, the value count
// is wrong, or a value is outside the model limits.
void validate_command(const Command& cmd, RobotModel model);

// Zero velocities for the base; hold the measured joint positions for the arm.
Command default_command(RobotModel model, const std::vector<double>& measured_joints = {});

// Robot-actuation cycle: time between commands delivered to the controller.
// Action cycle: time between two agent actions. The handler republishes each
// action `repeats()` times.
struct TimingConfig {
  double actuation_cycle = 0.1;
  double action_cycle = 0.1;

  int repeats() const;
  void validate() const;

  // Agent-side slack in one action cycle.
  double sleep_time(double action_generation_time) const { return action_cycle - action_generation_time; }

  static TimingConfig for_model(RobotModel model);
};

// One-slot queue. The slot keeps its command for the whole run of repeated
// emissions and is emptied by the tick that emits the last repeat.
struct QueueState {
  std::optional<Command> slot;
  int remaining_repeats = 0;

  friend bool operator==(const QueueState&, const QueueState&) = default;
};

struct OfferResult {
  QueueState state;
  bool accepted = false;
};

struct TickResult {
  QueueState state;
  Command emitted;
  bool is_default = false;
  // True when `emitted` was the final repeat of an agent command.
  bool completed = false;
};

OfferResult offer_command(const QueueState& q, const Command& cmd, RobotModel model);
TickResult actuation_tick(const QueueState& q, int repeats, const Command& fallback);

// Shares a QueueState between the RPC side (offer) and the simulation loop
// (tick).
class CommandHandler {
 public:
  CommandHandler(RobotModel model, TimingConfig timing);

  bool offer(const Command& cmd);
  TickResult tick(const Command& fallback);
  void clear();
  bool busy() const;

  RobotModel model() const noexcept { return model_; }
  const TimingConfig& timing() const noexcept { return timing_; }

 private:
  RobotModel model_;
  TimingConfig timing_;
  int repeats_;
  mutable std::mutex mutex_;
  QueueState state_;
};

}  // namespace gymlink
