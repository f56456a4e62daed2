#include "gymlink/command_handler.hpp"

#include <cmath>
#include <string>

namespace gymlink {

std::string_view to_string(RobotModel model) { return model == RobotModel::Mir100 ? "mir100" : "ur10"; }

RobotModel robot_model_from_string(std::string_view name) {
  if (name == "mir100") return RobotModel::Mir100;
  if (name == "ur10") return RobotModel::Ur10;
  throw Error(Errc::InvalidArgument, "unknown robot model '" + std::string(name) + "'");
}

void validate_command(const Command& cmd, RobotModel model) {
  const bool mobile = model == RobotModel::Mir100;
  const ControlMode expected = mobile ? ControlMode::Velocity : ControlMode::JointPosition;
  if (cmd.mode != expected) throw Error(Errc::InvalidCommand, "control mode does not match " + std::string(to_string(model)));
  const std::size_t n = mobile ? 2 : ur::kJoints;
  if (cmd.values.size() != n) {
    throw Error(Errc::InvalidCommand, "expected " + std::to_string(n) + " values, got " + std::to_string(cmd.values.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double v = cmd.values[i];
    const double limit = mobile ? (i == 0 ? mir::kMaxLinearVel : mir::kMaxAngularVel) : ur::kJointLimit;
    if (!std::isfinite(v) || std::abs(v) > limit) {
      throw Error(Errc::InvalidCommand, "value " + std::to_string(i) + " = " + std::to_string(v) + " outside limits");
    }
  }
}

Command default_command(RobotModel model, const std::vector<double>& measured_joints) {
  if (model == RobotModel::Mir100) return Command::velocity(0.0, 0.0);
  return Command::joint_position(measured_joints);
}

int TimingConfig::repeats() const { return static_cast<int>(std::lround(action_cycle / actuation_cycle)); }

void TimingConfig::validate() const {
  if (!(actuation_cycle > 0.0) || !(action_cycle > 0.0)) {
    throw Error(Errc::InvalidArgument, "cycle times must be positive");
  }
  const double ratio = action_cycle / actuation_cycle;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0) {
    throw Error(Errc::InvalidArgument, "action cycle must be a whole multiple of the actuation cycle");
  }
}

TimingConfig TimingConfig::for_model(RobotModel model) {
  if (model == RobotModel::Mir100) return {0.1, 0.1};
  return {0.008, 0.040};
}

OfferResult offer_command(const QueueState& q, const Command& cmd, RobotModel model) {
  validate_command(cmd, model);
  if (q.slot) return {q, false};
  return {QueueState{cmd, 0}, true};
}

TickResult actuation_tick(const QueueState& q, int repeats, const Command& fallback) {
  if (!q.slot) return {q, fallback, true, false};
  QueueState next = q;
  if (next.remaining_repeats == 0) next.remaining_repeats = repeats;
  const Command emitted = *next.slot;
  --next.remaining_repeats;
  const bool completed = next.remaining_repeats == 0;
  if (completed) next.slot.reset();
  return {std::move(next), emitted, false, completed};
}

CommandHandler::CommandHandler(RobotModel model, TimingConfig timing)
    : model_(model), timing_(timing), repeats_((timing.validate(), timing.repeats())) {}

bool CommandHandler::offer(const Command& cmd) {
  std::lock_guard lock(mutex_);
  OfferResult r = offer_command(state_, cmd, model_);
  state_ = std::move(r.state);
  return r.accepted;
}

TickResult CommandHandler::tick(const Command& fallback) {
  std::lock_guard lock(mutex_);
  TickResult r = actuation_tick(state_, repeats_, fallback);
  state_ = r.state;
  return r;
}

void CommandHandler::clear() {
  std::lock_guard lock(mutex_);
  state_ = {};
}

bool CommandHandler::busy() const {
  std::lock_guard lock(mutex_);
  return state_.slot.has_value();
}

}  // namespace gymlink
