#include "gymlink/robot_server.hpp"

#include <chrono>
#include <cstdlib>
#include <limits>

namespace gymlink {

namespace {

using SteadyClock = std::chrono::steady_clock;

constexpr auto kIdlePoll = std::chrono::milliseconds(20);

}  // namespace

std::string_view to_string(ClockMode mode) { return mode == ClockMode::RealTime ? "realtime" : "fast"; }

ClockMode clock_mode_from_string(std::string_view name) {
  if (name == "realtime") return ClockMode::RealTime;
  if (name == "fast") return ClockMode::Fast;
  throw Error(Errc::InvalidArgument, "unknown clock mode '" + std::string(name) + "'");
}

Fault fault_from_string(std::string_view name) {
  if (name == "freeze") return Fault::Freeze;
  if (name == "corrupt_state") return Fault::CorruptState;
  if (name == "hang") return Fault::Hang;
  if (name == "disconnect") return Fault::Disconnect;
  if (name == "crash") return Fault::Crash;
  throw Error(Errc::InvalidArgument, "unknown fault '" + std::string(name) + "'");
}

RobotServer::RobotServer(RobotServerOptions options)
    : options_(std::move(options)),
      timing_(options_.timing.value_or(TimingConfig::for_model(options_.model))),
      handler_(options_.model, timing_) {
  if (options_.scene) {
    if (options_.scene->model() != options_.model) throw Error(Errc::ModelMismatch, "scene is for another robot model");
    world_ = *options_.scene;
    publish_locked();
  }
  register_services();
}

RobotServer::~RobotServer() { stop(); }

void RobotServer::start() {
  if (started_) return;
  rpc_.start(options_.port, options_.host);
  loop_thread_ = std::thread([this] { loop(); });
  started_ = true;
}

void RobotServer::stop() {
  {
    std::lock_guard lock(mutex_);
    if (stopping_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (fault_thread_.joinable()) fault_thread_.join();
  rpc_.stop();
  if (loop_thread_.joinable()) loop_thread_.join();
}

void RobotServer::publish_locked() {
  std::vector<double> snap = make_robot_state(*world_);
  if (corrupt_) snap[0] = std::numeric_limits<double>::quiet_NaN();
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(snap);
}

Command RobotServer::fallback_locked() const {
  if (options_.model == RobotModel::Mir100) return default_command(options_.model);
  const Joints& q = world_->arm().arm.joints;
  return default_command(options_.model, std::vector<double>(q.data(), q.data() + ur::kJoints));
}

void RobotServer::wait_while_hung() const {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [this] { return !hung_ || stopping_; });
}

void RobotServer::loop() {
  const auto dt = std::chrono::duration_cast<SteadyClock::duration>(std::chrono::duration<double>(timing_.actuation_cycle));
  const bool realtime = options_.mode == ClockMode::RealTime;
  auto phase = SteadyClock::now();  // wall time of the last tick boundary

  std::unique_lock lock(mutex_);
  while (!stopping_) {
    cv_.wait(lock, [this] { return stopping_ || !frozen_; });
    if (stopping_) break;
    ++heartbeat_;
    if (!world_) {
      cv_.wait_for(lock, kIdlePoll, [this] { return stopping_ || world_.has_value(); });
      phase = SteadyClock::now();
      continue;
    }

    const std::uint64_t epoch = epoch_;
    const TickResult r = handler_.tick(fallback_locked());
    auto woken = [&] { return stopping_ || frozen_ || handler_.busy() || epoch_ != epoch; };

    if (r.is_default) {
      if (!realtime) {
        // Fast mode never integrates idle time.
        cv_.wait_for(lock, kIdlePoll, woken);
        phase = SteadyClock::now();
        continue;
      }
      auto deadline = phase + dt;
      if (deadline < SteadyClock::now() - dt) deadline = SteadyClock::now() + dt;
      if (cv_.wait_until(lock, deadline, woken)) {
        // A command arrived mid-cycle: start its first cycle right now.
        phase = SteadyClock::now();
        continue;
      }
      phase = deadline;
      world_ = tick(*world_, r.emitted, timing_.actuation_cycle);
      publish_locked();
      continue;
    }

    if (!run_active_) {
      run_active_ = true;
      run_start_ = world_->clock;
    }
    if (realtime) {
      const auto deadline = phase + dt;
      if (cv_.wait_until(lock, deadline, [&] { return stopping_ || epoch_ != epoch; })) {
        phase = SteadyClock::now();
        continue;
      }
      phase = deadline;
    }
    world_ = tick(*world_, r.emitted, timing_.actuation_cycle);
    publish_locked();
    if (r.completed) {
      run_active_ = false;
      results_[++completed_] = {true, run_start_, world_->clock};
    }
    cv_.notify_all();
  }
}

std::vector<double> RobotServer::get_state() const {
  wait_while_hung();
  std::lock_guard lock(snapshot_mutex_);
  if (snapshot_.empty()) throw Error(Errc::NotInitialized, "no state has been set yet");
  return snapshot_;
}

void RobotServer::set_state(std::span<const double> desired) {
  WorldState next = world_from_desired(options_.model, desired);
  wait_while_hung();
  {
    std::lock_guard lock(mutex_);
    if (world_) {
      next.ticks = world_->ticks;
      next.clock = world_->clock;
    }
    world_ = std::move(next);
    ++epoch_;
    handler_.clear();
    completed_ = offered_;
    results_.clear();
    run_active_ = false;
    publish_locked();
  }
  cv_.notify_all();
}

ActionResult RobotServer::send_action(std::span<const double> action) {
  const Command cmd = denormalize_action(options_.model, action);
  wait_while_hung();
  std::unique_lock lock(mutex_);
  if (!world_) throw Error(Errc::NotInitialized, "no state has been set yet");
  if (!handler_.offer(cmd)) throw Error(Errc::RejectedCommand, "previous action is still executing");
  const std::uint64_t ticket = ++offered_;
  const std::uint64_t epoch = epoch_;
  cv_.notify_all();
  cv_.wait(lock, [&] { return stopping_ || epoch_ != epoch || completed_ >= ticket; });
  if (stopping_) throw Error(Errc::ExecutionInterrupted, "server is stopping");
  if (epoch_ != epoch) throw Error(Errc::ExecutionInterrupted, "state was reset during execution");
  auto it = results_.find(ticket);
  ActionResult out = it != results_.end() ? it->second : ActionResult{true, 0.0, world_->clock};
  if (it != results_.end()) results_.erase(it);
  return out;
}

Health RobotServer::health() const {
  wait_while_hung();
  std::lock_guard lock(mutex_);
  return {world_ ? world_->clock : 0.0, heartbeat_, world_.has_value()};
}

void RobotServer::inject_fault(Fault fault) {
  std::lock_guard lock(mutex_);
  switch (fault) {
    case Fault::Freeze:
      frozen_ = true;
      break;
    case Fault::CorruptState:
      corrupt_ = true;
      if (world_) publish_locked();
      break;
    case Fault::Hang:
      hung_ = true;
      break;
    case Fault::Disconnect:
      // Closing the listener from a handler thread would wait on itself.
      if (!fault_thread_.joinable()) fault_thread_ = std::thread([this] { rpc_.stop(); });
      break;
    case Fault::Crash:
      if (!fault_thread_.joinable()) {
        fault_thread_ = std::thread([] {
          std::this_thread::sleep_for(std::chrono::milliseconds(50));
          std::_Exit(70);
        });
      }
      break;
  }
  cv_.notify_all();
}

void RobotServer::register_services() {
  rpc_.add_service("get_state", [this](const Payload&) -> Payload {
    return {{"state", get_state()}, {"model", std::string(to_string(options_.model))}};
  });
  rpc_.add_service("set_state", [this](const Payload& p) -> Payload {
    set_state(get_array(p, "desired"));
    return {{"ok", true}};
  });
  rpc_.add_service("send_action", [this](const Payload& p) -> Payload {
    const ActionResult r = send_action(get_array(p, "action"));
    return {{"success", r.success}, {"clock_start", r.clock_start}, {"clock_end", r.clock_end}};
  });
  rpc_.add_service("health", [this](const Payload&) -> Payload {
    const Health h = health();
    return {{"ok", true},
            {"clock", h.clock},
            {"heartbeat", static_cast<double>(h.heartbeat)},
            {"initialized", h.initialized},
            {"model", std::string(to_string(options_.model))},
            {"mode", std::string(to_string(options_.mode))},
            {"actuation_cycle", timing_.actuation_cycle},
            {"action_cycle", timing_.action_cycle}};
  });
  rpc_.add_service("inject_fault", [this](const Payload& p) -> Payload {
    inject_fault(fault_from_string(get_string(p, "fault")));
    return {{"ok", true}};
  });
}

}  // namespace gymlink
