#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gymlink/command_handler.hpp"
#include "gymlink/robot_state.hpp"
#include "gymlink/rpc.hpp"
#include "gymlink/sim_kernel.hpp"

namespace gymlink {

// Real-time: the loop sleeps so each tick takes one actuation cycle.
// Fast: no sleeping, and the simulation only advances while an agent command
// is being executed.
enum class ClockMode { RealTime, Fast };

std::string_view to_string(ClockMode mode);
ClockMode clock_mode_from_string(std::string_view name);

// Faults the watchdog is expected to recover from.
enum class Fault {
  Freeze,        // simulation loop stops ticking
  CorruptState,  // snapshot buffer carries NaN
  Hang,          // services stop answering
  Disconnect,    // listener and connections closed
  Crash,         // process exits
};

Fault fault_from_string(std::string_view name);

struct RobotServerOptions {
  RobotModel model = RobotModel::Mir100;
  ClockMode mode = ClockMode::Fast;
  std::optional<TimingConfig> timing;  // defaults per model
  std::optional<WorldState> scene;
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

struct ActionResult {
  bool success = false;
  double clock_start = 0.0;  // sim clock at the first emission
  double clock_end = 0.0;    // sim clock after the last repeat
};

struct Health {
  double clock = 0.0;
  std::uint64_t heartbeat = 0;  // loop iterations; stalls when the loop does
  bool initialized = false;
};

// Services: get_state, set_state, send_action, health, inject_fault.
class RobotServer {
 public:
  explicit RobotServer(RobotServerOptions options);
  ~RobotServer();

  RobotServer(const RobotServer&) = delete;
  RobotServer& operator=(const RobotServer&) = delete;

  void start();
  void stop();

  std::uint16_t port() const noexcept { return rpc_.port(); }
  Address address() const { return {options_.host == "0.0.0.0" ? "127.0.0.1" : options_.host, port()}; }
  RobotModel model() const noexcept { return options_.model; }
  const TimingConfig& timing() const noexcept { return timing_; }

  std::vector<double> get_state() const;
  void set_state(std::span<const double> desired);
  ActionResult send_action(std::span<const double> action);
  Health health() const;
  void inject_fault(Fault fault);

 private:
  void register_services();
  void loop();
  void publish_locked();
  void wait_while_hung() const;
  Command fallback_locked() const;

  RobotServerOptions options_;
  TimingConfig timing_;
  CommandHandler handler_;
  RpcServer rpc_;

  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  std::optional<WorldState> world_;
  std::uint64_t epoch_ = 0;  // bumped by set_state; interrupts running actions
  std::uint64_t offered_ = 0;
  std::uint64_t completed_ = 0;
  bool run_active_ = false;
  double run_start_ = 0.0;
  std::map<std::uint64_t, ActionResult> results_;
  std::uint64_t heartbeat_ = 0;
  bool stopping_ = false;
  bool frozen_ = false;
  bool hung_ = false;
  bool corrupt_ = false;

  mutable std::mutex snapshot_mutex_;
  std::vector<double> snapshot_;

  std::thread loop_thread_;
  std::thread fault_thread_;
  bool started_ = false;
};

}  // namespace gymlink
