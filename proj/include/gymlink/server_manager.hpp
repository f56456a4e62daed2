#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <sys/types.h>

#include "gymlink/robot_server.hpp"
#include "gymlink/rpc.hpp"

namespace gymlink {

inline constexpr const char* kManagerAddrEnv = "GYMLINK_MANAGER_ADDR";

struct WatchdogPolicy {
  double health_period = 1.0;  // s
  double call_deadline = 1.0;  // s
  double spawn_grace = 10.0;   // s
  int max_restarts = 3;        // consecutive
};

// Inclusive [lo, hi] per RobotState field.
using StateBounds = std::vector<std::pair<double, double>>;

StateBounds default_state_bounds(RobotModel model);
// False on NaN, wrong length, or any field outside its range.
bool state_within_bounds(const StateBounds& bounds, std::span<const double> state);

enum class ClusterStatus { Starting, Healthy, Restarting, Dead };
std::string_view to_string(ClusterStatus status);
ClusterStatus cluster_status_from_string(std::string_view name);

enum class WatchdogAction { None, Restart, GiveUp };

// Why the watchdog restarted a cluster.
enum class RestartReason { None, ConnectionError, DeadlineExceeded, FrozenSimulation, OutOfBounds, ManualRequest };
std::string_view to_string(RestartReason reason);

struct ClusterSpec {
  RobotModel model = RobotModel::Mir100;
  ClockMode mode = ClockMode::Fast;
  std::optional<std::string> scene;  // scene file contents
  std::optional<TimingConfig> timing;
};

struct ClusterHandle {
  std::string id;
  Address address;
  RobotModel model = RobotModel::Mir100;
  ClockMode mode = ClockMode::Fast;
  ClusterStatus status = ClusterStatus::Starting;
  int restarts = 0;
  std::uint64_t spawns = 0;  // processes started for this cluster so far
  RestartReason last_reason = RestartReason::None;
};

struct ManagerOptions {
  std::string robot_server_path;  // executable spawned per cluster
  int max_clusters = 32;
  WatchdogPolicy policy;
  bool watchdog = true;           // run a watchdog thread per cluster
  std::string cluster_host = "127.0.0.1";
};

// Spawns one Robot Server process per cluster and keeps it alive.
// Services: spawn, kill, check, restart_cluster.
class ServerManager {
 public:
  explicit ServerManager(ManagerOptions options);
  ~ServerManager();

  ServerManager(const ServerManager&) = delete;
  ServerManager& operator=(const ServerManager&) = delete;

  ClusterHandle spawn_cluster(const ClusterSpec& spec);
  void kill_cluster(const std::string& id);
  ClusterHandle check_cluster(const std::string& id) const;
  void request_restart(const std::string& id);

  // One probe of the restart conditions; normally driven by the watchdog
  // thread every health_period.
  WatchdogAction watchdog_tick(const std::string& id);

  void serve(std::uint16_t port, const std::string& host = "127.0.0.1");
  void shutdown();
  std::uint16_t port() const noexcept { return rpc_.port(); }

  const ManagerOptions& options() const noexcept { return options_; }

 private:
  struct Cluster;

  std::shared_ptr<Cluster> find(const std::string& id) const;
  void start_process(Cluster& c, std::optional<std::uint16_t> port);
  void stop_process(Cluster& c);
  RestartReason probe(Cluster& c);
  void watchdog_loop(std::shared_ptr<Cluster> c);
  void register_services();

  ManagerOptions options_;
  StateBounds mir_bounds_;
  StateBounds ur_bounds_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Cluster>> clusters_;
  std::uint64_t next_id_ = 1;
  RpcServer rpc_;
};

}  // namespace gymlink
