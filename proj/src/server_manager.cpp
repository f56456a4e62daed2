#include "gymlink/server_manager.hpp"
#include "gymlink/wire_protocol.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace gymlink {

namespace {

using SteadyClock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;
constexpr double kSlack = 1e-9;

Duration seconds(double s) { return Duration(s); }

void append(StateBounds& b, std::size_t n, double lo, double hi) { b.insert(b.end(), n, {lo - kSlack, hi + kSlack}); }

// Reads one line from `fd` within `timeout`; nullopt on EOF or timeout.
std::optional<std::string> read_line(int fd, Duration timeout) {
  const auto deadline = SteadyClock::now() + std::chrono::duration_cast<SteadyClock::duration>(timeout);
  std::string line;
  char ch = 0;
  while (true) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - SteadyClock::now()).count();
    if (left <= 0) return std::nullopt;
    pollfd pfd{fd, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(left));
    if (rc < 0 && errno == EINTR) continue;
    if (rc <= 0) return std::nullopt;
    const ssize_t r = ::read(fd, &ch, 1);
    if (r <= 0) return std::nullopt;
    if (ch == '\n') return line;
    line += ch;
  }
}

}  // namespace

StateBounds default_state_bounds(RobotModel model) {
  StateBounds b;
  if (model == RobotModel::Mir100) {
    const double diag = std::hypot(mir::kMapLengthX, mir::kMapWidthY);
    append(b, 1, 0.0, diag);
    append(b, 1, -kPi, kPi);
    append(b, 1, -mir::kMaxLinearVel, mir::kMaxLinearVel);
    append(b, 1, -mir::kMaxAngularVel, mir::kMaxAngularVel);
    append(b, mir::kScanSectors, 0.0, mir::kLaserMaxRange);
    append(b, 1, -0.5 * mir::kMapLengthX, 0.5 * mir::kMapLengthX);
    append(b, 1, -0.5 * mir::kMapWidthY, 0.5 * mir::kMapWidthY);
    append(b, 1, -kPi, kPi);
    append(b, 1, 0.0, 1.0);
    append(b, 1, 0.0, kInf);
  } else {
    append(b, 1, 0.0, 1.3);
    append(b, 1, 0.0, kPi);
    append(b, 1, -kPi, kPi);
    append(b, ur::kJoints, -ur::kJointLimit, ur::kJointLimit);
    append(b, ur::kJoints, -ur::kMaxJointVel, ur::kMaxJointVel);
    append(b, 3, -1.5, 1.5);
    append(b, 2, 0.0, 1.0);
    append(b, 1, 0.0, kInf);
  }
  return b;
}

bool state_within_bounds(const StateBounds& bounds, std::span<const double> state) {
  if (state.size() != bounds.size()) return false;
  for (std::size_t i = 0; i < state.size(); ++i) {
    // NaN fails both comparisons.
    if (!(state[i] >= bounds[i].first && state[i] <= bounds[i].second)) return false;
  }
  return true;
}

std::string_view to_string(ClusterStatus status) {
  switch (status) {
    case ClusterStatus::Starting:
      return "starting";
    case ClusterStatus::Healthy:
      return "healthy";
    case ClusterStatus::Restarting:
      return "restarting";
    case ClusterStatus::Dead:
      return "dead";
  }
  return "dead";
}

ClusterStatus cluster_status_from_string(std::string_view name) {
  if (name == "starting") return ClusterStatus::Starting;
  if (name == "healthy") return ClusterStatus::Healthy;
  if (name == "restarting") return ClusterStatus::Restarting;
  if (name == "dead") return ClusterStatus::Dead;
  throw Error(Errc::InvalidArgument, "unknown cluster status '" + std::string(name) + "'");
}

std::string_view to_string(RestartReason reason) {
  switch (reason) {
    case RestartReason::None:
      return "none";
    case RestartReason::ConnectionError:
      return "connection_error";
    case RestartReason::DeadlineExceeded:
      return "deadline_exceeded";
    case RestartReason::FrozenSimulation:
      return "frozen_simulation";
    case RestartReason::OutOfBounds:
      return "out_of_bounds";
    case RestartReason::ManualRequest:
      return "manual_request";
  }
  return "none";
}

struct ServerManager::Cluster {
  ClusterSpec spec;
  std::string scene_path;

  std::mutex op_mutex;  // serializes restart and kill
  mutable std::mutex state_mutex;
  std::condition_variable wake;
  ClusterHandle handle;
  pid_t pid = -1;
  bool kill_requested = false;
  bool manual_pending = false;
  std::optional<std::uint64_t> last_heartbeat;
  int consecutive_failures = 0;
  std::thread watchdog;

  ClusterHandle snapshot() const {
    std::lock_guard lock(state_mutex);
    return handle;
  }
  void set_status(ClusterStatus s) {
    std::lock_guard lock(state_mutex);
    handle.status = s;
  }
  // Reaps the child if it already exited. Caller holds state_mutex.
  bool exited_locked() {
    if (pid <= 0) return true;
    int status = 0;
    if (::waitpid(pid, &status, WNOHANG) == pid) {
      pid = -1;
      return true;
    }
    return false;
  }
};

ServerManager::ServerManager(ManagerOptions options)
    : options_(std::move(options)),
      mir_bounds_(default_state_bounds(RobotModel::Mir100)),
      ur_bounds_(default_state_bounds(RobotModel::Ur10)) {
  if (options_.robot_server_path.empty()) throw Error(Errc::InvalidArgument, "robot server executable not set");
  if (!(options_.policy.health_period > 0.0)) throw Error(Errc::InvalidArgument, "health_period must be positive");
  register_services();
}

ServerManager::~ServerManager() { shutdown(); }

void ServerManager::shutdown() {
  rpc_.stop();
  std::vector<std::string> ids;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, c] : clusters_) ids.push_back(id);
  }
  for (const auto& id : ids) {
    try {
      kill_cluster(id);
    } catch (const Error&) {
    }
  }
}

std::shared_ptr<ServerManager::Cluster> ServerManager::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = clusters_.find(id);
  if (it == clusters_.end()) throw Error(Errc::UnknownHandle, "no cluster '" + id + "'");
  return it->second;
}

void ServerManager::start_process(Cluster& c, std::optional<std::uint16_t> port) {
  std::vector<std::string> args{options_.robot_server_path,
                                "--model",
                                std::string(to_string(c.spec.model)),
                                "--mode",
                                std::string(to_string(c.spec.mode)),
                                "--host",
                                options_.cluster_host,
                                "--port",
                                std::to_string(port.value_or(0)),
                                "--announce",
                                "--exit-with-parent"};
  if (!c.scene_path.empty()) args.insert(args.end(), {"--scene", c.scene_path});
  if (c.spec.timing) {
    args.insert(args.end(), {"--actuation-cycle", format_number(c.spec.timing->actuation_cycle), "--action-cycle",
                             format_number(c.spec.timing->action_cycle)});
  }
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(Errc::SpawnFailed, std::strerror(errno));
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw Error(Errc::SpawnFailed, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(fds[1], STDOUT_FILENO);
    const int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::execv(argv[0], argv.data());
    ::_exit(127);
  }
  ::close(fds[1]);
  {
    std::lock_guard lock(c.state_mutex);
    c.pid = pid;
    ++c.handle.spawns;
  }

  const auto started = SteadyClock::now();
  const Duration grace = seconds(options_.policy.spawn_grace);
  const std::optional<std::string> line = read_line(fds[0], grace);
  ::close(fds[0]);
  std::uint16_t bound = 0;
  if (line && line->rfind("PORT ", 0) == 0) bound = static_cast<std::uint16_t>(std::stoul(line->substr(5)));
  if (bound == 0) {
    stop_process(c);
    throw Error(Errc::SpawnFailed, "robot server did not report a port");
  }
  const Address address{options_.cluster_host == "0.0.0.0" ? "127.0.0.1" : options_.cluster_host, bound};

  // Healthy once the health service answers.
  while (true) {
    {
      std::lock_guard lock(c.state_mutex);
      if (c.exited_locked()) throw Error(Errc::SpawnFailed, "robot server exited during start-up");
    }
    try {
      call(address, "health", {}, seconds(std::min(1.0, options_.policy.call_deadline)));
      break;
    } catch (const Error&) {
      if (SteadyClock::now() - started > grace) {
        stop_process(c);
        throw Error(Errc::SpawnFailed, "no health reply within the spawn grace period");
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }
  std::lock_guard lock(c.state_mutex);
  c.handle.address = address;
  c.last_heartbeat.reset();
}

void ServerManager::stop_process(Cluster& c) {
  pid_t pid = -1;
  {
    std::lock_guard lock(c.state_mutex);
    if (c.exited_locked()) return;
    pid = c.pid;
  }
  ::kill(pid, SIGTERM);
  const auto deadline = SteadyClock::now() + std::chrono::seconds(2);
  while (SteadyClock::now() < deadline) {
    {
      std::lock_guard lock(c.state_mutex);
      if (c.exited_locked()) return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  std::lock_guard lock(c.state_mutex);
  if (c.pid > 0) {
    ::kill(c.pid, SIGKILL);
    ::waitpid(c.pid, nullptr, 0);
    c.pid = -1;
  }
}

ClusterHandle ServerManager::spawn_cluster(const ClusterSpec& spec) {
  if (spec.timing) spec.timing->validate();
  auto c = std::make_shared<Cluster>();
  c->spec = spec;
  c->handle.model = spec.model;
  c->handle.mode = spec.mode;
  c->handle.status = ClusterStatus::Starting;
  {
    std::lock_guard lock(mutex_);
    int live = 0;
    for (const auto& [id, other] : clusters_) {
      if (other->snapshot().status != ClusterStatus::Dead) ++live;
    }
    if (live >= options_.max_clusters) {
      throw Error(Errc::SpawnFailed, "capacity of " + std::to_string(options_.max_clusters) + " clusters reached");
    }
    c->handle.id = "cluster-" + std::to_string(next_id_++);
    // Reserve the slot while the process starts.
    clusters_[c->handle.id] = c;
  }

  try {
    if (spec.scene) {
      scene_from_text(*spec.scene);  // reject bad scenes before spawning
      char path[] = "/tmp/gymlink-scene-XXXXXX";
      const int fd = ::mkstemp(path);
      if (fd < 0) throw Error(Errc::SpawnFailed, "cannot create scene file");
      ::close(fd);
      std::ofstream(path) << *spec.scene;
      c->scene_path = path;
    }
    std::lock_guard op(c->op_mutex);
    start_process(*c, std::nullopt);
  } catch (...) {
    std::lock_guard lock(mutex_);
    clusters_.erase(c->handle.id);
    if (!c->scene_path.empty()) std::remove(c->scene_path.c_str());
    throw;
  }
  c->set_status(ClusterStatus::Healthy);
  if (options_.watchdog) c->watchdog = std::thread([this, c] { watchdog_loop(c); });
  return c->snapshot();
}

void ServerManager::kill_cluster(const std::string& id) {
  std::shared_ptr<Cluster> c;
  {
    std::lock_guard lock(mutex_);
    auto it = clusters_.find(id);
    if (it == clusters_.end()) throw Error(Errc::UnknownHandle, "no cluster '" + id + "'");
    c = it->second;
    clusters_.erase(it);
  }
  {
    std::lock_guard lock(c->state_mutex);
    c->kill_requested = true;
  }
  c->wake.notify_all();
  {
    std::lock_guard op(c->op_mutex);
    stop_process(*c);
    c->set_status(ClusterStatus::Dead);
  }
  if (c->watchdog.joinable()) c->watchdog.join();
  if (!c->scene_path.empty()) std::remove(c->scene_path.c_str());
}

ClusterHandle ServerManager::check_cluster(const std::string& id) const { return find(id)->snapshot(); }

void ServerManager::request_restart(const std::string& id) {
  auto c = find(id);
  std::lock_guard lock(c->state_mutex);
  if (c->handle.status == ClusterStatus::Dead) throw Error(Errc::InvalidState, "cluster '" + id + "' is dead");
  c->manual_pending = true;
}

RestartReason ServerManager::probe(Cluster& c) {
  Address address;
  {
    std::lock_guard lock(c.state_mutex);
    if (c.manual_pending) return RestartReason::ManualRequest;
    if (c.exited_locked()) return RestartReason::ConnectionError;
    address = c.handle.address;
  }
  const Duration deadline = seconds(options_.policy.call_deadline);
  try {
    RpcClient client(address, deadline);
    const Payload health = client.call("health", {}, deadline);
    const auto heartbeat = static_cast<std::uint64_t>(get_number(health, "heartbeat"));
    {
      std::lock_guard lock(c.state_mutex);
      const bool stalled = c.last_heartbeat && heartbeat <= *c.last_heartbeat;
      c.last_heartbeat = heartbeat;
      if (stalled) return RestartReason::FrozenSimulation;
    }
    if (get_bool(health, "initialized")) {
      const Payload state = client.call("get_state", {}, deadline);
      const StateBounds& bounds = c.spec.model == RobotModel::Mir100 ? mir_bounds_ : ur_bounds_;
      if (!state_within_bounds(bounds, get_array(state, "state"))) return RestartReason::OutOfBounds;
    }
  } catch (const Error& e) {
    // Refused, reset, malformed, or a remote failure of the services.
    return e.code() == Errc::DeadlineExceeded ? RestartReason::DeadlineExceeded : RestartReason::ConnectionError;
  }
  return RestartReason::None;
}

WatchdogAction ServerManager::watchdog_tick(const std::string& id) {
  auto c = find(id);
  {
    std::lock_guard lock(c->state_mutex);
    if (c->kill_requested || c->handle.status == ClusterStatus::Dead) return WatchdogAction::None;
  }
  const RestartReason reason = probe(*c);
  if (reason == RestartReason::None) {
    std::lock_guard lock(c->state_mutex);
    c->consecutive_failures = 0;
    if (c->handle.status == ClusterStatus::Restarting) c->handle.status = ClusterStatus::Healthy;
    return WatchdogAction::None;
  }

  std::lock_guard op(c->op_mutex);
  {
    std::lock_guard lock(c->state_mutex);
    if (c->kill_requested) return WatchdogAction::None;
    c->manual_pending = false;
    c->handle.last_reason = reason;
    if (++c->consecutive_failures > options_.policy.max_restarts) {
      c->handle.status = ClusterStatus::Dead;
    } else {
      c->handle.status = ClusterStatus::Restarting;
      ++c->handle.restarts;
    }
  }
  if (c->snapshot().status == ClusterStatus::Dead) {
    stop_process(*c);
    return WatchdogAction::GiveUp;
  }

  stop_process(*c);
  const std::uint16_t old_port = c->snapshot().address.port;
  try {
    try {
      start_process(*c, old_port);
    } catch (const Error&) {
      // Port taken by someone else: take any free one.
      start_process(*c, std::nullopt);
    }
  } catch (const Error&) {
    return WatchdogAction::Restart;  // still restarting; the next tick retries
  }
  std::lock_guard lock(c->state_mutex);
  if (!c->kill_requested) c->handle.status = ClusterStatus::Healthy;
  return WatchdogAction::Restart;
}

void ServerManager::watchdog_loop(std::shared_ptr<Cluster> c) {
  const auto period = std::chrono::duration_cast<SteadyClock::duration>(seconds(options_.policy.health_period));
  auto next = SteadyClock::now() + period;
  while (true) {
    {
      std::unique_lock lock(c->state_mutex);
      if (c->wake.wait_until(lock, next, [&] { return c->kill_requested; })) return;
      if (c->handle.status == ClusterStatus::Dead) return;
    }
    next += period;
    try {
      if (watchdog_tick(c->handle.id) == WatchdogAction::GiveUp) return;
    } catch (const Error&) {
      return;  // killed concurrently
    }
    if (SteadyClock::now() > next) next = SteadyClock::now() + period;
  }
}

void ServerManager::serve(std::uint16_t port, const std::string& host) { rpc_.start(port, host); }

void ServerManager::register_services() {
  rpc_.add_service("spawn", [this](const Payload& p) -> Payload {
    ClusterSpec spec;
    spec.model = robot_model_from_string(get_string(p, "model"));
    spec.mode = clock_mode_from_string(get_string(p, "mode"));
    if (p.count("scene")) spec.scene = get_string(p, "scene");
    if (p.count("actuation_cycle") && p.count("action_cycle")) {
      spec.timing = TimingConfig{get_number(p, "actuation_cycle"), get_number(p, "action_cycle")};
    }
    const ClusterHandle h = spawn_cluster(spec);
    return {{"id", h.id}, {"address", h.address.to_string()}};
  });
  rpc_.add_service("kill", [this](const Payload& p) -> Payload {
    kill_cluster(get_string(p, "id"));
    return {{"ok", true}};
  });
  rpc_.add_service("check", [this](const Payload& p) -> Payload {
    const ClusterHandle h = check_cluster(get_string(p, "id"));
    return {{"status", std::string(to_string(h.status))},
            {"address", h.address.to_string()},
            {"restarts", static_cast<double>(h.restarts)},
            {"spawns", static_cast<double>(h.spawns)},
            {"last_reason", std::string(to_string(h.last_reason))}};
  });
  rpc_.add_service("restart_cluster", [this](const Payload& p) -> Payload {
    request_restart(get_string(p, "id"));
    return {{"ok", true}};
  });
}

}  // namespace gymlink
