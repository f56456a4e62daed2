// server-manager: spawns and supervises robot-server processes.
#include <csignal>
#include <iostream>

#include <pthread.h>

#include "CLI11.hpp"
#include "gymlink/server_manager.hpp"
#include "tool_paths.hpp"

using namespace gymlink;

int main(int argc, char** argv) {
  CLI::App app{"Robot server manager"};
  std::uint16_t port = 0;
  std::string host = "127.0.0.1";
  ManagerOptions opts;
  opts.robot_server_path = sibling_executable("robot-server");
  bool no_watchdog = false;
  app.add_option("--port", port, "listen port, 0 picks a free one");
  app.add_option("--host", host, "listen address");
  app.add_option("--max-clusters", opts.max_clusters, "cluster capacity")->check(CLI::PositiveNumber);
  app.add_option("--robot-server", opts.robot_server_path, "robot-server executable");
  app.add_option("--health-period", opts.policy.health_period, "watchdog probe period in seconds");
  app.add_option("--call-deadline", opts.policy.call_deadline, "watchdog call deadline in seconds");
  app.add_option("--spawn-grace", opts.policy.spawn_grace, "start-up grace in seconds");
  app.add_option("--max-restarts", opts.policy.max_restarts, "consecutive restarts before giving up");
  app.add_flag("--no-watchdog", no_watchdog, "do not supervise clusters");
  CLI11_PARSE(app, argc, argv);
  opts.watchdog = !no_watchdog;

  std::signal(SIGPIPE, SIG_IGN);
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGINT);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  try {
    ServerManager manager(opts);
    manager.serve(port, host);
    std::cout << "server-manager listening on " << host << ':' << manager.port() << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    manager.shutdown();
  } catch (const Error& e) {
    std::cerr << "server-manager: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
