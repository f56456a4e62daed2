// robot-server: one simulated robot behind the RPC services.
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <thread>

#include <pthread.h>
#include <unistd.h>

#include "CLI11.hpp"
#include "gymlink/robot_server.hpp"

using namespace gymlink;

int main(int argc, char** argv) {
  CLI::App app{"Simulated robot server"};
  std::string model = "mir100";
  std::string mode = "fast";
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string scene;
  std::optional<double> actuation_cycle;
  std::optional<double> action_cycle;
  bool announce = false;
  bool exit_with_parent = false;
  app.add_option("--model", model, "mir100 or ur10")->check(CLI::IsMember({"mir100", "ur10"}));
  app.add_option("--mode", mode, "realtime or fast")->check(CLI::IsMember({"realtime", "fast"}));
  app.add_option("--host", host, "listen address");
  app.add_option("--port", port, "listen port, 0 picks a free one");
  app.add_option("--scene", scene, "initial scene file")->check(CLI::ExistingFile);
  app.add_option("--actuation-cycle", actuation_cycle, "controller period in seconds");
  app.add_option("--action-cycle", action_cycle, "agent period in seconds");
  app.add_flag("--announce", announce, "print 'PORT n' once listening");
  app.add_flag("--exit-with-parent", exit_with_parent, "terminate when the parent process dies");
  CLI11_PARSE(app, argc, argv);

  std::signal(SIGPIPE, SIG_IGN);

  // Signals are taken synchronously by the main thread only.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGINT);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  // PR_SET_PDEATHSIG follows the forking thread, not the parent process, so
  // watch for reparenting instead.
  if (exit_with_parent) {
    const pid_t parent = ::getppid();
    std::thread([parent] {
      while (::getppid() == parent) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      ::kill(::getpid(), SIGTERM);
    }).detach();
  }

  try {
    RobotServerOptions opts;
    opts.model = robot_model_from_string(model);
    opts.mode = clock_mode_from_string(mode);
    opts.host = host;
    opts.port = port;
    if (actuation_cycle || action_cycle) {
      TimingConfig t = TimingConfig::for_model(opts.model);
      if (actuation_cycle) t.actuation_cycle = *actuation_cycle;
      if (action_cycle) t.action_cycle = *action_cycle;
      t.validate();
      opts.timing = t;
    }
    if (!scene.empty()) {
      opts.scene = load_scene_file(scene);
      if (opts.scene->model() != opts.model) throw Error(Errc::ModelMismatch, "scene is for another robot model");
    }
    RobotServer server(opts);
    server.start();
    if (announce) {
      std::printf("PORT %u\n", static_cast<unsigned>(server.port()));
      std::fflush(stdout);
    } else {
      std::cerr << "robot-server " << model << " listening on " << server.address().to_string() << '\n';
    }
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  } catch (const Error& e) {
    std::cerr << "robot-server: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
