// bench: scripted or random agents over many seeded episodes.
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "gymlink/bench.hpp"
#include "gymlink/server_manager.hpp"
#include "tool_paths.hpp"

using namespace gymlink;

int main(int argc, char** argv) {
  CLI::App app{"Benchmark runner"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a benchmark");
  std::string task = "mir_nav";
  std::string agent = "scripted";
  std::string mode = "fast";
  std::string manager_addr;
  std::string out;
  BenchmarkOptions opts;
  run->add_option("--task", task, "mir_nav or ur_reach")->check(CLI::IsMember({"mir_nav", "ur_reach"}));
  run->add_option("--agent", agent, "scripted or random")->check(CLI::IsMember({"scripted", "random"}));
  run->add_option("--episodes", opts.episodes, "episode count")->check(CLI::PositiveNumber);
  run->add_option("--seed", opts.seed, "run seed");
  run->add_option("--parallel", opts.parallel, "parallel environments")->check(CLI::PositiveNumber);
  run->add_option("--obstacles", opts.obstacles, "obstacles per mir_nav scene")->check(CLI::NonNegativeNumber);
  run->add_option("--mode", mode, "fast or realtime")->check(CLI::IsMember({"realtime", "fast"}));
  run->add_option("--manager", manager_addr, "server manager host:port (default: $GYMLINK_MANAGER_ADDR or in-process)");
  run->add_option("--log", opts.log_path, "transition log file");
  run->add_option("--out", out, "report file");

  auto* report = app.add_subcommand("report", "print a saved report");
  std::string report_path;
  report->add_option("file", report_path, "report file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  std::signal(SIGPIPE, SIG_IGN);

  try {
    if (report->parsed()) {
      const BenchmarkReport r = load_report(report_path);
      std::cout << format_report(r);
      return r.aborted == 0 ? 0 : 1;
    }

    opts.task = task_from_string(task);
    opts.agent = agent_from_string(agent);
    opts.mode = clock_mode_from_string(mode);
    if (manager_addr.empty()) {
      if (const char* env = std::getenv(kManagerAddrEnv)) manager_addr = env;
    }
    std::unique_ptr<ServerManager> local;
    Address manager;
    if (manager_addr.empty()) {
      ManagerOptions mo;
      mo.robot_server_path = sibling_executable("robot-server");
      mo.max_clusters = std::max(opts.parallel * 2, 4);
      local = std::make_unique<ServerManager>(mo);
      local->serve(0);
      manager = {"127.0.0.1", local->port()};
    } else {
      manager = Address::parse(manager_addr);
    }
    const BenchmarkReport r = run_benchmark(opts, manager);
    std::cout << format_report(r);
    if (!out.empty()) save_report(r, out);
    return r.aborted == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 2;
  }
}
