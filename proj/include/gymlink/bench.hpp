#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gymlink/env_core.hpp"

namespace gymlink {

enum class AgentKind { Scripted, Random };
std::string_view to_string(AgentKind kind);
AgentKind agent_from_string(std::string_view name);

using Action = std::vector<double>;

// Potential field: attraction along the target bearing plus repulsion from
// sectors closer than 1 m.
Action scripted_mobile_agent(std::span<const double> obs);
// The normalized goal configuration, every step.
Action scripted_arm_agent(std::span<const double> obs, const Joints& goal);
Action random_action(Rng& rng, std::size_t size);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t episode_seed(std::uint64_t run_seed, std::uint64_t episode);

struct BenchmarkOptions {
  Task task = Task::MirNav;
  AgentKind agent = AgentKind::Scripted;
  int episodes = 100;
  std::uint64_t seed = 0;
  int parallel = 1;
  int obstacles = 3;
  ClockMode mode = ClockMode::Fast;
  std::string log_path;  // transitions, one canonical line each; empty = none
};

struct BenchmarkReport {
  std::string task;
  std::string agent;
  std::uint64_t seed = 0;
  int episodes = 0;
  int successes = 0;
  int collisions = 0;
  int timeouts = 0;
  int aborted = 0;  // not counted in successes, collisions or timeouts
  double success_rate = 0.0;  // successes / episodes
  double mean_episode_reward = 0.0;  // over finished episodes
  double mean_steps = 0.0;
  double wall_time = 0.0;       // s

  friend bool operator==(const BenchmarkReport&, const BenchmarkReport&) = default;
};

std::string report_to_text(const BenchmarkReport& r);
BenchmarkReport report_from_text(const std::string& text);
void save_report(const BenchmarkReport& r, const std::string& path);
BenchmarkReport load_report(const std::string& path);
std::string format_report(const BenchmarkReport& r);

struct EpisodeResult {
  Outcome outcome = Outcome::Running;
  bool aborted = false;
  int steps = 0;
  double reward = 0.0;
  std::vector<std::string> log;
};

// Runs one seeded episode on an existing environment.
EpisodeResult run_episode(Environment& env, AgentKind agent, std::uint64_t seed, bool keep_log);

// Each worker holds one manager-spawned cluster.
BenchmarkReport run_benchmark(const BenchmarkOptions& options, const Address& manager);

}  // namespace gymlink
