#include "gymlink/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <thread>

#include "gymlink/robot_state.hpp"
#include "gymlink/wire_protocol.hpp"

namespace gymlink {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSectorWidth = 2.0 * kPi / mir::kScanSectors;
constexpr double kInfluence = 1.0;  // m, repulsion range
constexpr double kRepulsionGain = 0.6;
constexpr double kTangentGain = 1.0;
constexpr double kSlowGain = 2.0;  // forward speed per meter of clearance
constexpr double kMinGap = 0.03;  // m
constexpr double kTurnGain = 1.5;

}  // namespace

std::string_view to_string(AgentKind kind) { return kind == AgentKind::Scripted ? "scripted" : "random"; }

AgentKind agent_from_string(std::string_view name) {
  if (name == "scripted") return AgentKind::Scripted;
  if (name == "random") return AgentKind::Random;
  throw Error(Errc::InvalidArgument, "unknown agent '" + std::string(name) + "'");
}

Action scripted_mobile_agent(std::span<const double> obs) {
  using namespace mir_layout;
  const double r = obs[kTargetR];
  const double bearing = obs[kTargetTheta];
  double fx = std::cos(bearing);
  double fy = std::sin(bearing);
  double front = mir::kLaserMaxRange;
  for (int k = 0; k < mir::kScanSectors; ++k) {
    const double d = obs[kScan0 + k];
    const double angle = (k + 0.5) * kSectorWidth;
    if (std::abs(normalize_angle(angle)) < kPi / 2.0) front = std::min(front, d);
    if (d >= kInfluence || d > r) continue;  // nothing to avoid beyond the target
    const double clearance = std::max(d - mir::kRobotRadius, 0.05);
    const double push = kRepulsionGain * (1.0 / clearance - 1.0 / (kInfluence - mir::kRobotRadius));
    // Slide past on the side the target lies.
    const double side = normalize_angle(bearing - angle) >= 0.0 ? 1.0 : -1.0;
    const double tangent = angle + side * kPi / 2.0;
    fx += push * (kTangentGain * std::cos(tangent) - std::cos(angle));
    fy += push * (kTangentGain * std::sin(tangent) - std::sin(angle));
  }
  const double heading = std::atan2(fy, fx);
  const double w = std::clamp(kTurnGain * heading, -1.0, 1.0);
  double v = std::max(0.0, std::cos(heading));
  v = std::min(v, std::max(0.0, kSlowGain * (front - mir::kRobotRadius - kMinGap)));
  v = std::min(v, std::max(r, 0.2));
  return {std::clamp(v, -1.0, 1.0), w};
}

Action scripted_arm_agent(std::span<const double>, const Joints& goal) {
  Action a(ur::kJoints);
  for (int i = 0; i < ur::kJoints; ++i) a[i] = goal[i] / ur::kJointLimit;
  return a;
}

Action random_action(Rng& rng, std::size_t size) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Action a(size);
  for (double& v : a) v = u(rng);
  return a;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t episode_seed(std::uint64_t run_seed, std::uint64_t episode) {
  return splitmix64(splitmix64(run_seed) + episode);
}

std::string report_to_text(const BenchmarkReport& r) {
  return to_canonical_text({{"task", r.task},
                            {"agent", r.agent},
                            {"seed", static_cast<double>(r.seed)},
                            {"episodes", static_cast<double>(r.episodes)},
                            {"successes", static_cast<double>(r.successes)},
                            {"collisions", static_cast<double>(r.collisions)},
                            {"timeouts", static_cast<double>(r.timeouts)},
                            {"aborted", static_cast<double>(r.aborted)},
                            {"success_rate", r.success_rate},
                            {"mean_episode_reward", r.mean_episode_reward},
                            {"mean_steps", r.mean_steps},
                            {"wall_time", r.wall_time}});
}

BenchmarkReport report_from_text(const std::string& text) {
  const Payload p = payload_from_text(text);
  BenchmarkReport r;
  r.task = get_string(p, "task");
  r.agent = get_string(p, "agent");
  r.seed = static_cast<std::uint64_t>(get_number(p, "seed"));
  r.episodes = static_cast<int>(get_number(p, "episodes"));
  r.successes = static_cast<int>(get_number(p, "successes"));
  r.collisions = static_cast<int>(get_number(p, "collisions"));
  r.timeouts = static_cast<int>(get_number(p, "timeouts"));
  r.aborted = static_cast<int>(get_number(p, "aborted"));
  r.success_rate = get_number(p, "success_rate");
  r.mean_episode_reward = get_number(p, "mean_episode_reward");
  r.mean_steps = get_number(p, "mean_steps");
  r.wall_time = get_number(p, "wall_time");
  return r;
}

void save_report(const BenchmarkReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::InvalidArgument, "cannot write " + path);
  out << report_to_text(r) << '\n';
}

BenchmarkReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidArgument, "cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return report_from_text(text);
}

std::string format_report(const BenchmarkReport& r) {
  std::ostringstream out;
  out << "task        " << r.task << '\n'
      << "agent       " << r.agent << '\n'
      << "seed        " << r.seed << '\n'
      << "episodes    " << r.episodes << '\n'
      << "successes   " << r.successes << '\n'
      << "collisions  " << r.collisions << '\n'
      << "timeouts    " << r.timeouts << '\n'
      << "aborted     " << r.aborted << '\n'
      << "success     " << r.success_rate << '\n'
      << "mean reward " << r.mean_episode_reward << '\n'
      << "mean steps  " << r.mean_steps << '\n'
      << "wall time   " << r.wall_time << " s\n";
  return out.str();
}

EpisodeResult run_episode(Environment& env, AgentKind agent, std::uint64_t seed, bool keep_log) {
  EpisodeResult result;
  Rng agent_rng(splitmix64(seed));
  try {
    Observation obs = env.reset(seed);
    while (true) {
      Action a;
      if (agent == AgentKind::Random) {
        a = random_action(agent_rng, env.action_size());
      } else if (env.config().task == Task::MirNav) {
        a = scripted_mobile_agent(obs);
      } else {
        a = scripted_arm_agent(obs, *env.info().goal_joints);
      }
      const Transition t = env.step(a);
      ++result.steps;
      result.reward += t.r;
      if (keep_log) result.log.push_back(transition_to_text(t));
      obs = t.s_next;
      if (t.done) {
        result.outcome = t.outcome;
        return result;
      }
    }
  } catch (const Error&) {
    result.aborted = true;
    result.log.clear();
  }
  return result;
}

BenchmarkReport run_benchmark(const BenchmarkOptions& options, const Address& manager) {
  if (options.episodes <= 0) throw Error(Errc::InvalidArgument, "episodes must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<EpisodeResult> results(options.episodes);
  std::atomic<int> next{0};
  const bool keep_log = !options.log_path.empty();
  const int workers = std::clamp(options.parallel, 1, options.episodes);

  auto worker = [&] {
    EnvConfig cfg = EnvConfig::defaults(options.task, manager, AddressKind::Manager);
    cfg.mode = options.mode;
    cfg.obstacles = options.obstacles;
    std::unique_ptr<Environment> env;
    for (int k = next++; k < options.episodes; k = next++) {
      if (!env) {
        try {
          env = make_env(cfg);
        } catch (const Error&) {
          results[k].aborted = true;
          continue;
        }
      }
      results[k] = run_episode(*env, options.agent, episode_seed(options.seed, k), keep_log);
      if (results[k].aborted) env.reset();  // fresh cluster for the next episode
    }
  };
  std::vector<std::thread> threads;
  for (int i = 0; i < workers; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  BenchmarkReport report;
  report.task = std::string(to_string(options.task));
  report.agent = std::string(to_string(options.agent));
  report.seed = options.seed;
  report.episodes = options.episodes;
  int finished = 0;
  double reward = 0.0, steps = 0.0;
  for (const auto& r : results) {
    if (r.aborted) {
      ++report.aborted;
      continue;
    }
    ++finished;
    reward += r.reward;
    steps += r.steps;
    report.successes += r.outcome == Outcome::Success;
    report.collisions += r.outcome == Outcome::Collision;
    report.timeouts += r.outcome == Outcome::Timeout;
  }
  report.success_rate = static_cast<double>(report.successes) / report.episodes;
  if (finished > 0) {
    report.mean_episode_reward = reward / finished;
    report.mean_steps = steps / finished;
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (keep_log) {
    std::ofstream out(options.log_path);
    if (!out) throw Error(Errc::InvalidArgument, "cannot write " + options.log_path);
    for (const auto& r : results) {
      for (const auto& line : r.log) out << line << '\n';
    }
  }
  return report;
}

}  // namespace gymlink
