#pragma once

#include <chrono>
#include <cstring>
#include <memory>

#include "gymlink/server_manager.hpp"

namespace testing {

inline gymlink::ManagerOptions manager_options(double health_period = 1.0) {
  gymlink::ManagerOptions o;
  o.robot_server_path = GYMLINK_ROBOT_SERVER;
  o.policy.health_period = health_period;
  return o;
}

inline std::unique_ptr<gymlink::ServerManager> start_manager(gymlink::ManagerOptions o = manager_options()) {
  auto m = std::make_unique<gymlink::ServerManager>(std::move(o));
  m->serve(0);
  return m;
}

inline bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace testing
