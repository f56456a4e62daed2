#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gymlink/bench.hpp"
#include "gymlink/env_core.hpp"
#include "gymlink/robot_state.hpp"
#include "oracles/workspace_mean.hpp"
#include "support.hpp"

using namespace gymlink;

namespace {

constexpr double kPi = std::numbers::pi;

struct DirectEnv {
  RobotServer server;
  Environment env;
  explicit DirectEnv(Task task, std::optional<std::uint64_t> seed = 1)
      : server([task] {
          RobotServerOptions o;
          o.model = model_for(task);
          return o;
        }()),
        env([&] {
          server.start();
          EnvConfig cfg = EnvConfig::defaults(task, server.address(), AddressKind::Direct);
          cfg.seed = seed;
          return cfg;
        }()) {}
};

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Internal;
}

}  // namespace

TEST_SUITE("env_core") {
  TEST_CASE("reward formula") {
    const RewardParams p = RewardParams::for_task(Task::MirNav);
    CHECK(compute_reward(5.0, 4.9, Outcome::Running, p) == doctest::Approx(1.0));
    CHECK(compute_reward(1.0, 1.2, Outcome::Running, p) == doctest::Approx(-2.0));
    CHECK(compute_reward(0.3, 0.1, Outcome::Success, p) == doctest::Approx(102.0));
    CHECK(compute_reward(0.3, 0.3, Outcome::Collision, p) == -100.0);
    CHECK(compute_reward(0.3, 0.3, Outcome::Timeout, p) == 0.0);
    RewardParams scaled = p;
    scaled.k_dist = 30.0;
    CHECK(compute_reward(2.0, 1.5, Outcome::Running, scaled) ==
          doctest::Approx(3.0 * compute_reward(2.0, 1.5, Outcome::Running, p)));
  }

  TEST_CASE("defaults per task") {
    const EnvConfig mir = EnvConfig::defaults(Task::MirNav, {}, AddressKind::Direct);
    CHECK(mir.max_steps == 500);
    CHECK(mir.timing.repeats() == 1);
    CHECK(mir.reward.success_radius == 0.3);
    const EnvConfig ur = EnvConfig::defaults(Task::UrReach, {}, AddressKind::Direct);
    CHECK(ur.max_steps == 300);
    CHECK(ur.timing.repeats() == 5);
    CHECK(ur.reward.success_radius == 0.05);
  }

  TEST_CASE("observation from state") {
    WorldState w = world_from_desired(RobotModel::Mir100, std::vector<double>{0, 0, 0, 1, 0, 0});
    Observation o = build_observation(make_robot_state(w), Task::MirNav, {1, 0, 0});
    REQUIRE(o.size() == 20);
    CHECK(o[0] == 1.0);
    CHECK(o[1] == 0.0);
    o = build_observation(make_robot_state(w), Task::MirNav, {0, 1, 0});
    CHECK(o[1] == doctest::Approx(kPi / 2));
    CHECK(o[4] == doctest::Approx(4.0));

    w = world_from_desired(RobotModel::Ur10, std::vector<double>{0, -1, 0, -1, 0, 0, 1, 0, 0});
    o = build_observation(make_robot_state(w), Task::UrReach, {0, 0, 1});
    REQUIRE(o.size() == 15);
    CHECK(o[0] == 1.0);
    CHECK(o[1] == 0.0);
    CHECK(o[2] == 0.0);
    CHECK(o[4] == -1.0);
    CHECK(code_of([&] { build_observation(make_robot_state(w), Task::MirNav, {}); }) == Errc::LayoutMismatch);
  }

  TEST_CASE("target sampler") {
    Rng rng(3);
    double z_sum = 0.0;
    constexpr int n = 100000;
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d p = from_spherical(sample_target_semisphere(rng));
      REQUIRE(target_in_workspace(p));
      REQUIRE(std::hypot(p.x(), p.y()) > 0.25);
      REQUIRE(p.norm() <= 1.15 + 1e-12);
      REQUIRE(p.z() >= 0.1 - 1e-12);
      z_sum += p.z();
    }
    // Height spread of the region is about 0.26 m, so 4 sigma is ~3.3e-3.
    CHECK(std::abs(z_sum / n - oracle::workspace_mean_z()) < 3.3e-3);
    Rng a(9), b(9), c(10);
    const auto sa = sample_target_semisphere(a);
    CHECK(sa == sample_target_semisphere(b));
    CHECK(sa != sample_target_semisphere(c));
  }

  TEST_CASE("mobile scene sampler") {
    Rng rng(4);
    for (int i = 0; i < 1000; ++i) {
      const MirScene s = sample_mir_scene(rng, 3);
      REQUIRE(s.obstacles.size() == 3);
      CHECK((s.robot.x < 0) != (s.target.x < 0));
      CHECK(std::abs(s.robot.x) <= 3.5);
      CHECK(std::abs(s.robot.y) <= 2.5);
      CHECK(std::abs(s.target.y) <= 2.5);
      std::vector<std::pair<double, double>> pts{{s.robot.x, s.robot.y}, {s.target.x, s.target.y}};
      for (const auto& b : s.obstacles) {
        CHECK(b.center_x >= std::min(s.robot.x, s.target.x));
        CHECK(b.center_x <= std::max(s.robot.x, s.target.x));
        pts.emplace_back(b.center_x, b.center_y);
      }
      for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = std::max<std::size_t>(a + 1, 2); b < pts.size(); ++b)
          CHECK(std::hypot(pts[a].first - pts[b].first, pts[a].second - pts[b].second) >= 0.8);
    }
  }

  TEST_CASE("arm scene sampler") {
    Rng rng(5);
    const TimingConfig t = TimingConfig::for_model(RobotModel::Ur10);
    for (int i = 0; i < 1000; ++i) {
      const UrScene s = sample_ur_scene(rng, t);
      CHECK(target_in_workspace(s.target));
      CHECK_FALSE(check_arm_collision(s.start).any());
      CHECK((forward_kinematics(s.goal) - s.target).norm() < 1e-6);
      CHECK(s.goal.cwiseAbs().maxCoeff() <= kPi);
    }
  }

  TEST_CASE("seeded reset is deterministic") {
    DirectEnv e(Task::MirNav);
    const Observation a = e.env.reset(42);
    const Observation b = e.env.reset(42);
    CHECK(a == b);
    CHECK(e.env.reset(43) != a);
  }

  TEST_CASE("zero action from rest") {
    DirectEnv e(Task::MirNav);
    e.env.reset(7);
    const std::vector<double> zero{0, 0};
    const Transition t = e.env.step(zero);
    CHECK(t.r == 0.0);
    CHECK_FALSE(t.done);
    CHECK(t.outcome == Outcome::Running);
    CHECK(t.s == t.s_next);
  }

  TEST_CASE("step preconditions") {
    DirectEnv e(Task::MirNav);
    const std::vector<double> zero{0, 0};
    CHECK(code_of([&] { e.env.step(zero); }) == Errc::InvalidArgument);
    e.env.reset(1);
    const std::vector<double> wide{1.5, 0};
    CHECK(code_of([&] { e.env.step(wide); }) == Errc::InvalidArgument);
    const std::vector<double> short_action{0};
    CHECK(code_of([&] { e.env.step(short_action); }) == Errc::InvalidArgument);
  }

  TEST_CASE("goal configuration reaches the target monotonically") {
    DirectEnv e(Task::UrReach);
    Observation obs = e.env.reset(11);
    const Action a = scripted_arm_agent(obs, *e.env.info().goal_joints);
    double last = e.env.info().distance;
    Transition t;
    do {
      t = e.env.step(a);
      CHECK(e.env.info().distance < last);
      last = e.env.info().distance;
    } while (!t.done);
    CHECK(t.outcome == Outcome::Success);
    CHECK(last <= 0.05);
    CHECK(code_of([&] { e.env.step(a); }) == Errc::InvalidArgument);
  }

  TEST_CASE("episode outcome and telescoping rewards") {
    DirectEnv e(Task::MirNav);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Observation obs = e.env.reset(seed);
      const double d0 = e.env.info().distance;
      double base = 0.0;
      Transition t;
      do {
        t = e.env.step(scripted_mobile_agent(obs));
        obs = t.s_next;
        base += t.r;
        CHECK(t.done == (t.outcome != Outcome::Running));
      } while (!t.done);
      if (t.outcome == Outcome::Success) base -= 100.0;
      if (t.outcome == Outcome::Collision) base += 100.0;
      CHECK(base == doctest::Approx(10.0 * (d0 - e.env.info().distance)).epsilon(1e-12));
    }
  }

  TEST_CASE("transition text round trip") {
    Transition t{{1, 2}, {0.5, -0.5}, 0.25, {3, -0.0}, true, Outcome::Collision};
    CHECK(transition_from_text(transition_to_text(t)) == t);
    CHECK(transition_to_text(t) ==
          R"({"a":[0.5,-0.5],"done":true,"outcome":"collision","r":0.25,"s":[1,2],"s_next":[3,-0.0]})");
  }

  TEST_CASE("manager-backed environment") {
    auto m = testing::start_manager();
    EnvConfig cfg = EnvConfig::defaults(Task::UrReach, {"127.0.0.1", m->port()}, AddressKind::Manager);
    std::string id;
    {
      Environment env(cfg);
      REQUIRE(env.cluster_id());
      id = *env.cluster_id();
      CHECK(m->check_cluster(id).status == ClusterStatus::Healthy);
      CHECK(env.reset(3).size() == 15);
    }
    CHECK(code_of([&] { m->check_cluster(id); }) == Errc::UnknownHandle);
  }

  TEST_CASE("unreachable address") {
    std::uint16_t port = 0;
    {
      RpcServer s;
      s.start(0);
      port = s.port();
    }
    EnvConfig cfg = EnvConfig::defaults(Task::MirNav, {"127.0.0.1", port}, AddressKind::Direct);
    CHECK(code_of([&] { Environment env(cfg); }) == Errc::ConnectionError);
    cfg.address_kind = AddressKind::Manager;
    CHECK(code_of([&] { Environment env(cfg); }) == Errc::ConnectionError);
  }

  TEST_CASE("lost server aborts the episode") {
    auto server = std::make_unique<RobotServer>(RobotServerOptions{});
    server->start();
    Environment env(EnvConfig::defaults(Task::MirNav, server->address(), AddressKind::Direct));
    env.reset(1);
    server.reset();
    const std::vector<double> zero{0, 0};
    CHECK(code_of([&] { env.step(zero); }) == Errc::EpisodeAborted);
  }
}
