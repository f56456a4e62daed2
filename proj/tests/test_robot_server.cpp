#include <chrono>
#include <cmath>
#include <future>
#include <numbers>
#include <thread>

#include "doctest.h"
#include "gymlink/robot_server.hpp"

using namespace gymlink;
using namespace std::chrono_literals;

namespace {

constexpr double kPi = std::numbers::pi;

const std::vector<double> kMobileScene{-2, 0, 0, 2, 0, 0};
const std::vector<double> kArmScene{0, -kPi / 2, 0, -kPi / 2, 0, 0, 1.0, 0.8, 0.3};

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Internal;
}

RobotServerOptions options(RobotModel model, ClockMode mode = ClockMode::Fast) {
  RobotServerOptions o;
  o.model = model;
  o.mode = mode;
  return o;
}

}  // namespace

TEST_SUITE("robot_server") {
  TEST_CASE("uninitialized server") {
    RobotServer s(options(RobotModel::Mir100));
    s.start();
    CHECK_FALSE(s.health().initialized);
    CHECK(code_of([&] { s.get_state(); }) == Errc::NotInitialized);
    CHECK(code_of([&] { s.send_action(std::vector<double>{0, 0}); }) == Errc::NotInitialized);
  }

  TEST_CASE("fast mode advances repeats ticks per action and nothing while idle") {
    RobotServer s(options(RobotModel::Ur10));
    s.start();
    s.set_state(kArmScene);
    const double c0 = s.get_state()[ur_layout::kClock];
    std::this_thread::sleep_for(100ms);
    CHECK(s.get_state()[ur_layout::kClock] == c0);
    const std::vector<double> a{0.1, -0.5, 0, -0.5, 0, 0};
    const ActionResult r = s.send_action(a);
    CHECK(r.success);
    CHECK(r.clock_end - r.clock_start == doctest::Approx(5 * 0.008).epsilon(1e-12));
    const auto st = s.get_state();
    CHECK(st[ur_layout::kClock] == doctest::Approx(c0 + 0.04).epsilon(1e-12));
    CHECK(st[ur_layout::kJoint0] == doctest::Approx(0.04));  // 5 ticks at 1 rad/s
  }

  TEST_CASE("mobile action moves the base one cycle") {
    RobotServer s(options(RobotModel::Mir100));
    s.start();
    s.set_state(kMobileScene);
    s.send_action(std::vector<double>{1.0, 0.0});
    const auto st = s.get_state();
    CHECK(st[mir_layout::kPoseX] == doctest::Approx(-1.95));
    CHECK(st[mir_layout::kLinVel] == 0.5);
    CHECK(st[mir_layout::kClock] == doctest::Approx(0.1));
    CHECK(st[mir_layout::kTargetR] == doctest::Approx(3.95));
  }

  TEST_CASE("second action during execution is rejected") {
    RobotServer s(options(RobotModel::Ur10, ClockMode::RealTime));
    s.start();
    s.set_state(kArmScene);
    const std::vector<double> a{0, -0.5, 0, -0.5, 0, 0};
    auto first = std::async(std::launch::async, [&] { return s.send_action(a); });
    std::this_thread::sleep_for(10ms);
    CHECK(code_of([&] { s.send_action(a); }) == Errc::RejectedCommand);
    CHECK(first.get().success);
  }

  TEST_CASE("set_state interrupts a running action and keeps the clock") {
    RobotServer s(options(RobotModel::Ur10, ClockMode::RealTime));
    s.start();
    s.set_state(kArmScene);
    const std::vector<double> a{0, -0.5, 0, -0.5, 0, 0};
    auto first = std::async(std::launch::async, [&] { return code_of([&] { s.send_action(a); }); });
    std::this_thread::sleep_for(15ms);
    const double before = s.get_state()[ur_layout::kClock];
    s.set_state(kArmScene);
    CHECK(first.get() == Errc::ExecutionInterrupted);
    CHECK(s.get_state()[ur_layout::kClock] >= before);
    CHECK(s.send_action(a).success);
  }

  TEST_CASE("invalid requests") {
    RobotServer s(options(RobotModel::Mir100));
    s.start();
    CHECK(code_of([&] { s.set_state(std::vector<double>{9, 0, 0, 0, 0, 0}); }) == Errc::InvalidState);
    s.set_state(kMobileScene);
    CHECK(code_of([&] { s.send_action(std::vector<double>{2, 0}); }) == Errc::InvalidArgument);
    CHECK(code_of([&] { s.send_action(std::vector<double>{0, 0, 0}); }) == Errc::InvalidArgument);
  }

  TEST_CASE("heartbeat runs while idle and stops when frozen") {
    RobotServer s(options(RobotModel::Mir100));
    s.start();
    s.set_state(kMobileScene);
    const auto h0 = s.health().heartbeat;
    std::this_thread::sleep_for(100ms);
    const auto h1 = s.health().heartbeat;
    CHECK(h1 > h0);
    s.inject_fault(Fault::Freeze);
    std::this_thread::sleep_for(50ms);
    const auto h2 = s.health().heartbeat;
    std::this_thread::sleep_for(100ms);
    CHECK(s.health().heartbeat == h2);
  }

  TEST_CASE("corrupt_state publishes NaN") {
    RobotServer s(options(RobotModel::Mir100));
    s.start();
    s.set_state(kMobileScene);
    s.inject_fault(Fault::CorruptState);
    CHECK(std::isnan(s.get_state()[0]));
  }

  TEST_CASE("services over the wire") {
    RobotServer s(options(RobotModel::Mir100));
    s.start();
    RpcClient c(s.address());
    CHECK(get_string(c.call("health", {}), "model") == "mir100");
    c.call("set_state", {{"desired", kMobileScene}});
    const Payload r = c.call("send_action", {{"action", std::vector<double>{0.5, 0.0}}});
    CHECK(get_bool(r, "success"));
    CHECK(get_array(c.call("get_state", {}), "state").size() == 25);
    try {
      c.call("send_action", {{"action", std::vector<double>{0.5}}});
      FAIL("accepted");
    } catch (const RemoteError& e) {
      CHECK(e.remote_code() == Errc::InvalidArgument);
    }
    try {
      c.call("inject_fault", {{"fault", std::string("meteor")}});
      FAIL("accepted");
    } catch (const RemoteError& e) {
      CHECK(e.remote_code() == Errc::InvalidArgument);
    }
  }

  TEST_CASE("scene at start-up") {
    RobotServerOptions o = options(RobotModel::Mir100);
    o.scene = world_from_desired(RobotModel::Mir100, kMobileScene);
    RobotServer s(o);
    s.start();
    CHECK(s.health().initialized);
    o.model = RobotModel::Ur10;
    CHECK(code_of([&] { RobotServer bad(o); }) == Errc::ModelMismatch);
  }
}
