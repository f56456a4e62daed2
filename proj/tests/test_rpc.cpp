#include <atomic>
#include <chrono>
#include <thread>

#include "doctest.h"
#include "gymlink/rpc.hpp"

using namespace gymlink;
using namespace std::chrono_literals;

namespace {

struct EchoServer {
  RpcServer server;
  EchoServer() {
    server.add_service("echo", [](const Payload& p) { return p; });
    server.add_service("sleep", [](const Payload& p) {
      std::this_thread::sleep_for(Duration(get_number(p, "s")));
      return p;
    });
    server.add_service("fail", [](const Payload&) -> Payload { throw Error(Errc::InvalidArgument, "bad input"); });
    server.start(0);
  }
  Address address() const { return {"127.0.0.1", server.port()}; }
};

}  // namespace

TEST_SUITE("rpc") {
  TEST_CASE("address parsing") {
    const Address a = Address::parse("10.0.0.2:5000");
    CHECK(a.host == "10.0.0.2");
    CHECK(a.port == 5000);
    CHECK(a.to_string() == "10.0.0.2:5000");
    CHECK_THROWS_AS(Address::parse("nohost"), Error);
    CHECK_THROWS_AS(Address::parse("h:99999"), Error);
  }

  TEST_CASE("request and reply") {
    EchoServer s;
    RpcClient c(s.address());
    const Payload p{{"x", 1.25}, {"v", std::vector<double>{1, 2}}};
    CHECK(c.call("echo", p) == p);
    CHECK(call(s.address(), "echo", p) == p);
  }

  TEST_CASE("remote errors carry their code") {
    EchoServer s;
    RpcClient c(s.address());
    try {
      c.call("fail", {});
      FAIL("no error");
    } catch (const RemoteError& e) {
      CHECK(e.remote_code() == Errc::InvalidArgument);
      CHECK(e.remote_detail() == "bad input");
    }
    try {
      c.call("nope", {});
      FAIL("no error");
    } catch (const RemoteError& e) {
      CHECK(e.remote_code() == Errc::UnknownService);
    }
    // The connection survives application errors.
    CHECK_FALSE(c.broken());
    CHECK(c.call("echo", {{"k", true}}).size() == 1);
  }

  TEST_CASE("pipelined replies may overtake") {
    EchoServer s;
    RpcClient c(s.address());
    auto slow = c.send("sleep", {{"s", 0.3}});
    auto fast = c.send("sleep", {{"s", 0.0}});
    const auto t0 = std::chrono::steady_clock::now();
    c.wait(fast, 1s);
    CHECK(std::chrono::steady_clock::now() - t0 < 250ms);
    CHECK(get_number(c.wait(slow, 1s), "s") == 0.3);
  }

  TEST_CASE("deadline") {
    EchoServer s;
    RpcClient c(s.address());
    try {
      c.call("sleep", {{"s", 0.5}}, 50ms);
      FAIL("no deadline");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::DeadlineExceeded);
    }
  }

  TEST_CASE("connection errors") {
    std::uint16_t port = 0;
    {
      EchoServer s;
      port = s.server.port();
    }
    CHECK_THROWS_WITH_AS(RpcClient({"127.0.0.1", port}), doctest::Contains("ConnectionError"), Error);

    auto s = std::make_unique<EchoServer>();
    RpcClient c(s->address());
    auto pending = c.send("sleep", {{"s", 1.0}});
    std::thread stopper([&] { s->server.stop(); });
    try {
      c.wait(pending, 3s);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ConnectionError);
    }
    stopper.join();
    CHECK(c.broken());
    try {
      c.call("echo", {});
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ConnectionError);
    }
  }

  TEST_CASE("many concurrent clients") {
    EchoServer s;
    std::atomic<int> ok{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 16; ++t) {
      threads.emplace_back([&, t] {
        RpcClient c(s.address());
        for (int i = 0; i < 50; ++i) {
          if (get_number(c.call("echo", {{"i", double(t * 100 + i)}}), "i") == t * 100 + i) ++ok;
        }
      });
    }
    for (auto& th : threads) th.join();
    CHECK(ok == 800);
  }
}
