#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "gymlink/wire_protocol.hpp"

namespace gymlink {

using Duration = std::chrono::duration<double>;

inline constexpr Duration kDefaultDeadline{1.0};

struct Address {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  // Accepts "host:port".
  static Address parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const Address&, const Address&) = default;
};

// Raised when the peer answered with an error-kind message. `remote_code` is
// the code the peer reported (RejectedCommand, InvalidState, ...).
class RemoteError : public Error {
 public:
  RemoteError(Errc remote_code, const std::string& what)
      : Error(Errc::RemoteError, std::string(to_string(remote_code)) + ": " + what),
        remote_code_(remote_code),
        remote_detail_(what) {}

  Errc remote_code() const noexcept { return remote_code_; }
  const std::string& remote_detail() const noexcept { return remote_detail_; }

 private:
  Errc remote_code_;
  std::string remote_detail_;
};

// One TCP connection with pipelined requests. Responses are matched to their
// request by correlation id, so they may arrive in any order. A connection
// that saw a transport or framing failure stays broken: every later call
// fails with ConnectionError.
class RpcClient {
 public:
  explicit RpcClient(const Address& address, Duration connect_timeout = kDefaultDeadline);
  ~RpcClient();

  RpcClient(const RpcClient&) = delete;
  RpcClient& operator=(const RpcClient&) = delete;

  struct Pending {
    std::uint64_t id = 0;
    std::future<Payload> result;
  };

  Pending send(const std::string& service, const Payload& payload);
  Payload wait(Pending& pending, Duration deadline);
  Payload call(const std::string& service, const Payload& payload, Duration deadline = kDefaultDeadline);

  bool broken() const noexcept { return broken_.load(); }
  const Address& address() const noexcept { return address_; }
  void close();

 private:
  void read_loop();
  void fail_all(Errc code, const std::string& why);

  Address address_;
  int fd_ = -1;
  std::atomic<bool> broken_{false};
  std::mutex write_mutex_;
  std::mutex pending_mutex_;
  std::map<std::uint64_t, std::promise<Payload>> pending_;
  std::uint64_t next_id_ = 1;
  std::thread reader_;
};

// One-shot call on a fresh connection.
Payload call(const Address& address, const std::string& service, const Payload& payload,
             Duration deadline = kDefaultDeadline);

class RpcServer {
 public:
  using Handler = std::function<Payload(const Payload&)>;

  RpcServer() = default;
  ~RpcServer();

  RpcServer(const RpcServer&) = delete;
  RpcServer& operator=(const RpcServer&) = delete;

  void add_service(const std::string& name, Handler handler);

  // Binds and starts accepting. Port 0 picks an ephemeral port.
  void start(std::uint16_t port, const std::string& host = "127.0.0.1");
  void stop();

  std::uint16_t port() const noexcept { return port_; }

 private:
  struct Connection;

  void accept_loop();
  void serve(const std::shared_ptr<Connection>& conn);
  Message dispatch(const Message& request) const;

  std::map<std::string, Handler> services_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex conn_mutex_;
  std::vector<std::shared_ptr<Connection>> connections_;
};

}  // namespace gymlink
